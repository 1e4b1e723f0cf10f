#![allow(clippy::approx_constant)]
// Generated from an independent evaluation with Python's `math` module at
// t = 0.7, x = [0.3, -1.2, 2.5].
pub const T: f64 = 0.7;
pub const X: [f64; 3] = [0.3, -1.2, 2.5];

pub const VALID: [(&str, f64); 50] = [
    ("1+2*3", 7.0),
    ("(1+2)*3", 9.0),
    ("2^3^2", 512.0),
    ("-2^2", -4.0),
    ("2^-1", 0.5),
    ("10/4/2", 1.25),
    ("7-3-2", 2.0),
    ("1.5e3", 1500.0),
    ("2.5E-2*4", 0.1),
    (".5+1.", 1.5),
    ("pi", 3.141592653589793),
    ("t", 0.7),
    ("x1+x2+x3", 1.6),
    ("x1*x2-x3", -2.86),
    ("--x2", -1.2),
    ("-x1^2", -0.09),
    ("(-x1)^2", 0.09),
    ("x3^0.5", 1.5811388300841898),
    ("x2^3", -1.7279999999999998),
    ("x2^-2", 0.6944444444444445),
    ("sin(t)", 0.644217687237691),
    ("cos(x3)", -0.8011436155469337),
    ("tan(x1)", 0.30933624960962325),
    ("exp(-t)", 0.4965853037914095),
    ("log(x3)", 0.9162907318741551),
    ("sqrt(x3)", 1.5811388300841898),
    ("abs(x2)", 1.2),
    ("sign(x2)", -1.0),
    ("sign(0)", 0.0),
    ("step(t-0.7)", 1.0),
    ("step(x2)", 0.0),
    ("min(x1,x2)", -1.2),
    ("max(x1, x3)", 2.5),
    ("0.05*sin(x3)", 0.02992360720519783),
    ("0.5*sin(t)+4", 4.322108843618846),
    ("0.5*sin(2*t)", 0.49272486499423007),
    ("step(t)", 1.0),
    ("sin(x1)^2+cos(x1)^2", 1.0),
    ("exp(log(x3))", 2.5),
    ("sqrt(x1^2+x2^2)", 1.2369316876852983),
    ("1/(1+exp(-x2))", 0.23147521650098238),
    ("max(min(x1,x3),x2)", 0.3),
    ("abs(sin(pi*t))", 0.8090169943749475),
    ("x1*x2*x3/t", -1.2857142857142856),
    ("2*pi*t", 4.39822971502571),
    ("(x1+x2)*(x2-x3)/(t+1)", 1.9588235294117646),
    ("-(-(-x3))", -2.5),
    ("3 - -2", 5.0),
    ("tan(t)*cos(t)", 0.6442176872376911),
    ("exp(x2)^2 - exp(2*x2)", 1.3877787807814457e-17),
];

/// Malformed inputs parsed with `n = 3`, with the byte offset of the error.
pub const MALFORMED: [(&str, usize); 15] = [
    ("", 0),
    ("1+", 2),
    ("(1+2", 4),
    ("1+*2", 2),
    ("foo(1)", 0),
    ("x4", 0),
    ("x1 + x0", 5),
    ("sin 1", 4),
    ("min(1)", 0),
    ("2 $ 3", 2),
    ("1e", 1),
    ("3 4", 2),
    ("max(1,2,3)", 0),
    ("sin()", 4),
    ("x1 * )", 5),
];
