//! Trace export as CSV with 17 significant digits per value.

use std::io::{self, Write};

use vaftc_core::engine::SimTrace;

/// Formats `v` like C's `printf("%.17g", v)`.
pub fn fmt_g17(v: f64) -> String {
    const P: i32 = 17;
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();

    if !(-4..P).contains(&exp) {
        let mut m = format!("{}.{}", &digits[..1], &digits[1..]);
        trim_fraction(&mut m);
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{esign}{:02}", exp.abs());
    }
    let mut out = if exp >= 0 {
        let split = (exp + 1) as usize;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    trim_fraction(&mut out);
    format!("{sign}{out}")
}

fn trim_fraction(s: &mut String) {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
}

fn indexed(name: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{name}{i}")).collect()
}

fn outputs(name: &str, l: usize) -> Vec<String> {
    if l == 1 {
        vec![name.to_string()]
    } else {
        indexed(name, l)
    }
}

/// Column names for state dimension `n` and output dimension `l`.
pub fn header(n: usize, l: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(indexed("xd", n));
    h.extend(indexed("xhat", n));
    h.extend(indexed("xf", n));
    h.extend(["u".to_string(), "uf".to_string()]);
    h.extend(indexed("M", n));
    h.extend(["N", "dhat", "e_norm", "xtilde_norm"].map(String::from));
    h.extend(outputs("yd", l));
    h.extend(outputs("yhat", l));
    h.extend(outputs("yf", l));
    h
}

pub fn write_trace<W: Write>(tr: &SimTrace, mut w: W) -> io::Result<()> {
    let Some(first) = tr.rows.first() else {
        return Ok(());
    };
    let (n, l) = (first.x_hat.len(), first.y_d.len());
    writeln!(w, "{}", header(n, l).join(","))?;
    let mut line = String::new();
    for r in &tr.rows {
        line.clear();
        let values = std::iter::once(r.t)
            .chain(r.x_d.iter().copied())
            .chain(r.x_hat.iter().copied())
            .chain(r.x_f.iter().copied())
            .chain([r.u, r.u_f])
            .chain(r.adaptive.m.iter().copied())
            .chain([r.adaptive.n, r.adaptive.d_hat, r.e_norm(), r.x_tilde_norm()])
            .chain(r.y_d.iter().copied())
            .chain(r.y_hat.iter().copied())
            .chain(r.y_f.iter().copied());
        for (i, v) in values.enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&fmt_g17(v));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}
