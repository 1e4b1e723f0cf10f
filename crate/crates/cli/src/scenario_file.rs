//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! [system]
//! n = 3
//! A = 0, 1, 0; 0, 0, 1; -1, -2, -3
//! b = 0; 0; 1
//! C = 1, 1, 1
//!
//! [faults]
//! at = 15 kind = loss theta = 0.65
//! at = 25 kind = additive signal = 0.5*sin(2*t)
//! ```
//!
//! Matrices are rows separated by `;` with entries separated by `,`;
//! vectors are comma-separated. Fault lines are `key = value` pairs on one
//! line, with `signal = <expr>` last. Unknown sections, unknown keys and
//! repeated keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;
use vaftc_core::engine::{Mode, Scenario, DEFAULT_EPS_BAND};
use vaftc_core::exprlang::{parse as parse_expr, Expr};
use vaftc_core::faults::{FaultEvent, FaultKind, FaultSchedule};
use vaftc_core::numerics::{Mat, SYMMETRY_TOL};
use vaftc_core::plant::{
    DisturbanceChannel, LinearCore, NonlinearPair, ReferenceModel, DEFAULT_G_MIN,
};
use vaftc_core::verify::{synthesize_p, ConditionLabel};
use vaftc_core::virtual_actuator::{AdaptationConfig, MuRate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    AtLine { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn at_line(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::AtLine {
        line,
        message: message.into(),
    }
}

const SECTIONS: [(&str, &[&str]); 7] = [
    ("system", &["n", "A", "b", "C"]),
    ("nonlinearity", &["f", "g", "g_min"]),
    ("reference", &["A_d", "B_d", "r", "P1"]),
    ("disturbance_channel", &["mode", "E", "scale"]),
    (
        "adaptation",
        &[
            "gamma1",
            "gamma2",
            "gamma3",
            "P",
            "theta_design",
            "d_tilde_max",
            "d_dot_max",
            "mu_rate",
        ],
    ),
    ("faults", &[]),
    (
        "run",
        &["t_end", "h", "mode", "x0_hat", "x0_f", "x0_d", "eps_band"],
    ),
];

#[derive(Debug, Default)]
struct Section {
    header_line: usize,
    keys: BTreeMap<String, (usize, String)>,
}

#[derive(Debug, Default)]
struct Raw {
    sections: BTreeMap<&'static str, Section>,
    faults: Vec<(usize, String)>,
}

fn split_sections(text: &str) -> Result<Raw, ScenarioError> {
    let mut raw = Raw::default();
    let mut current: Option<&'static str> = None;
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| at_line(line, "section header is missing `]`"))?
                .trim();
            let (known, _) = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| at_line(line, format!("unknown section [{name}]")))?;
            if raw.sections.contains_key(known) {
                return Err(at_line(line, format!("section [{name}] appears twice")));
            }
            raw.sections.insert(
                known,
                Section {
                    header_line: line,
                    ..Section::default()
                },
            );
            current = Some(known);
            continue;
        }
        let section = current.ok_or_else(|| at_line(line, "entry before any section header"))?;
        if section == "faults" {
            raw.faults.push((line, content.to_string()));
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| at_line(line, "expected `key = value`"))?;
        let key = key.trim();
        let allowed = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, k)| *k)
            .unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(at_line(line, format!("unknown key `{key}` in [{section}]")));
        }
        let sec = raw
            .sections
            .get_mut(section)
            .expect("current section exists");
        if sec.keys.contains_key(key) {
            return Err(at_line(
                line,
                format!("key `{key}` given twice in [{section}]"),
            ));
        }
        sec.keys
            .insert(key.to_string(), (line, value.trim().to_string()));
    }
    Ok(raw)
}

fn parse_number(line: usize, s: &str) -> Result<f64, ScenarioError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| at_line(line, format!("`{}` is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(at_line(line, format!("`{}` is not finite", s.trim())));
    }
    Ok(v)
}

fn parse_vector(line: usize, s: &str) -> Result<Vec<f64>, ScenarioError> {
    s.split(',').map(|p| parse_number(line, p)).collect()
}

fn parse_matrix(line: usize, s: &str) -> Result<Mat, ScenarioError> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|r| parse_vector(line, r))
        .collect::<Result<_, _>>()?;
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(at_line(line, "matrix rows have different lengths"));
    }
    Mat::from_vec(rows.len(), cols, rows.concat()).map_err(|e| at_line(line, e.to_string()))
}

fn parse_expression(line: usize, s: &str, n: usize) -> Result<Expr, ScenarioError> {
    parse_expr(s, n).map_err(|e| at_line(line, format!("in `{s}`: {e}")))
}

struct Lookup<'a> {
    name: &'static str,
    section: Option<&'a Section>,
}

impl<'a> Lookup<'a> {
    fn new(raw: &'a Raw, name: &'static str) -> Self {
        Self {
            name,
            section: raw.sections.get(name),
        }
    }

    fn header_line(&self) -> usize {
        self.section.map_or(0, |s| s.header_line)
    }

    fn get(&self, key: &str) -> Option<(usize, &'a str)> {
        self.section
            .and_then(|s| s.keys.get(key))
            .map(|(l, v)| (*l, v.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &'a str), ScenarioError> {
        self.get(key).ok_or_else(|| match self.section {
            Some(s) => at_line(s.header_line, format!("[{}] is missing `{key}`", self.name)),
            None => ScenarioError::Invalid(format!("missing section [{}]", self.name)),
        })
    }

    fn number(&self, key: &str) -> Result<f64, ScenarioError> {
        let (l, v) = self.require(key)?;
        parse_number(l, v)
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64, ScenarioError> {
        self.get(key)
            .map_or(Ok(default), |(l, v)| parse_number(l, v))
    }

    fn matrix(&self, key: &str) -> Result<(usize, Mat), ScenarioError> {
        let (l, v) = self.require(key)?;
        Ok((l, parse_matrix(l, v)?))
    }
}

fn parse_fault(line: usize, text: &str) -> Result<FaultEvent, ScenarioError> {
    let (head, signal) = match text.find("signal") {
        Some(pos) => {
            let rest = text[pos + "signal".len()..].trim_start();
            let expr = rest
                .strip_prefix('=')
                .ok_or_else(|| at_line(line, "expected `signal = <expr>`"))?
                .trim();
            (&text[..pos], Some(expr))
        }
        None => (text, None),
    };
    let spaced = head.replace('=', " = ");
    let toks: Vec<&str> = spaced.split_whitespace().collect();
    if toks.len() % 3 != 0 || toks.chunks(3).any(|c| c[1] != "=") {
        return Err(at_line(line, "fault entries must be `key = value` pairs"));
    }
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for c in toks.chunks(3) {
        if !["at", "kind", "theta"].contains(&c[0]) {
            return Err(at_line(line, format!("unknown fault key `{}`", c[0])));
        }
        if fields.insert(c[0], c[2]).is_some() {
            return Err(at_line(line, format!("fault key `{}` given twice", c[0])));
        }
    }
    let at = parse_number(
        line,
        fields
            .get("at")
            .ok_or_else(|| at_line(line, "fault is missing `at`"))?,
    )?;
    let kind = *fields
        .get("kind")
        .ok_or_else(|| at_line(line, "fault is missing `kind`"))?;
    let expect_signal = |sig: Option<&str>| {
        sig.ok_or_else(|| at_line(line, format!("{kind} fault needs `signal = <expr>`")))
            .and_then(|s| parse_expression(line, s, 0))
    };
    let event = match kind {
        "loss" => {
            if signal.is_some() {
                return Err(at_line(line, "loss fault takes `theta`, not `signal`"));
            }
            let theta = parse_number(
                line,
                fields
                    .get("theta")
                    .ok_or_else(|| at_line(line, "loss fault needs `theta`"))?,
            )?;
            FaultEvent::loss(at, theta)
        }
        "additive" | "disturbance" => {
            if fields.contains_key("theta") {
                return Err(at_line(line, format!("{kind} fault does not take `theta`")));
            }
            let sig = expect_signal(signal)?;
            if kind == "additive" {
                FaultEvent::additive(at, sig)
            } else {
                FaultEvent::disturbance(at, sig)
            }
        }
        other => return Err(at_line(line, format!("unknown fault kind `{other}`"))),
    };
    FaultSchedule::new(vec![event.clone()]).map_err(|e| at_line(line, e.to_string()))?;
    Ok(event)
}

fn column(line: usize, m: Mat, n: usize, name: &str) -> Result<Mat, ScenarioError> {
    if m.cols() == 1 && m.rows() == n {
        Ok(m)
    } else {
        Err(at_line(
            line,
            format!("{name} must be {n}x1, got {}x{}", m.rows(), m.cols()),
        ))
    }
}

fn square(line: usize, m: Mat, n: usize, name: &str) -> Result<Mat, ScenarioError> {
    if m.rows() == n && m.cols() == n {
        Ok(m)
    } else {
        Err(at_line(
            line,
            format!("{name} must be {n}x{n}, got {}x{}", m.rows(), m.cols()),
        ))
    }
}

fn symmetric(line: usize, m: Mat, name: &str) -> Result<Mat, ScenarioError> {
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(at_line(
            line,
            format!("{name} is not symmetric (asymmetry {asym:e})"),
        ));
    }
    Ok(m)
}

/// Parses and validates a scenario.
pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
    let raw = split_sections(text)?;

    let sys = Lookup::new(&raw, "system");
    let (n_line, n_text) = sys.require("n")?;
    let n: usize = n_text.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        at_line(
            n_line,
            format!("n must be a positive integer, got `{n_text}`"),
        )
    })?;
    let (a_line, a) = sys.matrix("A")?;
    let a = square(a_line, a, n, "A")?;
    let (b_line, b) = sys.matrix("b")?;
    let b = column(b_line, b, n, "b")?;
    let (c_line, c) = sys.matrix("C")?;
    if c.cols() != n {
        return Err(at_line(
            c_line,
            format!("C must have {n} columns, got {}", c.cols()),
        ));
    }
    let core = LinearCore::new(a, b, c).map_err(|e| at_line(sys.header_line(), e.to_string()))?;

    let nl_sec = Lookup::new(&raw, "nonlinearity");
    let (f_line, f_text) = nl_sec.require("f")?;
    let (g_line, g_text) = nl_sec.require("g")?;
    let f = parse_expression(f_line, f_text, n)?;
    let g = parse_expression(g_line, g_text, n)?;
    let g_min = nl_sec.number_or("g_min", DEFAULT_G_MIN)?;
    let nl = NonlinearPair::new(f, g, g_min, n).map_err(|e| at_line(g_line, e.to_string()))?;

    let rf = Lookup::new(&raw, "reference");
    let (ad_line, a_d) = rf.matrix("A_d")?;
    let a_d = square(ad_line, a_d, n, "A_d")?;
    let (bd_line, b_d) = rf.matrix("B_d")?;
    let b_d = column(bd_line, b_d, n, "B_d")?;
    let reference = ReferenceModel::new(a_d, b_d).map_err(|e| at_line(ad_line, e.to_string()))?;
    let (r_line, r_text) = rf.require("r")?;
    let r_signal = parse_expression(r_line, r_text, 0)?;
    let tracking_p = match rf.get("P1") {
        Some((l, v)) => Some(symmetric(
            l,
            square(l, parse_matrix(l, v)?, n, "P1")?,
            "P1",
        )?),
        None => None,
    };

    let ch = Lookup::new(&raw, "disturbance_channel");
    let (mode_line, mode_text) = ch.require("mode")?;
    let channel = match mode_text {
        "matched" => {
            if ch.get("E").is_some() {
                return Err(at_line(mode_line, "matched channel takes `scale`, not `E`"));
            }
            DisturbanceChannel::Matched {
                scale: ch.number("scale")?,
            }
        }
        "constant" => {
            if ch.get("scale").is_some() {
                return Err(at_line(
                    mode_line,
                    "constant channel takes `E`, not `scale`",
                ));
            }
            let (e_line, e) = ch.matrix("E")?;
            DisturbanceChannel::Constant(column(e_line, e, n, "E")?)
        }
        other => {
            return Err(at_line(
                mode_line,
                format!("channel mode must be matched or constant, got `{other}`"),
            ))
        }
    };

    let ad = Lookup::new(&raw, "adaptation");
    let (p_line, p_text) = ad.require("P")?;
    let p = if p_text == "auto" {
        synthesize_p(core.a(), &Mat::identity(n), ConditionLabel::Reconfiguration)
            .map_err(|e| at_line(p_line, format!("cannot synthesize P: {e}")))?
            .0
    } else {
        symmetric(
            p_line,
            square(p_line, parse_matrix(p_line, p_text)?, n, "P")?,
            "P",
        )?
    };
    let mu_rate = match ad.get("mu_rate") {
        Some((l, v)) => MuRate::from_name(v).ok_or_else(|| {
            at_line(
                l,
                format!("mu_rate must be gamma1, gamma2 or gamma3, got `{v}`"),
            )
        })?,
        None => MuRate::default(),
    };
    let adaptation = AdaptationConfig {
        gamma1: ad.number("gamma1")?,
        gamma2: ad.number("gamma2")?,
        gamma3: ad.number("gamma3")?,
        p,
        theta_design: ad.number("theta_design")?,
        d_tilde_max: ad.number("d_tilde_max")?,
        d_dot_max: ad.number("d_dot_max")?,
        mu_rate,
    };
    adaptation
        .validate(n)
        .map_err(|e| at_line(ad.header_line(), e.to_string()))?;

    let events = raw
        .faults
        .iter()
        .map(|(l, t)| parse_fault(*l, t))
        .collect::<Result<Vec<_>, _>>()?;
    let schedule = FaultSchedule::new(events).map_err(|e| ScenarioError::Invalid(e.to_string()))?;

    let rn = Lookup::new(&raw, "run");
    let mode = match rn.get("mode") {
        Some((l, v)) => Mode::from_name(v).ok_or_else(|| {
            at_line(
                l,
                format!("mode must be nominal_only, faulty_no_va or faulty_with_va, got `{v}`"),
            )
        })?,
        None => Mode::default(),
    };
    let vector = |key: &str| -> Result<Option<Vec<f64>>, ScenarioError> {
        match rn.get(key) {
            Some((l, v)) => {
                let x = parse_vector(l, v)?;
                if x.len() != n {
                    return Err(at_line(
                        l,
                        format!("{key} must have {n} entries, got {}", x.len()),
                    ));
                }
                Ok(Some(x))
            }
            None => Ok(None),
        }
    };
    let x_hat0 = vector("x0_hat")?.unwrap_or_else(|| vec![0.0; n]);
    let x_f0 = vector("x0_f")?.unwrap_or_else(|| x_hat0.clone());
    let x_d0 = vector("x0_d")?.unwrap_or_else(|| vec![0.0; n]);

    let scenario = Scenario {
        core,
        nl,
        reference,
        tracking_p,
        channel,
        adaptation,
        schedule,
        r_signal,
        x_hat0,
        x_f0,
        x_d0,
        t_end: rn.number("t_end")?,
        h: rn.number("h")?,
        mode,
        eps_band: rn.number_or("eps_band", DEFAULT_EPS_BAND)?,
    };
    scenario
        .validate()
        .map_err(|e| at_line(rn.header_line(), e.to_string()))?;
    Ok(scenario)
}

fn fmt_row(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_matrix(m: &Mat) -> String {
    (0..m.rows())
        .map(|i| fmt_row(m.row_slice(i)))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Writes `s` in the scenario format. `parse(&emit(s))` reproduces `s`.
pub fn emit(s: &Scenario) -> String {
    let mut out = String::new();
    let w = &mut out;
    let core = &s.core;
    let _ = writeln!(w, "[system]");
    let _ = writeln!(w, "n = {}", core.n());
    let _ = writeln!(w, "A = {}", fmt_matrix(core.a()));
    let _ = writeln!(w, "b = {}", fmt_matrix(core.b()));
    let _ = writeln!(w, "C = {}", fmt_matrix(core.c()));

    let _ = writeln!(w, "\n[nonlinearity]");
    let _ = writeln!(w, "f = {}", s.nl.f);
    let _ = writeln!(w, "g = {}", s.nl.g);
    let _ = writeln!(w, "g_min = {}", s.nl.g_min);

    let _ = writeln!(w, "\n[reference]");
    let _ = writeln!(w, "A_d = {}", fmt_matrix(s.reference.a_d()));
    let _ = writeln!(w, "B_d = {}", fmt_matrix(s.reference.b_d()));
    let _ = writeln!(w, "r = {}", s.r_signal);
    if let Some(p1) = &s.tracking_p {
        let _ = writeln!(w, "P1 = {}", fmt_matrix(p1));
    }

    let _ = writeln!(w, "\n[disturbance_channel]");
    match &s.channel {
        DisturbanceChannel::Matched { scale } => {
            let _ = writeln!(w, "mode = matched\nscale = {scale}");
        }
        DisturbanceChannel::Constant(e) => {
            let _ = writeln!(w, "mode = constant\nE = {}", fmt_matrix(e));
        }
    }

    let ad = &s.adaptation;
    let _ = writeln!(w, "\n[adaptation]");
    let _ = writeln!(w, "gamma1 = {}", ad.gamma1);
    let _ = writeln!(w, "gamma2 = {}", ad.gamma2);
    let _ = writeln!(w, "gamma3 = {}", ad.gamma3);
    let _ = writeln!(w, "P = {}", fmt_matrix(&ad.p));
    let _ = writeln!(w, "theta_design = {}", ad.theta_design);
    let _ = writeln!(w, "d_tilde_max = {}", ad.d_tilde_max);
    let _ = writeln!(w, "d_dot_max = {}", ad.d_dot_max);
    let _ = writeln!(w, "mu_rate = {}", ad.mu_rate.name());

    let _ = writeln!(w, "\n[faults]");
    for e in s.schedule.events() {
        let _ = match &e.kind {
            FaultKind::Loss { theta } => writeln!(w, "at = {} kind = loss theta = {theta}", e.at),
            FaultKind::Additive { signal } => {
                writeln!(w, "at = {} kind = additive signal = {signal}", e.at)
            }
            FaultKind::Disturbance { signal } => {
                writeln!(w, "at = {} kind = disturbance signal = {signal}", e.at)
            }
        };
    }

    let _ = writeln!(w, "\n[run]");
    let _ = writeln!(w, "t_end = {}", s.t_end);
    let _ = writeln!(w, "h = {}", s.h);
    let _ = writeln!(w, "mode = {}", s.mode);
    let _ = writeln!(w, "x0_hat = {}", fmt_row(&s.x_hat0));
    let _ = writeln!(w, "x0_f = {}", fmt_row(&s.x_f0));
    let _ = writeln!(w, "x0_d = {}", fmt_row(&s.x_d0));
    let _ = writeln!(w, "eps_band = {}", s.eps_band);
    out
}
