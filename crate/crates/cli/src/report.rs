//! Plain-text rendering of metrics, gains and certificates.

use std::fmt::Write as _;

use vaftc_core::controller::NominalGains;
use vaftc_core::engine::{Metrics, Mode};
use vaftc_core::numerics::Mat;
use vaftc_core::verify::ConditionReport;

/// Compact number: fixed notation for moderate magnitudes, else scientific.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e6).contains(&a) {
        let s = format!("{v:.6}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.into()
        }
    } else {
        format!("{v:.6e}")
    }
}

fn vector(v: &[f64]) -> String {
    format!(
        "[{}]",
        v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")
    )
}

fn matrix(m: &Mat, indent: &str) -> String {
    let cells: Vec<Vec<String>> = (0..m.rows())
        .map(|i| m.row_slice(i).iter().map(|v| num(*v)).collect())
        .collect();
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
    let mut out = String::new();
    for row in cells {
        let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        let _ = writeln!(out, "{indent}[ {} ]", line.join("  "));
    }
    out
}

pub fn metrics(m: &Metrics, mode: Mode) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "mode            = {mode}");
    let _ = writeln!(o, "eps_band        = {}", num(m.eps_band));
    let _ = writeln!(o, "sup_e_tail      = {}", num(m.sup_e_tail));
    let _ = writeln!(o, "sup_xtilde_tail = {}", num(m.sup_xtilde_tail));
    let _ = writeln!(o, "r_bound         = {}", num(m.r_bound));
    let _ = writeln!(o, "x_hat_bound     = {}", num(m.x_hat_bound));
    let _ = writeln!(o, "uub_beta        = {}", num(m.uub.beta));
    let _ = writeln!(o, "uub_mu          = {}", num(m.uub.mu));
    let _ = writeln!(o, "uub_bound       = {}", num(m.uub.radius));
    let _ = writeln!(o, "uub_satisfied   = {}", m.uub_satisfied);
    for e in &m.events {
        let rec = e.recovery_time.map_or("not_recovered".to_string(), num);
        let _ = writeln!(
            o,
            "event at = {} until = {} peak = {} recovery_time = {rec}",
            num(e.at),
            num(e.until),
            num(e.peak)
        );
    }
    o
}

pub fn gains(g: &NominalGains) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "k_x        = {}", vector(&g.k_x));
    let _ = writeln!(o, "k_r        = {}", num(g.k_r));
    let _ = writeln!(o, "residual_A = {:e}", g.residual_a);
    let _ = writeln!(o, "residual_B = {:e}", g.residual_b);
    o
}

/// Multi-line report; `pair` names the matrices checked, e.g. `(A, P1)`.
pub fn condition(r: &ConditionReport, pair: &str) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "{} condition {pair}: {}", r.label, r.verdict);
    let _ = writeln!(o, "  P =");
    o.push_str(&matrix(&r.p, "    "));
    let _ = writeln!(o, "  Q = -(A^T P + P A) =");
    o.push_str(&matrix(&r.q, "    "));
    let _ = writeln!(
        o,
        "  eig(P) = {}  positive definite: {}",
        vector(&r.eig_p),
        r.p_pd
    );
    let _ = writeln!(
        o,
        "  eig(Q) = {}  positive definite: {}",
        vector(&r.eig_q),
        r.q_pd
    );
    o
}

/// One CSV row per report: `label,pair,verdict,p_pd,q_pd,eig_q1..eig_qn`.
pub fn conditions_csv(reports: &[(String, &ConditionReport)]) -> String {
    let n = reports.first().map_or(0, |(_, r)| r.eig_q.len());
    let mut o = String::from("label,pair,verdict,p_pd,q_pd");
    for i in 1..=n {
        let _ = write!(o, ",eig_q{i}");
    }
    o.push('\n');
    for (pair, r) in reports {
        let _ = write!(
            o,
            "{},{},{},{},{}",
            r.label,
            pair.replace(',', ";"),
            r.verdict,
            r.p_pd,
            r.q_pd
        );
        for v in &r.eig_q {
            let _ = write!(o, ",{}", crate::trace_csv::fmt_g17(*v));
        }
        o.push('\n');
    }
    o
}
