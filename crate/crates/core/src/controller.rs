//! Feedback-linearizing nominal controller with exact model matching.
//!
//! The control law is `u = (−f(x̂) + k_r r + k_x x̂) / g(x̂)`, which turns the
//! nominal plant into `ẋ̂ = (A + b k_x) x̂ + b k_r r`. The gains are chosen so
//! that this equals the reference model, which requires `A_d − A` and `B_d`
//! to lie in the range of `b`.

use crate::error::{Error, Result};
use crate::numerics::{dot, left_pinv_col, Mat};
use crate::plant::NonlinearPair;

/// Residual above which the matching condition is considered violated.
pub const MATCHING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct NominalGains {
    /// State gain, built from `A_d − A`.
    pub k_x: Vec<f64>,
    /// Reference gain, built from `B_d`.
    pub k_r: f64,
    /// max |A − A_d + b k_x|
    pub residual_a: f64,
    /// max |b k_r − B_d|
    pub residual_b: f64,
}

pub fn synthesize_gains(a: &Mat, b: &Mat, a_d: &Mat, b_d: &Mat) -> Result<NominalGains> {
    let n = a.rows();
    if !a.is_square() || a_d.rows() != n || !a_d.is_square() || b.rows() != n || b_d.rows() != n {
        return Err(Error::Dimension(
            "gain synthesis needs square A, A_d and n-row b, B_d".into(),
        ));
    }
    let pinv = left_pinv_col(b)?;
    let k_x_mat = &pinv * &(a_d - a);
    let k_r = (&pinv * b_d)[(0, 0)];

    let residual_a = (&(a - a_d) + &(b * &k_x_mat)).max_abs();
    let residual_b = (&b.scale(k_r) - b_d).max_abs();
    if residual_a > MATCHING_TOL || residual_b > MATCHING_TOL {
        return Err(Error::MatchingConditionViolated {
            residual_a,
            residual_b,
        });
    }
    Ok(NominalGains {
        k_x: k_x_mat.as_slice().to_vec(),
        k_r,
        residual_a,
        residual_b,
    })
}

/// Nominal control input at `(t, x̂)` for reference value `r`.
pub fn nominal_control(
    gains: &NominalGains,
    nl: &NonlinearPair,
    t: f64,
    x_hat: &[f64],
    r: f64,
) -> Result<f64> {
    let g = nl.guarded_g(t, x_hat)?;
    let f = nl.f(t, x_hat)?;
    Ok((-f + gains.k_r * r + dot(&gains.k_x, x_hat)) / g)
}
