//! Lyapunov certificates: check a supplied `P` against `Aᵀ P + P A < 0`, or
//! build one from the Lyapunov equation.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{eig_symmetric, is_positive_definite, solve_lyapunov, Mat, NumericsError};

/// Which stability statement a certificate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionLabel {
    /// Nominal closed loop tracks the reference model.
    Tracking,
    /// Difference system under the virtual actuator.
    Reconfiguration,
}

impl fmt::Display for ConditionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionLabel::Tracking => "tracking",
            ConditionLabel::Reconfiguration => "reconfiguration",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    NotCertified,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Certified => "certified",
            Verdict::NotCertified => "not_certified",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub label: ConditionLabel,
    pub p: Mat,
    /// `−(Aᵀ P + P A)`
    pub q: Mat,
    /// Eigenvalues of `Q`, ascending.
    pub eig_q: Vec<f64>,
    /// Eigenvalues of `P`, ascending.
    pub eig_p: Vec<f64>,
    pub q_pd: bool,
    pub p_pd: bool,
    pub verdict: Verdict,
}

impl ConditionReport {
    pub fn certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

pub fn check_condition(a: &Mat, p: &Mat, label: ConditionLabel) -> Result<ConditionReport> {
    let n = a.rows();
    if !a.is_square() || p.rows() != n || p.cols() != n {
        return Err(Error::Dimension(format!(
            "certificate check needs square A and P of the same size, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            p.rows(),
            p.cols()
        )));
    }
    let eig_p = eig_symmetric(p)?;
    let at = a.transpose();
    let q = -&(&(&at * p) + &(p * a));
    let q = q.symmetrized();
    let eig_q = eig_symmetric(&q)?;
    let p_pd = is_positive_definite(p)?;
    let q_pd = is_positive_definite(&q)?;
    Ok(ConditionReport {
        label,
        p: p.clone(),
        q,
        eig_q,
        eig_p,
        q_pd,
        p_pd,
        verdict: if p_pd && q_pd {
            Verdict::Certified
        } else {
            Verdict::NotCertified
        },
    })
}

/// Solves `Aᵀ P + P A = −Q` and checks the result.
///
/// A non-Hurwitz `A` surfaces as [`NumericsError::SingularSystem`] when the
/// Lyapunov operator is singular, or as a report that is not certified.
pub fn synthesize_p(a: &Mat, q: &Mat, label: ConditionLabel) -> Result<(Mat, ConditionReport)> {
    let p = solve_lyapunov(a, q)?;
    let report = check_condition(a, &p, label)?;
    if !report.p_pd {
        // P solves the equation but is not positive definite: A is not Hurwitz.
        return Err(NumericsError::SingularSystem.into());
    }
    Ok((p, report))
}
