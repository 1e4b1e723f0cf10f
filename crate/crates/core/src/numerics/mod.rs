//! Small dense linear algebra, fixed-step integration and Lyapunov machinery.

mod linalg;
mod mat;
mod ode;

use thiserror::Error;

pub use linalg::{
    eig_symmetric, is_positive_definite, left_pinv_col, lyapunov_residual, rank, solve_dense,
    solve_lyapunov, PD_PIVOT, SYMMETRY_TOL,
};
pub use mat::{dot, norm2, Mat};
pub use ode::{rk4_step, CompensatedRk4};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("derivative is not finite at t = {t}")]
    NonFiniteDerivative { t: f64 },
    #[error("integration step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("linear system is numerically singular")]
    SingularSystem,
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("column is numerically zero")]
    ZeroColumn,
    #[error("matrix contains a non-finite entry")]
    NonFiniteEntry,
    #[error("dimension mismatch ({context}): expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
}
