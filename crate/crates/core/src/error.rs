use thiserror::Error;

use crate::exprlang::{EvalError, ParseError};
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("input gain |g| = {g:e} is below the floor {g_min:e} at t = {t}")]
    InputGainTooSmall { t: f64, g: f64, g_min: f64 },
    #[error(
        "model matching fails: state residual {residual_a:e}, reference residual {residual_b:e}"
    )]
    MatchingConditionViolated { residual_a: f64, residual_b: f64 },
    #[error("(A, b) is not controllable: controllability rank {rank} < {n}")]
    Uncontrollable { rank: usize, n: usize },
    #[error("reference model matrix is not Hurwitz")]
    NotHurwitz,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
