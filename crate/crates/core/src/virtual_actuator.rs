//! Adaptive virtual actuator: the fault-hiding block between the nominal
//! controller and the faulty plant.
//!
//! It maps the nominal input `u` and the state difference `x̃ = x_f − x̂` to
//! the applied input `u_f = M x̃ + N u − d̂`, with gradient update laws
//!
//! ```text
//! Ṁ  = −γ₁ s x̃ᵀ      Ṅ = −γ₂ s u      d̂̇ = γ₃ s      s = g(x_f) bᵀ P x̃
//! ```
//!
//! Every law carries the factor `bᵀ P x̃`, so the block is transparent
//! (`u_f = u`) as long as `x̃ = 0` and the parameters sit at `(0, 1, 0)`.
//! The nominal `b` is used, never the faulty `b Θ`: the effectiveness is
//! unknown to the block.

use crate::controller::NominalGains;
use crate::error::{Error, Result};
use crate::exprlang::EvalError;
use crate::numerics::{dot, is_positive_definite, norm2, Mat};
use crate::plant::{LinearCore, NonlinearPair};

/// Adjustable parameters `(M, N, d̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub m: Vec<f64>,
    pub n: f64,
    pub d_hat: f64,
}

impl AdaptiveState {
    /// Transparent initial condition: `M = 0`, `N = 1`, `d̂ = 0`.
    pub fn identity(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            n: 1.0,
            d_hat: 0.0,
        }
    }

    /// Number of scalars when flattened: `dim + 2`.
    pub fn packed_len(dim: usize) -> usize {
        dim + 2
    }

    /// Flattens as `[M…, N, d̂]` into `out`.
    pub fn pack_into(&self, out: &mut [f64]) {
        let dim = self.m.len();
        out[..dim].copy_from_slice(&self.m);
        out[dim] = self.n;
        out[dim + 1] = self.d_hat;
    }

    pub fn unpack(packed: &[f64]) -> Self {
        let dim = packed.len() - 2;
        Self {
            m: packed[..dim].to_vec(),
            n: packed[dim],
            d_hat: packed[dim + 1],
        }
    }
}

/// Which adaptation rate divides the disturbance term of the UUB radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MuRate {
    Gamma1,
    #[default]
    Gamma2,
    Gamma3,
}

impl MuRate {
    pub fn name(self) -> &'static str {
        match self {
            MuRate::Gamma1 => "gamma1",
            MuRate::Gamma2 => "gamma2",
            MuRate::Gamma3 => "gamma3",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "gamma1" => Some(MuRate::Gamma1),
            "gamma2" => Some(MuRate::Gamma2),
            "gamma3" => Some(MuRate::Gamma3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationConfig {
    /// Rate of the `M` law.
    pub gamma1: f64,
    /// Rate of the `N` law.
    pub gamma2: f64,
    /// Rate of the `d̂` law.
    pub gamma3: f64,
    /// Lyapunov weight used in the update laws.
    pub p: Mat,
    /// Tuning scalar of the ultimate-bound estimate, in (0, 1).
    pub theta_design: f64,
    /// Bound on the lumped disturbance estimation error.
    pub d_tilde_max: f64,
    /// Bound on the lumped disturbance rate.
    pub d_dot_max: f64,
    pub mu_rate: MuRate,
}

impl AdaptationConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        for (name, g) in [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
        ] {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {g}"
                )));
            }
        }
        if self.p.rows() != n || self.p.cols() != n {
            return Err(Error::Dimension(format!(
                "P must be {n}x{n}, got {}x{}",
                self.p.rows(),
                self.p.cols()
            )));
        }
        if !is_positive_definite(&self.p)? {
            return Err(Error::InvalidConfig("P must be positive definite".into()));
        }
        if !(self.theta_design > 0.0 && self.theta_design < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "theta_design must lie in (0, 1), got {}",
                self.theta_design
            )));
        }
        for (name, v) in [
            ("d_tilde_max", self.d_tilde_max),
            ("d_dot_max", self.d_dot_max),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn mu_gamma(&self) -> f64 {
        match self.mu_rate {
            MuRate::Gamma1 => self.gamma1,
            MuRate::Gamma2 => self.gamma2,
            MuRate::Gamma3 => self.gamma3,
        }
    }
}

/// `u_f = M x̃ + N u − d̂`
pub fn reconfigure(s: &AdaptiveState, x_tilde: &[f64], u: f64) -> f64 {
    dot(&s.m, x_tilde) + s.n * u - s.d_hat
}

/// Time derivatives of the adaptive parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRates {
    pub m_dot: Vec<f64>,
    pub n_dot: f64,
    pub d_hat_dot: f64,
}

pub fn adapt_deriv(
    cfg: &AdaptationConfig,
    core: &LinearCore,
    nl: &NonlinearPair,
    t: f64,
    x_f: &[f64],
    x_tilde: &[f64],
    u: f64,
) -> Result<AdaptiveRates, EvalError> {
    let pb = cfg.p.mul_vec(core.b_vec());
    let s = nl.g(t, x_f)? * dot(&pb, x_tilde);
    Ok(AdaptiveRates {
        m_dot: x_tilde.iter().map(|xi| -cfg.gamma1 * s * xi).collect(),
        n_dot: -cfg.gamma2 * s * u,
        d_hat_dot: cfg.gamma3 * s,
    })
}

/// Input that cancels the drift, `u* = −f(x_f) / g(x_f)`. Diagnostic only.
pub fn ideal_feedforward(nl: &NonlinearPair, t: f64, x_f: &[f64]) -> Result<f64> {
    let g = nl.guarded_g(t, x_f)?;
    Ok(-nl.f(t, x_f)? / g)
}

/// Terms of the ultimate-bound estimate for `‖x̃‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UubBound {
    pub beta: f64,
    pub mu: f64,
    pub radius: f64,
}

/// Radius `(β + sqrt(max(β² − 4θμ, 0))) / (2θ)` beyond which the Lyapunov
/// derivative is negative.
///
/// `β = ‖P b‖ |k_r| r_bound + ‖P b k_x‖ x̂_bound` and `μ = d̃_max ḋ_max / γ_μ`.
/// For a single input, `‖P b k_x‖ = ‖P b‖ ‖k_x‖`.
pub fn uub_radius(
    cfg: &AdaptationConfig,
    core: &LinearCore,
    gains: &NominalGains,
    r_bound: f64,
    x_hat_bound: f64,
) -> UubBound {
    let pb_norm = norm2(&cfg.p.mul_vec(core.b_vec()));
    let beta = pb_norm * gains.k_r.abs() * r_bound + pb_norm * norm2(&gains.k_x) * x_hat_bound;
    let mu = cfg.d_tilde_max * cfg.d_dot_max / cfg.mu_gamma();
    UubBound {
        beta,
        mu,
        radius: radius_from_terms(beta, mu, cfg.theta_design),
    }
}

/// The quadratic-root formula alone; the discriminant is clamped at zero.
pub fn radius_from_terms(beta: f64, mu: f64, theta: f64) -> f64 {
    let disc = (beta * beta - 4.0 * theta * mu).max(0.0);
    (beta + disc.sqrt()) / (2.0 * theta)
}
