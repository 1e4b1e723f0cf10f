//! Right-hand sides of the reference model, nominal plant and faulty plant.
//!
//! All plants share the affine single-input structure
//! `ẋ = A x + b (f(x) + g(x) u)`; the faulty plant scales the input channel
//! by an effectiveness factor, adds an actuator-side additive fault and an
//! external disturbance entering through `E`.

use crate::error::{Error, Result};
use crate::exprlang::{EvalError, Expr};
use crate::numerics::{self, dot, Mat};

/// Pivot tolerance for the controllability rank test.
pub const CONTROLLABILITY_TOL: f64 = 1e-9;
pub const DEFAULT_G_MIN: f64 = 1e-6;

/// Known linear part `(A, b, C)`, with `(A, b)` controllable.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCore {
    a: Mat,
    b: Mat,
    c: Mat,
}

impl LinearCore {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.rows();
        if n == 0 || !a.is_square() {
            return Err(Error::Dimension(format!(
                "A must be square and non-empty, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != n || b.cols() != 1 {
            return Err(Error::Dimension(format!(
                "b must be {n}x1, got {}x{}",
                b.rows(),
                b.cols()
            )));
        }
        if c.cols() != n || c.rows() == 0 {
            return Err(Error::Dimension(format!(
                "C must have {n} columns, got {}x{}",
                c.rows(),
                c.cols()
            )));
        }
        let core = Self { a, b, c };
        let rank = core.controllability_rank();
        if rank < n {
            return Err(Error::Uncontrollable { rank, n });
        }
        Ok(core)
    }

    /// Rank of `[b, Ab, …, A^{n-1}b]`.
    pub fn controllability_rank(&self) -> usize {
        let n = self.n();
        let mut ctrb = Mat::zeros(n, n);
        let mut col = self.b.as_slice().to_vec();
        for j in 0..n {
            for (i, v) in col.iter().enumerate() {
                ctrb[(i, j)] = *v;
            }
            col = self.a.mul_vec(&col);
        }
        numerics::rank(&ctrb, CONTROLLABILITY_TOL)
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Output dimension.
    pub fn l(&self) -> usize {
        self.c.rows()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    pub fn b_vec(&self) -> &[f64] {
        self.b.as_slice()
    }
}

/// Drift nonlinearity `f` and input gain `g`, both scalar expressions of `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearPair {
    pub f: Expr,
    pub g: Expr,
    pub g_min: f64,
}

impl NonlinearPair {
    /// Validates variable ranges, the gain floor, and `|g(0, 0)| > g_min`.
    pub fn new(f: Expr, g: Expr, g_min: f64, n: usize) -> Result<Self> {
        if !(g_min > 0.0 && g_min.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "g_min must be positive, got {g_min}"
            )));
        }
        for (name, e) in [("f", &f), ("g", &g)] {
            if e.max_state_index() > n {
                return Err(Error::Dimension(format!(
                    "{name} reads x{} but the state dimension is {n}",
                    e.max_state_index()
                )));
            }
        }
        let g0 = g.eval(0.0, &vec![0.0; n])?;
        if g0.abs() <= g_min {
            return Err(Error::InvalidConfig(format!(
                "input gain must be nonzero at the origin: |g(0)| = {g0} <= g_min = {g_min}"
            )));
        }
        Ok(Self { f, g, g_min })
    }

    pub fn f(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        self.f.eval(t, x)
    }

    pub fn g(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        self.g.eval(t, x)
    }

    /// `g(t, x)`, failing when it is too small to divide by.
    pub fn guarded_g(&self, t: f64, x: &[f64]) -> Result<f64> {
        let g = self.g(t, x)?;
        if g.abs() < self.g_min {
            return Err(Error::InputGainTooSmall {
                t,
                g,
                g_min: self.g_min,
            });
        }
        Ok(g)
    }
}

/// Desired closed-loop dynamics `ẋ_d = A_d x_d + B_d r`; `A_d` is Hurwitz.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    a_d: Mat,
    b_d: Mat,
}

impl ReferenceModel {
    pub fn new(a_d: Mat, b_d: Mat) -> Result<Self> {
        let n = a_d.rows();
        if !a_d.is_square() || b_d.rows() != n || b_d.cols() != 1 {
            return Err(Error::Dimension(format!(
                "A_d must be square and B_d {n}x1, got {}x{} and {}x{}",
                a_d.rows(),
                a_d.cols(),
                b_d.rows(),
                b_d.cols()
            )));
        }
        let hurwitz = match numerics::solve_lyapunov(&a_d, &Mat::identity(n)) {
            Ok(p) => numerics::is_positive_definite(&p)?,
            Err(numerics::NumericsError::SingularSystem) => false,
            Err(e) => return Err(e.into()),
        };
        if !hurwitz {
            return Err(Error::NotHurwitz);
        }
        Ok(Self { a_d, b_d })
    }

    pub fn a_d(&self) -> &Mat {
        &self.a_d
    }

    pub fn b_d(&self) -> &Mat {
        &self.b_d
    }
}

/// How the external disturbance enters the faulty plant.
#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceChannel {
    /// Fixed `n×1` column `E`.
    Constant(Mat),
    /// `E(t) = scale · b · g(t, x_f)`, i.e. matched to the input channel.
    Matched { scale: f64 },
}

impl DisturbanceChannel {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            DisturbanceChannel::Constant(e) if e.rows() != n || e.cols() != 1 => Err(
                Error::Dimension(format!("E must be {n}x1, got {}x{}", e.rows(), e.cols())),
            ),
            DisturbanceChannel::Matched { scale } if !scale.is_finite() => Err(
                Error::InvalidConfig(format!("matched channel scale must be finite, got {scale}")),
            ),
            _ => Ok(()),
        }
    }

    /// Entry `i` of `E(t)` given the input gain already evaluated on the faulty state.
    fn entry(&self, i: usize, b_i: f64, g: f64) -> f64 {
        match self {
            DisturbanceChannel::Constant(e) => e[(i, 0)],
            DisturbanceChannel::Matched { scale } => scale * b_i * g,
        }
    }
}

/// Fault quantities acting on the faulty plant at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Injection {
    /// Actuator effectiveness in (0, 1]; 1 is healthy.
    pub theta: f64,
    /// Additive actuator fault `d_f`.
    pub additive: f64,
    /// External disturbance `d`.
    pub disturbance: f64,
}

impl Injection {
    pub const HEALTHY: Injection = Injection {
        theta: 1.0,
        additive: 0.0,
        disturbance: 0.0,
    };
}

impl Default for Injection {
    fn default() -> Self {
        Self::HEALTHY
    }
}

/// `A_d x_d + B_d r`
pub fn reference_deriv(m: &ReferenceModel, x_d: &[f64], r: f64) -> Vec<f64> {
    let mut dx = m.a_d.mul_vec(x_d);
    for (i, v) in dx.iter_mut().enumerate() {
        *v += m.b_d[(i, 0)] * r;
    }
    dx
}

/// `A x̂ + b (f(x̂) + g(x̂) u)`
pub fn nominal_deriv(
    core: &LinearCore,
    nl: &NonlinearPair,
    t: f64,
    x: &[f64],
    u: f64,
) -> Result<Vec<f64>, EvalError> {
    let drive = nl.f(t, x)? + nl.g(t, x)? * u;
    let mut dx = core.a.mul_vec(x);
    for (v, b) in dx.iter_mut().zip(core.b_vec()) {
        *v += b * drive;
    }
    Ok(dx)
}

/// `A x_f + b f(x_f) + b θ g(x_f) (u_f + d_f) + E d`
///
/// With a healthy injection this is bit-identical to [`nominal_deriv`].
pub fn faulty_deriv(
    core: &LinearCore,
    nl: &NonlinearPair,
    channel: &DisturbanceChannel,
    t: f64,
    x_f: &[f64],
    u_f: f64,
    inj: &Injection,
) -> Result<Vec<f64>, EvalError> {
    let g = nl.g(t, x_f)?;
    let drive = nl.f(t, x_f)? + inj.theta * g * (u_f + inj.additive);
    let mut dx = core.a.mul_vec(x_f);
    for (i, (v, &b)) in dx.iter_mut().zip(core.b_vec()).enumerate() {
        *v += b * drive + channel.entry(i, b, g) * inj.disturbance;
    }
    Ok(dx)
}

/// `C x`
pub fn output(core: &LinearCore, x: &[f64]) -> Vec<f64> {
    (0..core.l()).map(|i| dot(core.c.row_slice(i), x)).collect()
}
