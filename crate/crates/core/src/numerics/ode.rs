use super::NumericsError;

/// One classical fourth-order Runge–Kutta step of size `h` from `(t, x)`.
///
/// `deriv` may fail with its own error type; stage outputs containing a
/// non-finite value abort with [`NumericsError::NonFiniteDerivative`].
pub fn rk4_step<F, E>(deriv: F, t: f64, x: &[f64], h: f64) -> Result<Vec<f64>, E>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    E: From<NumericsError>,
{
    let inc = rk4_increment(deriv, t, x, h)?;
    Ok(x.iter().zip(&inc).map(|(xi, di)| xi + di).collect())
}

/// RK4 with compensated (Kahan) accumulation of the state.
///
/// The per-step increments are summed with a running correction term, so
/// rounding error grows like `O(ε)` instead of `O(N ε)` over `N` steps.
/// Results agree with repeated [`rk4_step`] up to that rounding error.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatedRk4 {
    carry: Vec<f64>,
}

impl CompensatedRk4 {
    pub fn new(n: usize) -> Self {
        Self {
            carry: vec![0.0; n],
        }
    }

    /// Advances `x` in place from `t` to `t + h`.
    pub fn step<F, E>(&mut self, deriv: F, t: f64, x: &mut [f64], h: f64) -> Result<(), E>
    where
        F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
        E: From<NumericsError>,
    {
        if self.carry.len() != x.len() {
            return Err(NumericsError::DimensionMismatch {
                context: "compensated state length",
                expected: self.carry.len(),
                found: x.len(),
            }
            .into());
        }
        let inc = rk4_increment(deriv, t, x, h)?;
        for ((xi, ci), di) in x.iter_mut().zip(self.carry.iter_mut()).zip(inc) {
            let y = di - *ci;
            let s = *xi + y;
            *ci = (s - *xi) - y;
            *xi = s;
        }
        Ok(())
    }
}

fn rk4_increment<F, E>(mut deriv: F, t: f64, x: &[f64], h: f64) -> Result<Vec<f64>, E>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    E: From<NumericsError>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(NumericsError::InvalidStep(h).into());
    }
    let n = x.len();
    let half = 0.5 * h;

    let mut stage = |tau: f64, y: &[f64]| -> Result<Vec<f64>, E> {
        let k = deriv(tau, y)?;
        if k.len() != n {
            return Err(NumericsError::DimensionMismatch {
                context: "derivative length",
                expected: n,
                found: k.len(),
            }
            .into());
        }
        if k.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFiniteDerivative { t: tau }.into());
        }
        Ok(k)
    };

    let k1 = stage(t, x)?;
    let y: Vec<f64> = x.iter().zip(&k1).map(|(xi, ki)| xi + half * ki).collect();
    let k2 = stage(t + half, &y)?;
    let y: Vec<f64> = x.iter().zip(&k2).map(|(xi, ki)| xi + half * ki).collect();
    let k3 = stage(t + half, &y)?;
    let y: Vec<f64> = x.iter().zip(&k3).map(|(xi, ki)| xi + h * ki).collect();
    let k4 = stage(t + h, &y)?;

    Ok((0..n)
        .map(|i| (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}
