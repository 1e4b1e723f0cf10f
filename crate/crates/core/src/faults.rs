//! Time-triggered fault and disturbance schedule.
//!
//! Each event switches on at its time `at` and stays on for the rest of the
//! run. All lookups are right-continuous: an event is active at `t = at`.

use crate::error::{Error, Result};
use crate::exprlang::{EvalError, Expr};
use crate::plant::Injection;

/// Relative tolerance when checking that an event time is a multiple of `h`.
pub const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum FaultKind {
    /// Actuator effectiveness drops to `theta`.
    Loss { theta: f64 },
    /// Additive actuator fault `d_f(t)`.
    Additive { signal: Expr },
    /// External disturbance `d(t)`.
    Disturbance { signal: Expr },
}

impl FaultKind {
    pub fn name(&self) -> &'static str {
        match self {
            FaultKind::Loss { .. } => "loss",
            FaultKind::Additive { .. } => "additive",
            FaultKind::Disturbance { .. } => "disturbance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultEvent {
    pub at: f64,
    pub kind: FaultKind,
}

impl FaultEvent {
    pub fn loss(at: f64, theta: f64) -> Self {
        Self {
            at,
            kind: FaultKind::Loss { theta },
        }
    }

    pub fn additive(at: f64, signal: Expr) -> Self {
        Self {
            at,
            kind: FaultKind::Additive { signal },
        }
    }

    pub fn disturbance(at: f64, signal: Expr) -> Self {
        Self {
            at,
            kind: FaultKind::Disturbance { signal },
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.at >= 0.0 && self.at.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "fault time must be finite and >= 0, got {}",
                self.at
            )));
        }
        match &self.kind {
            FaultKind::Loss { theta } if !(*theta > 0.0 && *theta <= 1.0) => Err(
                Error::InvalidConfig(format!("loss theta must lie in (0, 1], got {theta}")),
            ),
            FaultKind::Additive { signal } | FaultKind::Disturbance { signal }
                if signal.max_state_index() > 0 =>
            {
                Err(Error::InvalidConfig(format!(
                    "{} signal must depend on t only, found x{}",
                    self.kind.name(),
                    signal.max_state_index()
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Events sorted by time; equal times keep their insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FaultSchedule {
    events: Vec<FaultEvent>,
}

impl FaultSchedule {
    pub fn new(mut events: Vec<FaultEvent>) -> Result<Self> {
        for e in &events {
            e.validate()?;
        }
        events.sort_by(|a, b| a.at.total_cmp(&b.at));
        Ok(Self { events })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[FaultEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Distinct event times in increasing order.
    pub fn event_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self.events.iter().map(|e| e.at).collect();
        times.dedup();
        times
    }

    /// Rejects event times that are not integer multiples of `h`.
    pub fn check_grid(&self, h: f64) -> Result<()> {
        for e in &self.events {
            let k = e.at / h;
            if (k - k.round()).abs() > GRID_TOL * k.abs().max(1.0) {
                return Err(Error::InvalidConfig(format!(
                    "fault time {} is not a multiple of the step h = {h}",
                    e.at
                )));
            }
        }
        Ok(())
    }

    /// Fault quantities from every event with `at ≤ active_until`, with
    /// signals evaluated at `t`.
    ///
    /// Separating the activation cutoff from the evaluation time lets an
    /// integrator hold the set of active events fixed across the stages of
    /// one step.
    pub fn sample(&self, active_until: f64, t: f64) -> Result<Injection, EvalError> {
        let mut inj = Injection::HEALTHY;
        for e in self.events.iter().take_while(|e| e.at <= active_until) {
            match &e.kind {
                FaultKind::Loss { theta } => inj.theta = *theta,
                FaultKind::Additive { signal } => inj.additive += signal.eval(t, &[])?,
                FaultKind::Disturbance { signal } => inj.disturbance += signal.eval(t, &[])?,
            }
        }
        Ok(inj)
    }

    /// Effectiveness of the latest loss event with `at ≤ t`, else 1.
    pub fn effective_theta(&self, t: f64) -> f64 {
        self.events
            .iter()
            .take_while(|e| e.at <= t)
            .filter_map(|e| match e.kind {
                FaultKind::Loss { theta } => Some(theta),
                _ => None,
            })
            .last()
            .unwrap_or(1.0)
    }

    /// Sum of the active additive fault signals at `t`.
    pub fn additive_fault(&self, t: f64) -> Result<f64, EvalError> {
        Ok(self.sample(t, t)?.additive)
    }

    /// Sum of the active disturbance signals at `t`.
    pub fn external_disturbance(&self, t: f64) -> Result<f64, EvalError> {
        Ok(self.sample(t, t)?.disturbance)
    }
}
