//! Closed-loop simulation: reference model, nominal plant, faulty plant,
//! nominal controller and virtual actuator integrated as one augmented ODE.
//!
//! The augmented state is `z = [x_d; x̂; x_f; M; N; d̂]` and is advanced with
//! fixed-step RK4 with compensated state accumulation. Fault events lie on the step grid; within a step the set
//! of active events is frozen at the step start, while fault signals are
//! evaluated at each stage time.

use std::fmt;

use crate::controller::{nominal_control, synthesize_gains, NominalGains};
use crate::error::{Error, Result};
use crate::exprlang::{parse, Expr};
use crate::faults::{FaultEvent, FaultSchedule};
use crate::numerics::{norm2, CompensatedRk4, Mat, NumericsError};
use crate::plant::{
    faulty_deriv, nominal_deriv, output, reference_deriv, DisturbanceChannel, Injection,
    LinearCore, NonlinearPair, ReferenceModel, DEFAULT_G_MIN,
};
use crate::virtual_actuator::{
    adapt_deriv, reconfigure, uub_radius, AdaptationConfig, AdaptiveState, MuRate, UubBound,
};

/// Tolerance on `t_end / h` being an integer.
pub const STEP_COUNT_TOL: f64 = 1e-9;
/// Default output band for recovery times.
pub const DEFAULT_EPS_BAND: f64 = 0.05;
/// Fraction of the run, counted from the end, used for tail metrics.
pub const TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Nominal loop only; the faulty plant is not simulated.
    NominalOnly,
    /// Faulty plant driven directly by the nominal control.
    FaultyNoVa,
    /// Faulty plant driven through the virtual actuator.
    #[default]
    FaultyWithVa,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::NominalOnly, Mode::FaultyNoVa, Mode::FaultyWithVa];

    pub fn name(self) -> &'static str {
        match self {
            Mode::NominalOnly => "nominal_only",
            Mode::FaultyNoVa => "faulty_no_va",
            Mode::FaultyWithVa => "faulty_with_va",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One complete experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub core: LinearCore,
    pub nl: NonlinearPair,
    pub reference: ReferenceModel,
    /// Optional certificate for the tracking condition.
    pub tracking_p: Option<Mat>,
    pub channel: DisturbanceChannel,
    pub adaptation: AdaptationConfig,
    pub schedule: FaultSchedule,
    /// Reference input `r(t)`.
    pub r_signal: Expr,
    pub x_hat0: Vec<f64>,
    pub x_f0: Vec<f64>,
    pub x_d0: Vec<f64>,
    pub t_end: f64,
    pub h: f64,
    pub mode: Mode,
    pub eps_band: f64,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.core.n()
    }

    /// Number of integration steps, `t_end / h`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(NumericsError::InvalidStep(self.h).into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        let ratio = self.t_end / self.h;
        if (ratio - ratio.round()).abs() > STEP_COUNT_TOL * ratio.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "t_end = {} is not a multiple of h = {}",
                self.t_end, self.h
            )));
        }
        if self.reference.a_d().rows() != n {
            return Err(Error::Dimension(format!(
                "reference model has order {}, plant has order {n}",
                self.reference.a_d().rows()
            )));
        }
        for (name, v) in [
            ("x0_hat", &self.x_hat0),
            ("x0_f", &self.x_f0),
            ("x0_d", &self.x_d0),
        ] {
            if v.len() != n {
                return Err(Error::Dimension(format!(
                    "{name} has length {}, expected {n}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} has a non-finite entry"
                )));
            }
        }
        if self.nl.f.max_state_index() > n || self.nl.g.max_state_index() > n {
            return Err(Error::Dimension(
                "nonlinearity references a state beyond n".into(),
            ));
        }
        if self.r_signal.max_state_index() > 0 {
            return Err(Error::InvalidConfig("r must depend on t only".into()));
        }
        if let Some(p) = &self.tracking_p {
            if p.rows() != n || p.cols() != n {
                return Err(Error::Dimension(format!("P1 must be {n}x{n}")));
            }
        }
        if !(self.eps_band > 0.0 && self.eps_band.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eps_band must be positive, got {}",
                self.eps_band
            )));
        }
        self.channel.validate(n)?;
        self.adaptation.validate(n)?;
        self.schedule.check_grid(self.h)?;
        Ok(())
    }

    pub fn gains(&self) -> Result<NominalGains> {
        synthesize_gains(
            self.core.a(),
            self.core.b(),
            self.reference.a_d(),
            self.reference.b_d(),
        )
    }

    pub fn with_mode(&self, mode: Mode) -> Scenario {
        Scenario {
            mode,
            ..self.clone()
        }
    }
}

/// The simulation study: third-order companion plant with a slower
/// reference model, a 35 % effectiveness loss at 15 s, a unit disturbance at
/// 20 s and a sinusoidal additive fault at 25 s.
pub fn demo_scenario() -> Scenario {
    let n = 3;
    let a = Mat::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -2.0, -3.0]]);
    let b = Mat::column(&[0.0, 0.0, 1.0]);
    let c = Mat::row(&[1.0, 1.0, 1.0]);
    let a_d = Mat::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -2.0, -4.0]]);
    let p1 = Mat::from_rows(&[[2.5, 2.5, 0.5], [2.5, 6.5, 1.5], [0.5, 1.5, 0.5]]);
    let p2 = Mat::from_rows(&[[2.8, 2.6, 0.5], [2.6, 7.1, 1.8], [0.5, 1.8, 1.1]]);
    let expr = |s: &str, n| parse(s, n).expect("built-in expression parses");
    Scenario {
        core: LinearCore::new(a, b.clone(), c).expect("built-in plant is controllable"),
        nl: NonlinearPair::new(
            expr("0.05*sin(x3)", n),
            expr("0.5*sin(t)+4", n),
            DEFAULT_G_MIN,
            n,
        )
        .expect("built-in nonlinearity is valid"),
        reference: ReferenceModel::new(a_d, b).expect("built-in reference is Hurwitz"),
        tracking_p: Some(p1),
        channel: DisturbanceChannel::Matched { scale: 0.5 },
        adaptation: AdaptationConfig {
            gamma1: 20.0,
            gamma2: 200.0,
            gamma3: 1000.0,
            p: p2,
            theta_design: 0.5,
            d_tilde_max: 2.0,
            d_dot_max: 1.0,
            mu_rate: MuRate::Gamma2,
        },
        schedule: FaultSchedule::new(vec![
            FaultEvent::loss(15.0, 0.65),
            FaultEvent::disturbance(20.0, expr("1", 0)),
            FaultEvent::additive(25.0, expr("0.5*sin(2*t)", 0)),
        ])
        .expect("built-in schedule is valid"),
        r_signal: expr("step(t)", 0),
        x_hat0: vec![0.0; n],
        x_f0: vec![0.0; n],
        x_d0: vec![0.0; n],
        t_end: 40.0,
        h: 1e-3,
        mode: Mode::FaultyWithVa,
        eps_band: DEFAULT_EPS_BAND,
    }
}

/// Recorded signals at one grid instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub r: f64,
    pub x_d: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub x_f: Vec<f64>,
    /// Nominal control.
    pub u: f64,
    /// Input applied to the faulty plant.
    pub u_f: f64,
    pub adaptive: AdaptiveState,
    /// Fault quantities in force from this instant.
    pub injection: Injection,
    pub y_d: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub y_f: Vec<f64>,
}

impl TraceRow {
    /// `e = x̂ − x_d`
    pub fn e(&self) -> Vec<f64> {
        self.x_hat
            .iter()
            .zip(&self.x_d)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// `x̃ = x_f − x̂`
    pub fn x_tilde(&self) -> Vec<f64> {
        self.x_f
            .iter()
            .zip(&self.x_hat)
            .map(|(a, b)| a - b)
            .collect()
    }

    pub fn e_norm(&self) -> f64 {
        norm2(&self.e())
    }

    pub fn x_tilde_norm(&self) -> f64 {
        norm2(&self.x_tilde())
    }

    /// `‖y_f − y_d‖`
    pub fn output_error(&self) -> f64 {
        norm2(
            &self
                .y_f
                .iter()
                .zip(&self.y_d)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub mode: Mode,
    pub h: f64,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows with `t0 ≤ t < t1`, using grid indices so boundaries are exact.
    pub fn window(&self, t0: f64, t1: f64) -> &[TraceRow] {
        let lo = ((t0 / self.h).ceil().max(0.0) as usize).min(self.rows.len());
        let hi = ((t1 / self.h).ceil().max(0.0) as usize).min(self.rows.len());
        &self.rows[lo..hi.max(lo)]
    }

    /// Rows with `t0 ≤ t ≤ t1`.
    pub fn window_closed(&self, t0: f64, t1: f64) -> &[TraceRow] {
        let lo = ((t0 / self.h).ceil().max(0.0) as usize).min(self.rows.len());
        let hi = ((t1 / self.h).floor().max(-1.0) as isize + 1).max(0) as usize;
        let hi = hi.min(self.rows.len());
        &self.rows[lo..hi.max(lo)]
    }

    pub fn sup_of(rows: &[TraceRow], f: impl Fn(&TraceRow) -> f64) -> f64 {
        rows.iter().map(f).fold(0.0, f64::max)
    }

    pub fn rms_of(rows: &[TraceRow], f: impl Fn(&TraceRow) -> f64) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        (rows.iter().map(|r| f(r).powi(2)).sum::<f64>() / rows.len() as f64).sqrt()
    }
}

struct Layout {
    n: usize,
}

impl Layout {
    fn len(&self) -> usize {
        4 * self.n + 2
    }
    fn x_d<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        &z[..self.n]
    }
    fn x_hat<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        &z[self.n..2 * self.n]
    }
    fn x_f<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        &z[2 * self.n..3 * self.n]
    }
    fn adaptive(&self, z: &[f64]) -> AdaptiveState {
        AdaptiveState::unpack(&z[3 * self.n..])
    }
}

/// Signals and derivative of the augmented state at one evaluation.
struct Eval {
    r: f64,
    u: f64,
    u_f: f64,
    injection: Injection,
    dz: Vec<f64>,
}

struct Closed<'a> {
    s: &'a Scenario,
    gains: NominalGains,
    lay: Layout,
}

impl Closed<'_> {
    fn eval(&self, t: f64, z: &[f64], active_until: f64) -> Result<Eval> {
        let s = self.s;
        let lay = &self.lay;
        let n = lay.n;
        let (x_d, x_hat) = (lay.x_d(z), lay.x_hat(z));
        let r = s.r_signal.eval(t, &[])?;
        let u = nominal_control(&self.gains, &s.nl, t, x_hat, r)?;

        let mut dz = vec![0.0; lay.len()];
        dz[..n].copy_from_slice(&reference_deriv(&s.reference, x_d, r));
        dz[n..2 * n].copy_from_slice(&nominal_deriv(&s.core, &s.nl, t, x_hat, u)?);

        let (u_f, injection) = match s.mode {
            Mode::NominalOnly => (u, Injection::HEALTHY),
            Mode::FaultyNoVa | Mode::FaultyWithVa => {
                let x_f = lay.x_f(z);
                let injection = s.schedule.sample(active_until, t)?;
                let u_f = if s.mode == Mode::FaultyWithVa {
                    let x_tilde: Vec<f64> = x_f.iter().zip(x_hat).map(|(a, b)| a - b).collect();
                    let params = lay.adaptive(z);
                    let rates = adapt_deriv(&s.adaptation, &s.core, &s.nl, t, x_f, &x_tilde, u)?;
                    dz[3 * n..4 * n].copy_from_slice(&rates.m_dot);
                    dz[4 * n] = rates.n_dot;
                    dz[4 * n + 1] = rates.d_hat_dot;
                    reconfigure(&params, &x_tilde, u)
                } else {
                    u
                };
                let dx_f = faulty_deriv(&s.core, &s.nl, &s.channel, t, x_f, u_f, &injection)?;
                dz[2 * n..3 * n].copy_from_slice(&dx_f);
                (u_f, injection)
            }
        };
        Ok(Eval {
            r,
            u,
            u_f,
            injection,
            dz,
        })
    }

    fn record(&self, t: f64, z: &[f64], active_until: f64) -> Result<TraceRow> {
        let lay = &self.lay;
        let ev = self.eval(t, z, active_until)?;
        let x_d = lay.x_d(z).to_vec();
        let x_hat = lay.x_hat(z).to_vec();
        let x_f = if self.s.mode == Mode::NominalOnly {
            x_hat.clone()
        } else {
            lay.x_f(z).to_vec()
        };
        let core = &self.s.core;
        Ok(TraceRow {
            t,
            r: ev.r,
            y_d: output(core, &x_d),
            y_hat: output(core, &x_hat),
            y_f: output(core, &x_f),
            x_d,
            x_hat,
            x_f,
            u: ev.u,
            u_f: ev.u_f,
            adaptive: lay.adaptive(z),
            injection: ev.injection,
        })
    }
}

/// Runs the closed loop from `t = 0` to `t_end`, recording every grid point.
///
/// Aborts with [`Error::InputGainTooSmall`] if `g` vanishes along the nominal
/// trajectory and with [`NumericsError::NonFiniteDerivative`] on divergence.
pub fn run(s: &Scenario) -> Result<SimTrace> {
    s.validate()?;
    let n = s.n();
    let closed = Closed {
        s,
        gains: s.gains()?,
        lay: Layout { n },
    };
    let steps = s.steps();
    let h = s.h;
    let half = 0.5 * h;

    let mut z = Vec::with_capacity(closed.lay.len());
    z.extend_from_slice(&s.x_d0);
    z.extend_from_slice(&s.x_hat0);
    z.extend_from_slice(if s.mode == Mode::NominalOnly {
        &s.x_hat0
    } else {
        &s.x_f0
    });
    z.resize(closed.lay.len(), 0.0);
    AdaptiveState::identity(n).pack_into(&mut z[3 * n..]);

    let mut stepper = CompensatedRk4::new(z.len());
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..steps {
        let t = k as f64 * h;
        let cutoff = t + half;
        rows.push(closed.record(t, &z, cutoff)?);
        stepper.step(
            |ts, zs| closed.eval(ts, zs, cutoff).map(|e| e.dz),
            t,
            &mut z,
            h,
        )?;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFiniteDerivative { t: t + h }.into());
        }
    }
    let t = steps as f64 * h;
    rows.push(closed.record(t, &z, t + half)?);

    Ok(SimTrace {
        mode: s.mode,
        h,
        rows,
    })
}

/// Output-error summary for the interval that starts at one fault event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventWindow {
    pub at: f64,
    /// Start of the next event, or `t_end`.
    pub until: f64,
    /// `max ‖y_f − y_d‖` over the window.
    pub peak: f64,
    /// Time after `at` from which the error stays inside the band until the
    /// window closes; `None` if it is still outside at the end.
    pub recovery_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub eps_band: f64,
    /// `sup ‖e‖` over the last 20 % of the run.
    pub sup_e_tail: f64,
    /// `sup ‖x̃‖` over the last 20 % of the run.
    pub sup_xtilde_tail: f64,
    pub events: Vec<EventWindow>,
    pub r_bound: f64,
    pub x_hat_bound: f64,
    pub uub: UubBound,
    pub uub_satisfied: bool,
}

pub fn metrics(tr: &SimTrace, s: &Scenario, eps_band: f64) -> Result<Metrics> {
    let tail_start = (1.0 - TAIL_FRACTION) * s.t_end;
    let tail = tr.window_closed(tail_start, s.t_end);
    let sup_e_tail = SimTrace::sup_of(tail, TraceRow::e_norm);
    let sup_xtilde_tail = SimTrace::sup_of(tail, TraceRow::x_tilde_norm);

    let times = s.schedule.event_times();
    let events = times
        .iter()
        .enumerate()
        .filter(|(_, &at)| at <= s.t_end)
        .map(|(i, &at)| {
            let until = times.get(i + 1).copied().unwrap_or(s.t_end).min(s.t_end);
            let rows = if i + 1 < times.len() && until < s.t_end {
                tr.window(at, until)
            } else {
                tr.window_closed(at, s.t_end)
            };
            event_window(rows, at, until, eps_band)
        })
        .collect();

    let r_bound = SimTrace::sup_of(&tr.rows, |r| r.r.abs());
    let x_hat_bound = SimTrace::sup_of(&tr.rows, |r| norm2(&r.x_hat));
    let uub = uub_radius(&s.adaptation, &s.core, &s.gains()?, r_bound, x_hat_bound);
    Ok(Metrics {
        eps_band,
        sup_e_tail,
        sup_xtilde_tail,
        events,
        r_bound,
        x_hat_bound,
        uub_satisfied: sup_xtilde_tail <= uub.radius,
        uub,
    })
}

fn event_window(rows: &[TraceRow], at: f64, until: f64, eps: f64) -> EventWindow {
    let peak = SimTrace::sup_of(rows, TraceRow::output_error);
    let last_out = rows.iter().rposition(|r| r.output_error() > eps);
    let recovery_time = match last_out {
        None => Some(0.0),
        Some(i) if i + 1 == rows.len() => None,
        Some(i) => Some(rows[i + 1].t - at),
    };
    EventWindow {
        at,
        until,
        peak,
        recovery_time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(mode: Mode, t_end: f64) -> Scenario {
        Scenario {
            t_end,
            mode,
            ..demo_scenario()
        }
    }

    #[test]
    fn mode_names_roundtrip() {
        for m in Mode::ALL {
            assert_eq!(Mode::from_name(m.name()), Some(m));
        }
        assert_eq!(Mode::from_name("healthy"), None);
    }

    #[test]
    fn demo_scenario_is_valid() {
        let s = demo_scenario();
        s.validate().unwrap();
        assert_eq!(s.steps(), 40_000);
    }

    #[test]
    fn row_count_and_stride() {
        let tr = run(&short(Mode::FaultyWithVa, 0.5)).unwrap();
        assert_eq!(tr.len(), 501);
        for (k, r) in tr.rows.iter().enumerate() {
            assert_eq!(r.t, k as f64 * 1e-3);
        }
    }

    #[test]
    fn nominal_only_records_nominal_as_faulty() {
        let mut s = short(Mode::NominalOnly, 1.0);
        s.x_f0 = vec![1.0, 2.0, 3.0];
        let tr = run(&s).unwrap();
        for r in &tr.rows {
            assert_eq!(r.x_f, r.x_hat);
            assert_eq!(r.u_f, r.u);
        }
    }

    #[test]
    fn off_grid_horizon_rejected() {
        let mut s = demo_scenario();
        s.t_end = 1.0005;
        s.h = 1e-3;
        assert!(matches!(run(&s), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn vanishing_gain_aborts_with_time() {
        let mut s = short(Mode::FaultyNoVa, 2.0);
        s.nl.g = parse("1-t", 3).unwrap();
        match run(&s) {
            Err(Error::InputGainTooSmall { t, .. }) => assert!((t - 1.0).abs() < 1e-9),
            other => panic!("expected singular gain, got {other:?}"),
        }
    }

    #[test]
    fn divergence_aborts() {
        // The nominal loop cancels f, the faulty plant started elsewhere does not.
        let mut s = short(Mode::FaultyNoVa, 5.0);
        s.nl.f = parse("x3^2", 3).unwrap();
        s.x_f0 = vec![0.0, 0.0, 5.0];
        let out = run(&s);
        assert!(
            matches!(
                out,
                Err(Error::Numerics(NumericsError::NonFiniteDerivative { .. }))
                    | Err(Error::Eval(_))
            ),
            "{out:?}"
        );
    }

    #[test]
    fn windows_use_grid_indices() {
        let tr = run(&short(Mode::NominalOnly, 1.0)).unwrap();
        let w = tr.window(0.2, 0.3);
        assert_eq!(w.len(), 100);
        assert_eq!(w[0].t, 0.2);
        let c = tr.window_closed(0.9, 1.0);
        assert_eq!(c.len(), 101);
        assert_eq!(c.last().unwrap().t, 1.0);
    }

    #[test]
    fn zero_error_trace_metrics() {
        let mut s = short(Mode::FaultyWithVa, 2.0);
        s.r_signal = Expr::constant(0.0);
        s.schedule = FaultSchedule::new(vec![FaultEvent::loss(1.0, 0.5)]).unwrap();
        let tr = run(&s).unwrap();
        let m = metrics(&tr, &s, 0.05).unwrap();
        assert_eq!(m.sup_e_tail, 0.0);
        assert_eq!(m.sup_xtilde_tail, 0.0);
        assert_eq!(m.events.len(), 1);
        assert_eq!(m.events[0].recovery_time, Some(0.0));
        assert!(m.uub_satisfied);
    }

    #[test]
    fn event_window_recovery() {
        let row = |t: f64, err: f64| TraceRow {
            t,
            r: 0.0,
            x_d: vec![],
            x_hat: vec![],
            x_f: vec![],
            u: 0.0,
            u_f: 0.0,
            adaptive: AdaptiveState::identity(0),
            injection: Injection::HEALTHY,
            y_d: vec![0.0],
            y_hat: vec![0.0],
            y_f: vec![err],
        };
        let rows: Vec<_> = [0.0, 0.2, 0.01, 0.3, 0.01, 0.0]
            .iter()
            .enumerate()
            .map(|(k, &e)| row(1.0 + k as f64 * 0.5, e))
            .collect();
        let w = event_window(&rows, 1.0, 4.0, 0.05);
        assert_eq!(w.peak, 0.3);
        assert_eq!(w.recovery_time, Some(2.0));
        let w = event_window(&rows[..4], 1.0, 3.0, 0.05);
        assert_eq!(w.recovery_time, None);
    }
}
