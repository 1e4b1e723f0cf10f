//! Adaptive virtual-actuator fault-tolerant control for single-input affine
//! nonlinear plants `ẋ = A x + b (f(x) + g(x) u)`.
//!
//! A feedback-linearizing controller makes the nominal plant match a
//! reference model. When the actuator loses effectiveness, suffers an
//! additive fault, or a disturbance enters, an adaptive virtual actuator
//! placed between controller and plant reshapes the input so the controller
//! keeps seeing nominal behavior.
//!
//! ```
//! use vaftc_core::{demo_scenario, run, Mode};
//!
//! let mut s = demo_scenario();
//! s.t_end = 1.0;
//! s.mode = Mode::NominalOnly;
//! let trace = run(&s).unwrap();
//! assert_eq!(trace.len(), 1001);
//! ```

pub mod controller;
pub mod engine;
pub mod error;
pub mod exprlang;
pub mod faults;
pub mod numerics;
pub mod plant;
pub mod verify;
pub mod virtual_actuator;

pub use controller::{nominal_control, synthesize_gains, NominalGains};
pub use engine::{
    demo_scenario, metrics, run, EventWindow, Metrics, Mode, Scenario, SimTrace, TraceRow,
};
pub use error::{Error, Result};
pub use exprlang::{EvalError, Expr, ParseError};
pub use faults::{FaultEvent, FaultKind, FaultSchedule};
pub use numerics::{Mat, NumericsError};
pub use plant::{DisturbanceChannel, Injection, LinearCore, NonlinearPair, ReferenceModel};
pub use verify::{check_condition, synthesize_p, ConditionLabel, ConditionReport, Verdict};
pub use virtual_actuator::{AdaptationConfig, AdaptiveState, MuRate, UubBound};
