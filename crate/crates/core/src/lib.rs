//! Anytime-valid sequential tests built from group-invariant likelihood
//! ratios: a scale-invariant t-test, a location-invariant χ²-test, linear
//! regression with nuisance covariates and a label-agnostic Bernoulli test.
//!
//! Processes are carried in log space and recomputed from sufficient
//! statistics at each step. See [`process::SequentialTest`] for the streaming
//! interface and [`verify`] for the calibration harness.

pub mod error;
pub mod models;
pub mod process;
pub mod quad;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
pub use models::{AnyTest, Datum, ModelKind};
pub use process::{
    evalue, evalue_from_log, log_evalue_at, mixture_log_evalue, should_reject, step, Alternative, EProcessState,
    EValue, EffectSpec, Model, PriorGrid, SequentialTest, StoppingRule, Trajectory, TrajectoryRecord,
};
pub use specfun::NoncentralTParams;
