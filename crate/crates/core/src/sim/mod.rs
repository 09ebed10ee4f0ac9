//! Batch harness: configuration, the simulation loop, logs, metrics and sweeps.

pub mod check;
pub mod config;
pub mod log;
pub mod metrics;
pub mod plot;
pub mod run;
pub mod sweep;
pub mod verify;

pub use check::{check, CheckOptions, CheckReport, CriterionResult};
pub use config::{ConfigError, SimConfig};
pub use self::log::TrajectoryLog;
pub use metrics::{PhaseTiming, RunMetrics};
pub use run::{run, Event, EventKind, RunOutput};
pub use sweep::{sweep, SweepTable};
