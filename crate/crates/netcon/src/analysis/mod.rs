//! Execution, measurement, and verification drivers: single runs with
//! observers and traces, calibrated baselines, parallel runtime estimation,
//! lifted-replay disconnection experiments, and exhaustive sweeps of small
//! instances.

pub mod baseline;
pub mod exhaustive;
pub mod replay;
pub mod runner;
pub mod scaling;

pub use baseline::{baseline_process, expected_steps, harmonic, sample_mean, BaselineKind};
pub use exhaustive::{exhaustive_verify, Property, SweepError, SweepReport};
pub use replay::{
    copies_in_lockstep, replay_impossibility, ImpossibilityReport, LiftSource, LiftVerdict,
};
pub use runner::{
    connectivity_violation, run, ConnectivityMonitor, Driver, Monitor, Outcome, RunReport,
    StopWhen, TopologyClass, Trace, TraceError, TraceEvent, Violation, CSV_HEADER,
};
pub use scaling::{estimate_runtime, ScalingReport, SizeStats};
