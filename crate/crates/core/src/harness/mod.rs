//! Monte-Carlo trials, sample-complexity sweeps, metrics and file formats.

pub mod io;
mod metrics;
mod sweep;
mod trials;

pub use metrics::{metrics, Metrics, DEFAULT_PARAM_NOISELESS, DEFAULT_PARAM_NOISY, DEFAULT_TOPO_THRESHOLD};
pub use sweep::{sample_complexity_sweep, MStrategy, MinimalM, MinimalRule, SweepResult, SweepRow, SweepSpec, SWEEP_HEADER};
pub use trials::{draw_instance, run_trial, run_trials, GeneratorPreset, TrialLog, TrialSpec, TrialSummary};
