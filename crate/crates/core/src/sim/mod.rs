//! Monte-Carlo harness: deployments, per-trial evaluation, sweeps and the
//! constraint-driven strategy selector.

mod deploy;
mod scenario;
mod select;
mod stats;
mod sweep;
mod trial;

pub use deploy::{deploy, sample_in_cell, Deployment, PAIR_ATTEMPTS};
pub use scenario::{Band, BsLayout, D2dParams, Scenario};
pub use select::{select_strategy, OperatingPoint, StrategyChoice};
pub use stats::{disjoint, wilson_interval, Z95};
pub use sweep::{
    aggregate, apply_axis, evaluate, rows_to_csv, run_trials, sweep, write_rows, Aggregate, SweepAxis, SweepRow,
    SweepSpec,
};
pub use trial::{cc_baseline, cc_baseline_at, run_trial, BandTrial, D2dOutcome, TrialEngine, TrialResult};
