//! Experiment harness: configuration, the trial pipeline and result emission.

mod config;
mod emit;
mod run;

pub use config::{ExperimentConfig, OutputFormat, Resolved};
pub use emit::{emit_results, to_csv_string, to_json_string};
pub use run::{
    aggregate, run, run_bounds, run_census, run_identity, run_theorem1_sweep, run_theorem2_check,
    trial_seeds, Aggregate, Command, Report, ReportConfig, TrialRecord, Units,
};
