//! Config-driven runs: evaluation, per-round reports and output artifacts.

pub mod config;
mod metrics;
mod report;
mod runner;
mod svg;

pub use config::{
    AttackConfig, AttackKind, BackdoorConfig, DatasetSource, ExperimentConfig, FederationConfig, ModelConfig,
    ScheduleConfig,
};
pub use metrics::{cumulative_mean, evaluate_backdoor, evaluate_main, percentile};
pub use report::{to_csv, RoundReport, CSV_HEADER};
pub use runner::{load_dataset, run_experiment, write_artifacts, Experiment, ExperimentOutput};
pub use svg::render_curves;
