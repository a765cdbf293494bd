//! Experiment orchestration: configuration, training, evaluation against the
//! oracle baselines, sweeps and result export.

mod config;
mod evaluation;
mod export;
mod sweep;
mod training;

pub use config::{EvaluationConfig, ExperimentConfig};
pub use evaluation::{
    bootstrap_mean, evaluate_baseline, evaluate_learned, evaluation_traces, mean, run_evaluation,
    EvaluationReport, Interval, PolicySummary,
};
pub use export::{
    export_plot_data, export_results, first_last_window, moving_average, read_metrics_csv,
    write_json, write_metrics_csv, Exported, NormalizedCosts, RunMetadata, RunMetrics, RunSummary,
    Summary, EPISODE_METRICS, METRICS_SCHEMA_VERSION,
};
pub use sweep::{run_sweep, run_sweep_with, SweepResult, SweepRow, SweepSpec};
pub use training::{
    new_agent, orchestrate, pretrain_omega, pretrain_omega_on, run_training, run_training_with,
    training_trace, EpisodeMetrics, PretrainReport, TrainingRun, HOLDOUT_POINTS,
};
