//! Experiment orchestration: configuration, datasets, strategy runs, and
//! reports.

mod config;
mod dataset;
mod report;
mod run;

pub use config::{
    default_scene, parse_number, CvParams, DatasetSource, ExperimentConfig, KeyValueDocument, LrtParams, Strategy,
    TrackSource,
};
pub use dataset::{manual_tracks, Dataset};
pub use report::{
    charts, emit_comparison, emit_report, metrics_csv, read_metrics, read_run, summary_csv, LabelledMetrics, Summary,
    METRICS_HEADER, SUMMARY_HEADER,
};
pub use run::{
    dataset_seed, load_dataset, run_oracle, run_strategy, CvDiagnostics, FrameMetrics, FrameStatus, LrtDiagnostics,
    RunOutput,
};
