//! Metrics, the masked-headers sweep, and baseline runners.

mod baseline;
mod metrics;
mod sweep;

pub use baseline::{
    baseline_records, run_baseline, BaselineConfig, BaselineKind, ColumnClassifier,
    LinearClassifier, LinearClassifierConfig,
};
pub use metrics::{
    column_kind, compute_metrics, label_frequency_rows, split_by_kind, ColumnKind, KindReport,
    LabelScore, MetricsReport, PredictionRecord,
};
pub use sweep::{
    mask_columns, masked_count, run_masked_sweep, SweepPoint, DEFAULT_PERCENTAGES, DEFAULT_REPEATS,
};
