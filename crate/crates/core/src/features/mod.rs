//! Post properties, label aggregation and per-class distribution summaries.

mod dataset;
mod labels;
mod summary;
mod vector;

pub use dataset::{
    build_dataset, parse_dataset, parse_vote_sheets, read_dataset, write_dataset, BuildReport,
    LabeledExample, Provenance, DATASET_HEADER,
};
pub use labels::{aggregate_labels, resolve_label, Criteria, Label, LabelError, Resolution, Vote, VoteSheet};
pub use summary::{
    iqr_bounds, quantile_sorted, summarize, DistributionReport, FeatureClassSummary, Histogram,
    SummaryOptions, DEFAULT_BINS, DEFAULT_IQR_FACTOR,
};
pub use vector::{
    extract_features, extract_with_flags, parse_feature_list, round_significant, Degeneracy,
    FeatureName, FeatureVector, UnknownFeature, FEATURE_COUNT,
};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("need at least 4 values for quartiles, got {0}")]
    TooFewValues(usize),
    #[error("NaN in input")]
    NotANumber,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
