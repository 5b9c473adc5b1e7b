use thiserror::Error;

/// Errors produced by data handling, the classifier, the metrics and the
/// optimization engines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read `{path}`: {source}")]
    FileRead {
        path: String,
        source: std::io::Error,
    },
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("label column `{0}` not found in header")]
    LabelColumnNotFound(String),
    #[error("file has a header but no data rows")]
    NoRows,
    #[error("row {row} has {got} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("column `{0}` has no non-missing values")]
    AllMissingColumn(String),
    #[error("row {0} has a missing label")]
    MissingLabel(usize),
    #[error("need at least 5 rows for a 60/20/20 split, got {0}")]
    TooFewRows(usize),

    #[error("mask length {got} does not match expected {expected}")]
    MaskLength { expected: usize, got: usize },
    #[error("feature mask selects no features")]
    EmptyFeatureMask,
    #[error("instance mask selects no instances")]
    EmptyInstanceMask,

    #[error("cannot fit a tree on an empty dataset")]
    EmptyTrainingSet,
    #[error("dataset has {got} features but the tree was fit on {expected}")]
    FeatureCountMismatch { expected: usize, got: usize },

    #[error("vectors must be nonempty and of equal length ({0} vs {1})")]
    VectorLength(usize, usize),
    #[error("need at least 2 values for rank correlation, got {0}")]
    TooFewValues(usize),
    #[error("non-finite value in input vector")]
    NonFinite,
    #[error("rank correlation undefined: zero-variance ranks")]
    UndefinedCorrelation,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("snapshot degenerate: all {0} probe accuracies are equal")]
    DegenerateSnapshot(usize),
    #[error("instance genome popcount {got} exceeds cap {cap}")]
    InstanceCapExceeded { got: usize, cap: usize },

    #[error("schedule bounds invalid: n0={n0}, ratio={ratio}, n_max={n_max}")]
    BadSchedule { n0: usize, ratio: f64, n_max: usize },
    #[error("sample size {m} exceeds training rows {n_train}")]
    SampleTooLarge { m: usize, n_train: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
