//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("non-numeric value {value:?} at row {row}, column {column:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value at row {row}, column {column:?}")]
    NonFiniteCell { row: usize, column: String },

    #[error("duplicate feature name {0:?}")]
    DuplicateFeature(String),

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("reference and current datasets must have identical feature names in identical order")]
    FeatureMismatch,

    #[error("label column must be present in both datasets or in neither")]
    LabelMismatch,

    #[error("all features are constant in the reference sample; nothing left to compare")]
    AllFeaturesDropped,

    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),

    #[error("degenerate range: all pooled values equal {0}; no histogram can be formed")]
    DegenerateRange(f64),

    #[error("kernel bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("median heuristic needs at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("all points are identical; pairwise distances are all zero")]
    IdenticalPoints,

    #[error("dimension mismatch: left has {left} columns, right has {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{estimator} estimator needs at least {needed} samples per side, got {got}")]
    TooFewSamples {
        estimator: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("basis Gram system is singular with lambda = 0; rerun with lambda > 0")]
    SingularSystem,

    #[error("hyperparameter grid must be nonempty")]
    EmptyGrid,

    #[error("cross-validation needs at least {folds} samples per side, got {got}")]
    TooFewSamplesForFolds { folds: usize, got: usize },

    #[error("empty sample passed to a two-sample test")]
    EmptySample,

    #[error("holdout fraction must lie strictly between 0 and 1, got {0}")]
    BadHoldoutFraction(f64),

    #[error("holdout too small: {got} rows after splitting, need at least {needed}")]
    HoldoutTooSmall { needed: usize, got: usize },

    #[error("permutation test needs at least 99 permutations, got {0}")]
    TooFewPermutations(usize),

    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),

    #[error("stream too short: {got} rows, need at least {needed}")]
    StreamTooShort { needed: usize, got: usize },

    #[error("window must be at least {needed}, got {got}")]
    WindowTooSmall { needed: usize, got: usize },

    #[error("stride must be at least 1")]
    BadStride,

    #[error("{metric} requires binary outcomes (0/1); found value {value}")]
    NonBinaryOutcome { metric: &'static str, value: f64 },

    #[error("loss sample invalid: {0}")]
    InvalidLossSample(String),

    #[error("neighbor count k = {k} out of range for sample of size {n}")]
    BadNeighborCount { k: usize, n: usize },

    #[error("ratio bounds must satisfy 0 < lower < 1 < upper, got ({lower}, {upper})")]
    BadRatioBounds { lower: f64, upper: f64 },

    #[error("no common support: no points fall inside the density-ratio band")]
    NoCommonSupport,

    #[error("requested {requested} components but data has only {available} features")]
    TooManyComponents { requested: usize, available: usize },

    #[error("empty series")]
    EmptySeries,

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
