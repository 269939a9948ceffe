use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("no samples")]
    NoSamples,

    #[error("spacing error at row {row}: expected {expected_secs} s after previous sample, found {found_secs} s")]
    Spacing {
        row: usize,
        expected_secs: i64,
        found_secs: i64,
    },

    #[error("domain error at row {row}: negative load {value}")]
    NegativeLoad { row: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("window error: {required} samples required, {available} available")]
    Window { required: usize, available: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: model expects {expected} features, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("model {0} is driven by the trace, not by feature vectors")]
    NotFeatureDriven(&'static str),

    #[error("unsupported model format version {found} (supported: {supported})")]
    Version { found: u16, supported: u16 },

    #[error("corrupt model file: {0}")]
    Corrupt(String),

    #[error("model scalar width mismatch: file has {found}-byte floats, expected {expected}")]
    ScalarWidth { found: u8, expected: u8 },

    #[error("requested {requested} training days, only {available} available")]
    NotEnoughDays { requested: u32, available: u32 },

    #[error("decision count mismatch: expected {expected}, got {found}")]
    DecisionCount { expected: usize, found: usize },

    #[error("PCA needs at least 2 distinct rows")]
    TooFewRows,

    #[error("missing input: {0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
