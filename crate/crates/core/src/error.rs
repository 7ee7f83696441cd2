use thiserror::Error;

/// Errors produced anywhere in the synthesis, feature, SVM and store layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("amplitude threshold At = {threshold} leaves no samples above it")]
    EmptyMask { threshold: f64 },

    #[error("{feature}: need more than one masked sample, got {count}")]
    InsufficientSamples { feature: &'static str, count: usize },

    #[error("{feature}: negative variance radicand {radicand:e}")]
    NumericConsistency {
        feature: &'static str,
        radicand: f64,
    },

    #[error("spectrum power is zero around the carrier")]
    ZeroSpectrum,

    #[error("feature `{feature}` failed: {source}")]
    Feature {
        feature: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("training labels contain a single class")]
    DegenerateLabels,

    #[error("SMO did not converge after {passes} passes (worst KKT violation {worst:e})")]
    Convergence { passes: usize, worst: f64 },

    #[error("class {class} has {count} rows, need at least 2")]
    InsufficientClassData { class: String, count: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("unknown modulation label `{0}`")]
    UnknownLabel(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("persistence error: {0}")]
    Persistence(String),
}

impl Error {
    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn in_feature(self, feature: &'static str) -> Self {
        Error::Feature {
            feature,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Persistence(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
