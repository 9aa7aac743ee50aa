use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("text is empty or renders no ink")]
    EmptyText,
    #[error("rendered text ({needed_w}x{needed_h}) overflows canvas {width}x{height}")]
    TextOverflow {
        needed_w: usize,
        needed_h: usize,
        width: usize,
        height: usize,
    },
    #[error("malformed netpbm header: {0}")]
    MalformedHeader(String),
    #[error("image has a zero dimension")]
    DimensionZero,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite activation in {0}")]
    NonFiniteActivation(String),
    #[error("trace mismatch: {0}")]
    TraceMismatch(String),
    #[error("trace holds no steps")]
    EmptyTrace,
    #[error("layer variance needs at least two layers, got {0}")]
    FewerThanTwoLayers(usize),
    #[error("score mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("token index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("attention row {0} has zero mass")]
    ZeroRowMass(usize),
    #[error("duplicate sweep cell ratio={ratio} step={step} metric={metric}")]
    DuplicateCell {
        ratio: f64,
        step: usize,
        metric: String,
    },
    #[error("prompt word is empty")]
    EmptyWord,
    #[error("malformed tensor file: {0}")]
    TensorFormat(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyText => "EmptyText",
            Error::TextOverflow { .. } => "TextOverflow",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::DimensionZero => "DimensionZero",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::NonFiniteActivation(_) => "NonFiniteActivation",
            Error::TraceMismatch(_) => "TraceMismatch",
            Error::EmptyTrace => "EmptyTrace",
            Error::FewerThanTwoLayers(_) => "FewerThanTwoLayers",
            Error::ModeMismatch(_) => "ModeMismatch",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::ZeroRowMass(_) => "ZeroRowMass",
            Error::DuplicateCell { .. } => "DuplicateCell",
            Error::EmptyWord => "EmptyWord",
            Error::TensorFormat(_) => "TensorFormat",
            Error::Io { .. } => "Io",
            Error::Json(_) => "Json",
        }
    }

    /// Process exit code: 2 for configuration and input problems, 3 for
    /// failures while running the model or analysis.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFiniteActivation(_)
            | Error::TraceMismatch(_)
            | Error::EmptyTrace
            | Error::ZeroRowMass(_)
            | Error::FewerThanTwoLayers(_) => 3,
            _ => 2,
        }
    }
}
