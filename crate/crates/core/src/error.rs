use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed channel label {0:?}")]
    MalformedLabel(String),

    #[error("inverted channel range {0:?}")]
    InvertedRange(String),

    #[error("unknown channel {0}")]
    UnknownChannel(String),

    #[error("unknown electrode {0}")]
    UnknownElectrode(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("non-finite sample in channel {channel} at row {row}")]
    NonFiniteSample { channel: String, row: usize },

    #[error("annotation out of bounds: {0}")]
    AnnotationOutOfBounds(String),

    #[error("sampling rate {fs} Hz is not above the Nyquist limit {limit} Hz")]
    NyquistViolation { fs: f64, limit: f64 },

    #[error("band ({low}, {high}) Hz is invalid for fs = {fs} Hz and order {order}")]
    BandOutOfRange { low: f64, high: f64, fs: f64, order: usize },

    #[error("designed filter is unstable (pole magnitude {0})")]
    UnstableFilter(f64),

    #[error("frame of length {len} is too short for {levels} DWT levels")]
    FrameTooShort { len: usize, levels: usize },

    #[error("frame count mismatch: expected {expected}, found {found} for {channel}")]
    FrameCountMismatch {
        expected: usize,
        found: usize,
        channel: String,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dataset contains a single class")]
    SingleClassDataset,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{n} players exceed the exact enumeration limit of {max}")]
    TooManyPlayers { n: usize, max: usize },

    #[error("empty attribution sequence")]
    EmptySequence,

    #[error("invalid synthetic spec: {0}")]
    Spec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedLabel(_) => "MalformedLabel",
            Error::InvertedRange(_) => "InvertedRange",
            Error::UnknownChannel(_) => "UnknownChannel",
            Error::UnknownElectrode(_) => "UnknownElectrode",
            Error::Schema(_) => "SchemaError",
            Error::NonFiniteSample { .. } => "NonFiniteSample",
            Error::AnnotationOutOfBounds(_) => "AnnotationOutOfBounds",
            Error::NyquistViolation { .. } => "NyquistViolation",
            Error::BandOutOfRange { .. } => "BandOutOfRange",
            Error::UnstableFilter(_) => "UnstableFilter",
            Error::FrameTooShort { .. } => "FrameTooShort",
            Error::FrameCountMismatch { .. } => "FrameCountMismatch",
            Error::EmptyDataset => "EmptyDataset",
            Error::SingleClassDataset => "SingleClassDataset",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::Domain(_) => "DomainError",
            Error::TooManyPlayers { .. } => "TooManyPlayers",
            Error::EmptySequence => "EmptySequence",
            Error::Spec(_) => "SpecError",
            Error::Config(_) => "ConfigError",
            Error::Io { .. } => "IoError",
            Error::Parse { .. } => "ParseError",
        }
    }

    /// Errors caused by bad input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::UnstableFilter(_) | Error::Io { .. } | Error::EmptySequence)
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
