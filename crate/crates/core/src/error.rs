use std::path::PathBuf;

/// Errors returned by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid time unit {token:?}: {reason}")]
    InvalidUnit { token: String, reason: String },
    #[error("unknown time zone {0:?}")]
    UnknownTimeZone(String),

    #[error("ordering violation: timestamp {new} is not after the last timestamp {last}")]
    Ordering { last: f64, new: f64 },
    #[error("succession violation: slot starts at {got} but the series expects a start at {expected}")]
    Succession { expected: f64, got: f64 },
    #[error("label mismatch: series has [{expected}], element has [{got}]")]
    LabelMismatch { expected: String, got: String },
    #[error("element kind mismatch: {0}")]
    KindMismatch(String),
    #[error("invalid slot: start {start} must precede end {end} and match one {unit} step")]
    InvalidSlot { start: f64, end: f64, unit: String },
    #[error("data index {name:?} value {value} is outside [0, 1]")]
    IndexOutOfRange { name: String, value: f64 },
    #[error("non-finite value {value} for label {label:?}")]
    NonFinite { label: String, value: f64 },

    #[error("no element at timestamp {0}")]
    TimestampNotFound(f64),
    #[error("unknown label {label:?}; available labels: [{available}]")]
    UnknownLabel { label: String, available: String },
    #[error("position {index} out of bounds for a series of length {len}")]
    OutOfBounds { index: isize, len: usize },
    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("not enough data: {0}")]
    NotEnoughData(String),
    #[error("operation requires a fixed resolution, series has variable resolution")]
    VariableResolution,
    #[error("calendar unit {0} cannot be used for resampling; use aggregate() instead")]
    CalendarResample(String),
    #[error("unknown {what} {name:?}")]
    UnknownName { what: &'static str, name: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot normalize label {0:?}: it is constant")]
    ConstantLabel(String),
    #[error("cannot merge: {0}")]
    Merge(String),

    #[error("model is not fitted")]
    NotFitted,
    #[error("series length {len} is shorter than the model window {window}")]
    WindowTooShort { len: usize, window: usize },
    #[error("model contract violation: {0}")]
    ModelContract(String),
    #[error("format version mismatch: expected {expected:?}, found {found:?}")]
    VersionMismatch { expected: String, found: String },

    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate timestamp {t} at lines {first} and {second}")]
    DuplicateTimestamp { t: f64, first: usize, second: usize },
    #[error("malformed file: {0}")]
    Format(String),
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
    /// Short machine-readable code, used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidUnit { .. } => "invalid-unit",
            Error::UnknownTimeZone(_) => "unknown-tz",
            Error::Ordering { .. } => "ordering",
            Error::Succession { .. } => "succession",
            Error::LabelMismatch { .. } => "label-mismatch",
            Error::KindMismatch(_) => "kind-mismatch",
            Error::InvalidSlot { .. } => "invalid-slot",
            Error::IndexOutOfRange { .. } => "index-range",
            Error::NonFinite { .. } => "non-finite",
            Error::TimestampNotFound(_) => "not-found",
            Error::UnknownLabel { .. } => "unknown-label",
            Error::OutOfBounds { .. } => "out-of-bounds",
            Error::InvalidRange(_) => "invalid-range",
            Error::NotEnoughData(_) => "not-enough-data",
            Error::VariableResolution => "variable-resolution",
            Error::CalendarResample(_) => "calendar-resample",
            Error::UnknownName { .. } => "unknown-name",
            Error::Invalid(_) => "invalid",
            Error::ConstantLabel(_) => "constant-label",
            Error::Merge(_) => "merge",
            Error::NotFitted => "not-fitted",
            Error::WindowTooShort { .. } => "window",
            Error::ModelContract(_) => "model-contract",
            Error::VersionMismatch { .. } => "version",
            Error::Encoding(_) => "encoding",
            Error::Parse { .. } => "parse",
            Error::DuplicateTimestamp { .. } => "duplicate-timestamp",
            Error::Format(_) => "format",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
