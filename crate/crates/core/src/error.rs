use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error{}: {message}", location.as_ref().map(|l| format!(" ({l})")).unwrap_or_default())]
    Parse { message: String, location: Option<String> },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("row {row}: {message}")]
    Schema { row: u64, message: String },

    #[error("diary {respondent}/{diary_day} is incomplete: missing episode indices {missing:?}")]
    IncompleteDiary { respondent: String, diary_day: u32, missing: Vec<u32> },

    #[error("insufficient data for `{activity}` ({type_key}, {day_type}): {found} episodes, need {needed}")]
    InsufficientData {
        activity: String,
        type_key: String,
        day_type: String,
        found: usize,
        needed: usize,
    },

    #[error("no data: {0}")]
    NoData(String),

    #[error("activity `{0}` observed under a single weather category")]
    SingleWeatherCategory(String),

    #[error("empty catalog for type `{type_key}` on {day_type}")]
    EmptyCatalog { type_key: String, day_type: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("reference value is zero at index {index}; use WAPE instead of MAPE")]
    ZeroReference { index: usize },

    #[error("series too short: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("misaligned curves: {0}")]
    Misaligned(String),

    #[error("mismatched runs: {0}")]
    MismatchedRuns(String),

    #[error("unmapped activity codes: {0:?}")]
    UnmappedCodes(Vec<String>),

    #[error("unknown behavior kind `{0}`")]
    UnknownBehavior(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn parse(message: impl Into<String>) -> Self {
        Error::Parse { message: message.into(), location: None }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    /// Prefixes parse/validation errors with the file they came from.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            Error::Parse { message, location } => Error::Parse {
                message,
                location: Some(match location {
                    Some(l) => format!("{}, {l}", path.display()),
                    None => path.display().to_string(),
                }),
            },
            Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
            Error::Schema { row, message } => Error::Schema { row, message: format!("{message} (in {})", path.display()) },
            other => other,
        }
    }
}

/// Translates a byte span into a 1-based line number for config diagnostics.
pub(crate) fn line_of(text: &str, byte: usize) -> usize {
    text[..byte.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub(crate) fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let location = e.span().map(|s| format!("line {}", line_of(text, s.start)));
    Error::Parse { message: e.message().trim().to_string(), location }
}
