use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Engine errors. Every variant carries a stable `E_*` code (see [`Error::code`])
/// that the service and CLI surface verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("year {year} outside the archive range {min}..={max}")]
    YearRange { year: i32, min: i32, max: i32 },

    #[error("network failure: {0}")]
    Network(String),

    #[error("disk failure at {path}: {source}")]
    Disk {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("corrupt gzip stream in {path}: {reason}")]
    CorruptGz { path: PathBuf, reason: String },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("station {station} has country prefix {prefix} that is not in the country table")]
    UnknownCountry { station: String, prefix: String },

    #[error("unknown scope: {0}")]
    UnknownScope(String),

    #[error("already exists: {0}")]
    Exists(String),

    #[error("database {0} is locked by another writer")]
    Locked(String),

    #[error("year {year} is not loaded in {database}")]
    MissingYear { database: String, year: i32 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unit {unit} is not valid for {variable}")]
    UnitMismatch { variable: String, unit: String },

    #[error("neighbour view needs at least one station")]
    EmptyStationList,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("metric undefined: {0}")]
    Degenerate(String),

    #[error("length mismatch: {0}")]
    Length(String),

    #[error("forecast and actuals share no months")]
    NoOverlap,
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::YearRange { .. } => "E_YEAR_RANGE",
            Error::Network(_) => "E_NETWORK",
            Error::Disk { .. } => "E_DISK",
            Error::CorruptGz { .. } => "E_CORRUPT_GZ",
            Error::Malformed(_) => "E_MALFORMED",
            Error::UnknownCountry { .. } => "E_UNKNOWN_COUNTRY",
            Error::UnknownScope(_) => "E_UNKNOWN_SCOPE",
            Error::Exists(_) => "E_EXISTS",
            Error::Locked(_) => "E_LOCKED",
            Error::MissingYear { .. } => "E_MISSING_YEAR",
            Error::Empty(_) => "E_EMPTY",
            Error::UnitMismatch { .. } => "E_UNIT_MISMATCH",
            Error::EmptyStationList => "E_EMPTY_STATION_LIST",
            Error::InsufficientData(_) => "E_INSUFFICIENT_DATA",
            Error::Numeric(_) => "E_NUMERIC",
            Error::Degenerate(_) => "E_DEGENERATE",
            Error::Length(_) => "E_LENGTH",
            Error::NoOverlap => "E_NO_OVERLAP",
        }
    }

    pub fn disk(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Disk {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::Malformed(msg.into())
    }
}

/// Attach a path to an `io::Result`, producing `E_DISK`.
pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|e| Error::disk(path, e))
    }
}
