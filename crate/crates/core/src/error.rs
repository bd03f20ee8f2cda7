//! Error type shared by every module in the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by callers (e.g. the CLI) to map errors to
/// exit codes without matching on every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The caller asked for something invalid (bad parameter, bad combination).
    Usage,
    /// The data cannot support the requested computation.
    Data,
    /// Underlying I/O failed.
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("timestamps not strictly increasing at row {row}")]
    NonMonotoneTimestamps { row: usize },

    #[error("cannot parse timestamp {value:?} at row {row}")]
    BadTimestamp { row: usize, value: String },

    #[error("cannot parse value {value:?} at row {row}")]
    BadValue { row: usize, value: String },

    #[error("missing column {name:?} in csv header")]
    MissingColumn { name: String },

    #[error("row {row}: sampling interval is irregular (gap {gap_seconds} s is not a whole multiple of dt = {dt_seconds} s within 1%)")]
    IrregularSampling {
        row: usize,
        gap_seconds: f64,
        dt_seconds: f64,
    },

    #[error("inferred sampling interval is not positive ({dt_seconds} s)")]
    NonPositiveDt { dt_seconds: f64 },

    #[error("series contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("constant input: fluctuation function is zero, no scaling exponent exists")]
    ConstantInput,

    #[error("scale {scale} exceeds the maximum allowed for this series length ({max} = length/4)")]
    ScaleTooLarge { scale: usize, max: usize },

    #[error("window [{start}, {start_plus_len}) falls outside the series (length {len})")]
    WindowOutOfBounds {
        start: usize,
        start_plus_len: usize,
        len: usize,
    },

    #[error("operation requires a wall-clock anchor (t0) but the series has none")]
    MissingTimeAnchor,

    #[error("band [{f_lo}, {f_hi}] Hz contains only {found} usable bins, need at least {min}")]
    TooFewBins {
        f_lo: f64,
        f_hi: f64,
        found: usize,
        min: usize,
    },

    #[error("record spans {record_days:.2} days, shorter than the {cutoff_days:.0}-day low-frequency cutoff; supply custom band edges")]
    RecordTooShortForBands {
        record_days: f64,
        cutoff_days: f64,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Classify the error for exit-code mapping.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) => ErrorKind::Usage,
            Error::Io { .. } => ErrorKind::Io,
            Error::Csv { .. } => ErrorKind::Data,
            _ => ErrorKind::Data,
        }
    }
}
