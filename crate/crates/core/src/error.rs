use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("line {line}: expected 21 landmark points, found {found}")]
    WrongPointCount { line: usize, found: usize },

    #[error("line {line}: timestamp {t} precedes previous timestamp {prev}")]
    NonMonotoneTimestamps { line: usize, t: f64, prev: f64 },

    #[error("series contains no usable frames")]
    EmptySeries,

    #[error("too few samples: {found} (need at least {required})")]
    TooFewSamples { found: usize, required: usize },

    #[error("samples span zero duration")]
    ZeroDuration,

    #[error("invalid sampling rate {0} Hz")]
    InvalidRate(f64),

    #[error("invalid Savitzky-Golay window {window} for polynomial order {poly_order} on {len} samples")]
    BadWindow {
        window: usize,
        poly_order: usize,
        len: usize,
    },

    #[error("derivative order {order} exceeds polynomial order {poly_order}")]
    OrderTooHigh { order: usize, poly_order: usize },

    #[error("signal is constant; cannot normalize (no finger movement)")]
    ConstantSignal,

    #[error("no dominant tapping period: autocorrelation is flat")]
    NoDominantPeriod,

    #[error("too few tap cycles: found {found} peaks, need at least {required}")]
    TooFewCycles { found: usize, required: usize },

    #[error("cycle events do not alternate peak/valley at t = {t}")]
    NonAlternating { t: f64 },

    #[error("cycle annotation at t = {t} lies outside the signal span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    #[error("invalid cycle set: {0}")]
    InvalidCycles(String),

    #[error("regression is degenerate: all abscissae are equal")]
    DegenerateRegression,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("ground truth is constant; R² is undefined")]
    ConstantTruth,

    #[error("sample too small: n = {n} (need at least {min})")]
    SampleTooSmall { n: usize, min: usize },

    #[error("sample too large: n = {n} (at most {max})")]
    SampleTooLarge { n: usize, max: usize },

    #[error("all sample values are equal")]
    AllEqual,

    #[error("input is constant; correlation is undefined")]
    ConstantInput,

    #[error("too few targets for ICC: {n} (need at least 3)")]
    TooFewTargets { n: usize },

    #[error("too few raters for ICC: {k} (need at least 2)")]
    TooFewRaters { k: usize },

    #[error("rating matrix has missing cells")]
    MissingCells,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("degradation target {target} fps exceeds source rate {source_fs} Hz")]
    UpsampleRequested { target: f64, source_fs: f64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True for errors that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_) | Error::DegenerateRegression)
    }
}
