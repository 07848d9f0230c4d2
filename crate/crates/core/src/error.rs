use thiserror::Error;

/// Everything that can go wrong while evaluating a rate, a bound or a sweep.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate channel: eta = 0 and n_th = 0 leaves no signal and no noise")]
    DegenerateChannel,

    #[error("invalid channel parameter: {0}")]
    InvalidChannel(String),

    #[error("unphysical QBER triple (qx={qx}, qy={qy}, qz={qz}): Bell-diagonal weight {weight} < 0")]
    UnphysicalQber { qx: f64, qy: f64, qz: f64, weight: f64 },

    #[error("non-physical covariance matrix: symplectic eigenvalue {0} < 1")]
    NonPhysicalCovariance(f64),

    #[error("normalization unavailable: channel is entanglement-breaking")]
    NormalizationUnavailable,

    #[error("rate is not monotone on [{lo}, {hi}]: {detail}")]
    MonotonicityViolation { lo: f64, hi: f64, detail: String },

    #[error("truncation error: thermal tail mass {tail:e} beyond cutoff {cutoff}")]
    Truncation { cutoff: usize, tail: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
