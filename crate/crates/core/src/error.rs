use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative probability weight {value:e} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semi-definite (eigenvalue {eigenvalue:e})")]
    NotPositive { eigenvalue: f64 },

    #[error("density matrix trace {trace} is not 1")]
    BadTrace { trace: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported dimension {0}; expected 3 or 4")]
    UnsupportedDimension(usize),

    #[error("unsupported configuration: d={d} with {n_mubs} MUBs")]
    UnsupportedConfig { d: usize, n_mubs: usize },

    #[error("noise parameter Q={q} outside [0, 1/{d}]")]
    NoiseOutOfRange { q: f64, d: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("state is not normalized (norm² = {0})")]
    Unnormalized(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("key rate is not positive at Q=0 (r = {0})")]
    NoPositiveRate(f64),

    #[error("insufficient data for statistic {0}")]
    InsufficientData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Failures of the numeric pipeline, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NoPositiveRate(_) | Error::InsufficientData(_))
    }
}
