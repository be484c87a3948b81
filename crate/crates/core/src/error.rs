use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("FFT size {n} is too small (minimum {min})")]
    InvalidFftSize { n: usize, min: usize },

    #[error("subcarrier {0} appears more than once")]
    DuplicateSubcarrier(usize),

    #[error("subcarrier {index} is out of range for N = {n}")]
    SubcarrierOutOfRange { index: usize, n: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{0} has zero power")]
    ZeroPower(&'static str),

    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    SampleRateMismatch { expected: f64, found: f64 },

    #[error("invalid channel profile: {0}")]
    InvalidProfile(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Stable, machine-readable identifier of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidFftSize { .. } => "invalid_fft_size",
            Error::DuplicateSubcarrier(_) => "duplicate_subcarrier",
            Error::SubcarrierOutOfRange { .. } => "subcarrier_out_of_range",
            Error::EmptyInput(_) => "empty_input",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::ZeroPower(_) => "zero_power",
            Error::SampleRateMismatch { .. } => "sample_rate_mismatch",
            Error::InvalidProfile(_) => "invalid_profile",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
            Error::Unsupported(_) => "unsupported",
            Error::Trial { .. } => "trial",
            Error::Io(_) => "io",
        }
    }
}
