use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample size must be >= 1")]
    BadSampleSize,
    #[error("noise standard deviation must be >= 0, got {0}")]
    BadSigma(f64),
    #[error("sample size {n} is not a power of two")]
    NonDyadicN { n: usize },
    #[error("grid length {got} does not match sample size {want}")]
    GridLengthMismatch { got: usize, want: usize },
    #[error("translate index {k} out of range for level {m} (periodized range 0..{max})")]
    TranslateOutOfRange { m: u32, k: usize, max: usize },
    #[error("level {m} is not in the model chain")]
    LevelNotInChain { m: usize },
    #[error("sample size {n} < 2^{m} cannot resolve level {m}")]
    LevelTooFine { n: usize, m: u32 },
    #[error("functional kind is not supported for this basis: {0}")]
    UnsupportedFunctional(String),
    #[error("interval length must lie in (0, 1], got {0}")]
    BadIntervalLength(f64),
    #[error("Gram matrix is not positive semidefinite (v'Gv = {0})")]
    NonPsdGram(f64),
    #[error("weight entries must be nonnegative, got {0}")]
    NegativeWeight(f64),
    #[error("model collection is empty")]
    EmptyModelList,
    #[error("custom functionals carry no closed-form truth value; supply one explicitly")]
    NoTruthForCustom,
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
