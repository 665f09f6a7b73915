use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 1 (got {0})")]
    InvalidDimension(usize),
    #[error("box bounds are inconsistent: {0}")]
    InvalidBounds(String),
    #[error("box is too large: {what} = {count} overflows the 32-bit index type")]
    BoxTooLarge { what: &'static str, count: u64 },
    #[error("target distance n = {n} lies outside the box (largest admissible n is {max})")]
    OutOfBox { n: u32, max: u32 },
    #[error("vertex {vertex} is not in the graph ({count} vertices)")]
    InvalidVertex { vertex: u32, count: u32 },
    #[error("probability p = {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("probability p = {0} must lie strictly inside (0, 1) here")]
    OpenProbability(f64),
    #[error("configuration has {got} marks but the graph has {expected} bonds")]
    ConfigLength { got: usize, expected: usize },
    #[error("graph has {bonds} bonds, above the exhaustive-enumeration cap of {cap}")]
    EnumerationCap { bonds: u32, cap: u32 },
    #[error(
        "the truncated event is not increasing in the open bond set; sweep estimation refuses it"
    )]
    NotIncreasing,
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },
    #[error("{0}")]
    Scope(String),
    #[error("fit needs at least {need} usable points, got {got}")]
    InsufficientPoints { need: usize, got: usize },
    #[error("nonpositive value {value} at n = {n} in the fit window")]
    NonPositiveValue { n: u32, value: f64 },
    #[error("fit design matrix is singular")]
    SingularFit,
    #[error("fitted slope {0} does not describe a decaying curve")]
    NonDecaying(f64),
    #[error("zero-valued mean at n = {0}")]
    ZeroMean(u32),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl Error {
    pub fn arg(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

pub(crate) fn check_open_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::OpenProbability(p))
    }
}
