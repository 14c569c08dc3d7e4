use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: truncation must be at least 2")]
    InvalidDimension { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode {0} is not part of this space")]
    UnknownMode(String),

    #[error("duplicate mode index {0}")]
    DuplicateMode(usize),

    #[error("occupation {occupation} of mode {mode} exceeds truncation {dim}")]
    OccupationOutOfRange { mode: String, occupation: usize, dim: usize },

    #[error("partial trace needs at least one mode to keep")]
    EmptyKeepSet,

    #[error("operands act on different spaces")]
    SpaceMismatch,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("coupling strength must be positive, got {0}")]
    NonPositiveCoupling(f64),

    #[error("invalid Bloch angles: {0}")]
    InvalidAngles(String),

    #[error("invalid holonomy connection: {0}")]
    InvalidConnection(String),

    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    #[error("gate sequence is empty")]
    EmptySequence,

    #[error("gate `{0}` is a multi-pulse sequence and cannot be driven as a single pulse")]
    SequenceNotDrivable(String),

    #[error("rate `{name}` must be non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("step size {dt} μs too large: dt * {scale} = {product} exceeds {limit}")]
    StepTooLarge { dt: f64, scale: f64, product: f64, limit: f64 },

    #[error(
        "mechanical truncation overflow at t = {time} μs: top Fock level population {population:.3e} exceeds hard limit {limit:.3e}"
    )]
    TruncationOverflow { time: f64, population: f64, limit: f64 },

    #[error("numerical invariant violated at t = {time} μs: {detail}")]
    InvariantViolation { time: f64, detail: String },
}

impl Error {
    /// True for failures raised by the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::TruncationOverflow { .. } | Error::InvariantViolation { .. })
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { name, value })
    }
}
