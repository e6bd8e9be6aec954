use thiserror::Error;

/// Crate-wide error type. Every message is a one-line diagnostic naming the
/// violated constraint, suitable for direct CLI emission.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("conjugate is infinite: phi grows at most linearly and s = {s} exceeds its slope")]
    InfiniteConjugate { s: f64 },

    #[error("conjugate range is bounded: psi jumps to infinity at {sup}; no finite inverse exists for this argument")]
    BoundedConjugateRange { sup: f64 },

    #[error("c_phi series diverges for this Young function; the weak-type hypothesis fails")]
    DivergentCPhi,

    #[error("grid mismatch: expected d={expected_d} L={expected_level}, got d={got_d} L={got_level}")]
    GridMismatch {
        expected_d: usize,
        expected_level: u32,
        got_d: usize,
        got_level: u32,
    },

    #[error("cube not found in the layer decomposition")]
    CubeNotInDecomposition,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
