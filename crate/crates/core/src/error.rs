use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operands belong to different fields ({left} vs {right})")]
    FieldMismatch { left: String, right: String },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("unsupported field: {0}")]
    UnsupportedField(String),

    #[error("modulus {0:#x} is not an irreducible degree-8 polynomial")]
    ReducibleModulus(u16),

    #[error("value {value} out of range for GF({q})")]
    OutOfRange { value: u64, q: u32 },

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid probability {name} = {value}: {msg}")]
    InvalidProbability { name: &'static str, value: f64, msg: String },

    #[error("invalid PMF: {0}")]
    InvalidPmf(String),

    #[error(
        "sparsity {s} must exceed 1/q = {min}: below that the shares of classical secret sharing are already sparser"
    )]
    SparsityTooLow { s: f64, min: f64 },

    #[error("sparsity {0} must lie in (0, 1]")]
    SparsityOutOfRange(f64),

    #[error("support violation: p has mass {mass} at symbol {symbol} where r has none")]
    SupportViolation { symbol: usize, mass: f64 },

    #[error("infeasible: {constraint} violated ({lhs} vs {rhs})")]
    Infeasible { constraint: String, lhs: f64, rhs: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("divisibility constraint violated: {0}")]
    Divisibility(String),

    #[error("evaluation points must be distinct (both are {0})")]
    EqualEvaluationPoints(u32),

    #[error("insufficient responses: parts {parts:?} have fewer than 3 distinct evaluations")]
    InsufficientResponses { parts: Vec<usize> },

    #[error("coverage failure: untrusted blocks {untrusted:?} and trusted blocks {trusted:?} never arrived")]
    CoverageFailure { untrusted: Vec<usize>, trusted: Vec<usize> },

    #[error("colluders span both clusters; the clusters are non-communicating by assumption")]
    CrossClusterCollusion,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn infeasible(constraint: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Error::Infeasible { constraint: constraint.into(), lhs, rhs }
    }

    /// Errors raised because the requested operating point cannot be achieved.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::Infeasible { .. }
                | Error::SparsityTooLow { .. }
                | Error::SparsityOutOfRange(_)
                | Error::InvalidProbability { .. }
        )
    }

    /// Errors raised because not enough results arrived to decode.
    pub fn is_recovery_failure(&self) -> bool {
        matches!(self, Error::InsufficientResponses { .. } | Error::CoverageFailure { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
