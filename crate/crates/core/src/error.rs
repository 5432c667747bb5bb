use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not agree.
    DimensionMismatch {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// A precondition on the arguments does not hold.
    InvalidArgument(String),
    /// An underlying factorization failed to converge.
    NumericalFailure(String),
    /// An internal guarantee was violated; indicates a bug or broken input contract.
    InvariantViolation(String),
    /// A matrix that must be inverted is singular to working precision.
    Conditioning(String),
    /// A stage kept producing rank-deficient intermediates after every retry.
    RankDeficient { stage: &'static str, attempts: usize },
}

impl Error {
    /// True for errors caused by the caller's arguments rather than numerics.
    pub fn is_argument_error(&self) -> bool {
        matches!(self, Error::DimensionMismatch { .. } | Error::InvalidArgument(_))
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { op, expected, found } => write!(
                f,
                "{op}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::InvariantViolation(msg) => write!(f, "invariant violated: {msg}"),
            Error::Conditioning(msg) => write!(f, "ill-conditioned: {msg}"),
            Error::RankDeficient { stage, attempts } => {
                write!(f, "{stage}: rank deficient after {attempts} attempts")
            }
        }
    }
}

impl core::error::Error for Error {}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
