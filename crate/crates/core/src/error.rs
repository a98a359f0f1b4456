use thiserror::Error;

/// Errors raised by the checkers, constructors and codecs of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid automorphism: {0}")]
    InvalidAutomorphism(String),

    #[error("invalid characteristic function: {0}")]
    InvalidCharFn(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("cross determinant a2*b1 - a1*b2 is zero")]
    CrossDeterminantZero,

    #[error("corner determinant (a1-1)(b2-1) - (a2-1)(b1-1) vanishes")]
    CornerDeterminantZero,

    #[error("degenerate subgroup {0}: {1}")]
    DegenerateSubgroup(&'static str, String),

    #[error("matrix is not in normal form: {0}")]
    NotNormalForm(String),

    #[error("twisted factor present: {0}")]
    TwistPresent(String),

    #[error("step {0} is not a multiple of the grid spacing")]
    OffGrid(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("not of the quadratic-in-s form: {0}")]
    NotQuadraticForm(String),

    #[error("symmetry violated: {0}")]
    SymmetryViolated(String),

    #[error("no positive sigma solution")]
    NoPositiveSigma,

    #[error("invalid probability: {0}")]
    InvalidProbability(String),

    #[error("not a counterexample: {0}")]
    NotACounterexample(String),

    #[error("construction failed self-check: {0}")]
    SelfCheckFailed(String),

    #[error("invalid base sequence: {0}")]
    InvalidBase(String),

    #[error("{0}")]
    NotInHa(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
