use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{what} of size {size} exceeds cap {cap}")]
    CapExceeded { what: &'static str, size: u64, cap: u64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different parents")]
    Mismatch,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("singular curve")]
    Singular,
    #[error("point is not on the curve")]
    NotOnCurve,
    #[error("{0}-torsion is not fully rational")]
    TorsionNotRational(u64),
    #[error("point is not {0}-torsion")]
    NotTorsion(u64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CapExceeded { .. } => 3,
            Error::Invariant(_) => 1,
            _ => 2,
        }
    }
}
