use alloc::string::String;

/// Errors raised by constructions and conversions. Verifiers never error;
/// they return certificates.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("field order {0} exceeds 65536")]
    OrderTooLarge(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("data required: {0}")]
    DataRequired(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::Invalid(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
