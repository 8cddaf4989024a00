use thiserror::Error;

/// Errors raised by the exact and experimental routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus {0} is out of range (need 3 <= N <= {max})", max = crate::zn::MAX_MODULUS)]
    InvalidModulus(u32),

    #[error("modulus {0} is not prime")]
    NonPrimeModulus(u32),

    #[error("residue {value} is not in [0, {modulus})")]
    ResidueOutOfRange { value: u64, modulus: u32 },

    #[error("set has {size} elements, at least {required} are needed")]
    DegenerateSet { size: usize, required: usize },

    #[error("{what} exceeds the enumeration budget ({size} > {limit})")]
    TooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("{0} is not an isolated element of the set")]
    NotIsolated(u32),

    #[error("difference set A-A does not cover Z_N")]
    DifferenceSetIncomplete,

    #[error("induced function is not well defined at difference {d}")]
    NotWellDefined { d: u32 },

    #[error("vector is not in the kernel of the pair constraints")]
    NotInKernel,

    #[error("function violates the quadruple ({0}, {1}, {2}, {3})")]
    NotAFreimanHom(u32, u32, u32, u32),

    #[error("level {level} exceeds the cap {cap}")]
    LevelCapExceeded { level: usize, cap: usize },

    #[error("invalid Vu schedule at j = {index}: {reason}")]
    ScheduleInvalid { index: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
