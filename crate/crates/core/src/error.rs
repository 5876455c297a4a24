use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown variable `{name}` at byte {pos}")]
    UnknownVariable { name: String, pos: usize },

    #[error("variable name `{0}` is already in use")]
    NameCollision(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("variable lists differ: {0}")]
    VariableMismatch(String),

    #[error("operation is undefined for the zero polynomial")]
    ZeroPolynomial,

    #[error("order {order} is too small: {reason}")]
    OrderTooSmall { order: usize, reason: String },

    #[error("order {order} exceeds the cap {cap}")]
    OrderTooLarge { order: usize, cap: usize },

    #[error("moment vector would have {size} entries, above the limit {limit} (raise max_y to override)")]
    SizeGuard { size: usize, limit: usize },

    #[error("degree {degree} exceeds the layout capacity {capacity}")]
    DegreeOverflow { degree: usize, capacity: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no sample points were accepted after {attempts} attempts")]
    NoSamples { attempts: u64 },

    #[error("augmenting polynomial is negative ({value:.3e}) at sampled point {point:?}")]
    InvalidAugmentation { value: f64, point: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
