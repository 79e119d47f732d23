use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid backend parameters: {0}")]
    InvalidParams(String),

    #[error("slot {index} holds {value}, outside the encodable magnitude {bound}")]
    Overflow {
        index: usize,
        value: f64,
        bound: f64,
    },

    #[error("level {level} cannot absorb {needed} more multiplications and auto-bootstrap is off")]
    DepthExhausted { level: u32, needed: u32 },

    #[error("slot vector length {found} does not match the expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("operand is not an encrypted slot vector")]
    NotEncrypted,

    #[error("rotation by {steps} is out of range for {slot_count} slots")]
    InvalidRotation { steps: i64, slot_count: usize },

    #[error("slot {index} holds {value}, outside the admissible domain [{lo}, {hi}]")]
    DomainViolation {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid sign configuration: {0}")]
    InvalidSignConfig(String),

    #[error("invalid packing layout: {0}")]
    InvalidLayout(String),

    #[error("invalid bounds: d_min {d_min} must be below d_max {d_max}")]
    InvalidBounds { d_min: f64, d_max: f64 },

    #[error("example {id}: {detail}")]
    DimensionMismatch { id: String, detail: String },

    #[error("example {id}: logit {value} lies outside [{d_min}, {d_max}]")]
    BoundsViolation {
        id: String,
        value: f64,
        d_min: f64,
        d_max: f64,
    },

    #[error("malformed logit file: {0}")]
    Schema(String),

    #[error("invalid benchmark request: {0}")]
    InvalidBench(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
