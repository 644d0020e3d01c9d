use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid fixed-point format: {0}")]
    InvalidFormat(String),

    #[error("fixed-point format mismatch: {left} vs {right}")]
    FormatMismatch { left: String, right: String },

    #[error("fixed-point overflow in {op}")]
    Overflow { op: &'static str },

    #[error("value {value} is not representable in format {format}")]
    NotRepresentable { value: f64, format: String },

    #[error("division by non-positive divisor")]
    NonPositiveDivisor,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("monotonicity violated: {0}")]
    Monotonicity(String),

    #[error("price {price} outside arbitrage bounds ({lower}, {upper})")]
    ArbitrageBounds { price: f64, lower: f64, upper: f64 },

    #[error("enumeration of {patterns} patterns exceeds budget {budget}")]
    EnumerationBudget { patterns: f64, budget: usize },

    #[error("icdf fit needs more than {0} intervals")]
    TooManyIntervals(usize),

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("duplicate register name `{0}`")]
    DuplicateRegister(String),

    #[error("register width mismatch: {0}")]
    WidthMismatch(String),

    #[error("simulator support {size} exceeds budget {budget}")]
    Budget { size: usize, budget: usize },

    #[error("custom gate `{0}` is not reversible on a visited basis state")]
    NotReversible(String),

    #[error("amplitude encoding: value {value} outside [0, {scale}]")]
    EncodingRange { value: f64, scale: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
