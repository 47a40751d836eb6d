use thiserror::Error;

/// Errors raised while parsing expressions or files.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("variable z{index} at byte {offset} exceeds dimension {dim}")]
    VariableOutOfRange {
        offset: usize,
        index: usize,
        dim: usize,
    },
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("line {line}: {message}")]
    File { line: usize, message: String },

    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("expression is not real-valued (imaginary residual {0:e})")]
    NotReal(f64),

    #[error("expected a point with {expected} complex coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("Newton projection did not converge after {steps} steps (residual {residual:e})")]
    NoConvergence { steps: usize, residual: f64 },

    #[error("vanishing gradient of the defining function (|grad| = {0:e})")]
    VanishingGradient(f64),

    #[error("vector is not tangential: |<d rho, v>| = {0:e}")]
    NotTangential(f64),

    #[error("domain is not pseudoconvex: Levi eigenvalue {eigenvalue:e} at {point:?}")]
    NotPseudoconvex { eigenvalue: f64, point: Vec<f64> },

    #[error("expression size {size} exceeds limit {limit}")]
    ExpressionTooLarge { size: usize, limit: usize },

    #[error("map is not holomorphic: {0}")]
    NotHolomorphic(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for validation errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::File { .. }
            | Error::UnboundParameter(_)
            | Error::NotReal(_)
            | Error::DimensionMismatch { .. }
            | Error::Invalid(_)
            | Error::ExpressionTooLarge { .. }
            | Error::NotHolomorphic(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
