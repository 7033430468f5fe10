//! Error taxonomy shared by all modules.
//!
//! Parse-time problems carry locations; numeric problems carry the operation
//! that raised them so the CLI can surface the origin in reports.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax { line: u32, col: u32, expected: String },
    #[error("unbound identifier `{name}` at {line}:{col}")]
    UnboundIdentifier { name: String, line: u32, col: u32 },
    #[error("map component `{component}` is not holomorphic: {reason}")]
    NonHolomorphicMapComponent { component: String, reason: String },
    #[error("config error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("branch cut violation ({0})")]
    BranchCutViolation(&'static str),
    #[error("unbound identifier `{0}` during evaluation")]
    UnboundIdentifier(&'static str),
    #[error("non-finite value produced")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("degenerate Jacobian at ({0}); map is not locally invertible there")]
    DegenerateJacobian(String),
    #[error("degenerate eigenvectors: |det| = {0} below independence threshold")]
    DegenerateEigenvectors(f64),
    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),
    #[error("inconclusive trend: {0}")]
    Inconclusive(String),
    #[error("non-convergent ratio: {0}")]
    NonConvergentRatio(String),
    #[error("noise floor reached: {0}")]
    NoiseFloor(String),
    #[error("degenerate gradient at the requested boundary point")]
    DegenerateGradient,
    #[error("boundary solve failure: {0}")]
    SolveFailure(String),
    #[error("empty cloud")]
    EmptyCloud,
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("no interior point found by the sampler")]
    NoInteriorFound,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("corpus missing: {0}")]
    CorpusMissing(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
