use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate polygon: {0}")]
    Degenerate(String),

    #[error("polygon is not convex: {0}")]
    NotConvex(String),

    #[error("{what} = {value} is out of range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("polygon is not in w-frame position: {0}")]
    NotFramed(String),

    #[error("degenerate test function: weighted L2 norm is zero")]
    DegenerateTestFunction,

    #[error("weight vanishes identically")]
    ZeroWeight,

    #[error("regularization failure: {0}")]
    Regularization(String),

    #[error("bracketing failure: no sign change of the shooting residual in [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },

    #[error("mesh budget exceeded: {nodes} nodes requested, cap is {cap}")]
    MeshBudget { nodes: usize, cap: usize },

    #[error("eigen iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("slicing failure at x = {x}: {reason}")]
    Slicing { x: f64, reason: String },

    #[error("domain too thick for the thin pipeline: epsilon = {eps} >= d/2 = {half_d}")]
    TooThick { eps: f64, half_d: f64 },

    #[error("random polygon missed the width target after {attempts} attempts")]
    Generation { attempts: usize },

    #[error("all {0} domains of the sweep failed")]
    SweepFailed(usize),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
