use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("degenerate state (r = {r:e}): S(theta) carries no boundary information")]
    DegenerateState { r: f64 },

    #[error("no sign change of the {kind} residual in [{lo}, {hi}]")]
    NoRoot { kind: String, lo: f64, hi: f64 },

    #[error("{count} sign changes of the {kind} residual in [{lo}, {hi}]; split the bracket")]
    AmbiguousBracket {
        kind: String,
        lo: f64,
        hi: f64,
        count: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
