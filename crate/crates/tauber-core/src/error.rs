use thiserror::Error;

use crate::value::ValueVector;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("discount factor {0} outside (0, 1]")]
    InvalidDiscount(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fixed-point iteration did not reach tol {tol} within {iterations} steps (residual bound {residual})")]
    Nonconvergence {
        tol: f64,
        iterations: u64,
        residual: f64,
        last: ValueVector,
    },

    #[error("matrix game solver failed: {0}")]
    Solver(String),

    #[error("matrix game solver failed in state {state}: {source}")]
    SolverAtState {
        state: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("argmax of f_lambda hit the search window boundary at lambda = {lambda} (action {action}); enlarge window_slack")]
    WindowBoundary { lambda: f64, action: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
