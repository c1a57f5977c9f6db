use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The semantics reached a configuration that the model rules out.
    #[error("semantics invariant violated in state {state}: {reason}")]
    Invariant { state: String, reason: String },

    #[error("state limit of {limit} exceeded after exploring {explored} states")]
    StateLimit { limit: usize, explored: usize },

    #[error("malformed state encoding: {0}")]
    Decode(String),

    #[error("predicate cannot be lifted to the quotient: {0}")]
    NotSymmetric(String),

    #[error("solver did not converge after {iterations} sweeps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("degenerate long-run quantity: {0}")]
    Degenerate(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("matrix too large for exact solve: {states} states (limit {limit})")]
    TooLarge { states: usize, limit: usize },
}
