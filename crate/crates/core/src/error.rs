use thiserror::Error;

/// Errors raised while building, validating or solving an MDP instance.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state {state} is out of range (environment has {count} states)")]
    InvalidState { state: usize, count: usize },

    #[error("coordinate ({x}, {y}) lies outside the {width}x{height} grid")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },

    #[error("grid must be at least 1x1 and fit in memory indices, got {width}x{height}")]
    InvalidGridShape { width: usize, height: usize },

    #[error("discount factor must lie strictly between 0 and 1, got {0}")]
    InvalidDiscount(f64),

    #[error("reward {id} has non-positive value {value}")]
    NonPositiveReward { id: usize, value: f64 },

    #[error("more than one reward placed on state {state}")]
    DuplicateReward { state: usize },

    #[error("instance has no reward sources")]
    NoRewards,

    #[error("state {state} has no action cycle returning to it")]
    NoCycle { state: usize },

    #[error("state {state} has no outgoing transitions")]
    DeadEnd { state: usize },

    #[error("edge {from} -> {to} references a state outside the graph of {count} states")]
    InvalidEdge {
        from: usize,
        to: usize,
        count: usize,
    },

    #[error("residual must be positive and finite, got {0}")]
    InvalidResidual(f64),

    #[error("value iteration did not reach residual {residual} within {cap} sweeps")]
    NotConverged { residual: f64, cap: usize },

    #[error("malformed document: {0}")]
    Malformed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
