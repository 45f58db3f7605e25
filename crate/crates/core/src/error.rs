use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller broke a documented precondition (lane multiples, matching
    /// lengths, parameter ranges).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("coincident sites {i} and {j}: pair distance is zero")]
    Singularity { i: usize, j: usize },

    #[error("site {site} has {count} neighbors, capacity is {capacity}")]
    Capacity {
        site: usize,
        count: usize,
        capacity: usize,
    },

    #[error("list cutoff {cutoff} exceeds half the smallest box edge ({half_edge})")]
    CutoffTooLarge { cutoff: f64, half_edge: f64 },

    #[error("site {site} lies outside the primary box")]
    Unwrapped { site: usize },

    #[error("polarization did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
