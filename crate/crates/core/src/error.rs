use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("unknown topology kind `{0}` (expected PF, PLF, TPF or TPLF)")]
    UnknownTopologyKind(String),

    /// The follower graph has a directed cycle. `cycle` lists one witness
    /// cycle (0-based follower indices) in the direction information flows.
    #[error("communication graph is not acyclic (cycle through followers {cycle:?})")]
    CyclicGraph { cycle: Vec<usize> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("follower index {index} out of range for a platoon of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("Riccati iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("initial gain does not stabilise (A, B)")]
    NotStabilizing,

    #[error("eigenvalue pairing failed: distance {distance:e} exceeds tolerance {tol:e}")]
    PairingFailed { distance: f64, tol: f64 },

    #[error("spacing errors never settle below {delta} m within the horizon")]
    NotConverged { delta: f64 },

    #[error("non-finite state at t = {time} s")]
    NumericalBlowup { time: f64 },
}
