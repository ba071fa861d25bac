//! Time-domain simulation of the closed-loop platoon.

mod integrate;
mod leader;
mod metrics;
mod scenario;
mod simulate;
mod sweep;

pub use leader::{leader_state, LeaderProfile, LeaderState, Segment};
pub use metrics::{convergence_time, max_spacing_error, worst_position_error};
pub use scenario::{Controller, Integration, Method, Plant, Scenario};
pub use simulate::{simulate, simulate_with_gains, Trajectory};
pub use sweep::{sweep, CellOutcome, SweepCell};

#[cfg(test)]
mod tests;
