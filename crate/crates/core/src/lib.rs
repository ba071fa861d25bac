//! Analysis, synthesis and simulation of heterogeneous vehicle platoons whose
//! follower-to-follower communication graph is a directed acyclic graph.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: adjacency, Laplacian, pinning, topological ordering.
//! * [`dynamics`]: third-order linear vehicle model, the stacked closed-loop
//!   platoon matrix, and the nonlinear powertrain model with its
//!   feedback-linearising torque law.
//! * [`control`]: the distributed linear control law, the closed-form
//!   stability region, tracking feasibility and Riccati-based gain synthesis.
//! * [`analysis`]: per-vehicle characteristic cubics, Routh tables and the
//!   spectral factorisation check.
//! * [`sim`]: leader profiles, fixed-step integration and convergence metrics.

// `!(x < y)` is used on purpose so that NaN falls on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod control;
pub mod dynamics;
mod error;
pub mod graph;
pub mod riccati;
pub mod sim;

pub use analysis::{CharacteristicCubic, RouthTable};
pub use control::{Alpha, GainSet, Gains, StabilityVerdict, SynthesisRecipe, VehicleVerdict};
pub use dynamics::{Chassis, NonlinearModel, OutputMask, VehicleParams};
pub use error::{Error, Result};
pub use graph::{Permutation, Topology, TopologyKind};
pub use sim::{LeaderProfile, Scenario, Trajectory};
