//! Scenario-file front end for `platoon-core`: parsing, validation, and the
//! `run`, `check`, `sweep` and `synth` commands with their CSV and JSON
//! outputs.

pub mod commands;
pub mod error;
pub mod output;
pub mod schema;

pub use error::CliError;
pub use schema::ScenarioFile;
