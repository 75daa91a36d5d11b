//! Command-line pipeline for strain-array modal identification.
//!
//! `simulate` produces synthetic records, `identify` runs preprocessing and
//! subspace identification, `fit-shapes` turns strain mode shapes into
//! displacement shapes by the physics route and two baselines, and `compare`
//! pairs modal sets.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod schema;

pub use commands::{cmd_compare, cmd_fit_shapes, cmd_identify, cmd_simulate};
pub use config::PipelineConfig;
pub use error::CliError;
