//! Batch runner for physics-informed PCE experiments.
//!
//! The `pc2` binary is a thin shell over this library: [`config`] loads and
//! resolves run files, [`commands`] implements `train`, `sweep` and `uq`, and
//! [`acceptance`] holds the verification suite behind `pc2 verify`.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;

pub use config::{RawConfig, RunConfig, Variant};
pub use error::{CliError, CliResult};
