//! Files, parallel experiments and the command line for `lasso-select-core`.
//!
//! - [`dataset`]: CSV ingestion into a [`Sample`](lasso_select_core::dictionary::Sample);
//! - [`config`]: TOML specifications for scenarios, targets, experiments,
//!   audits and bound tables;
//! - [`parallel`]: a rayon driver for the Monte Carlo harness;
//! - [`results`]: JSON and CSV output;
//! - [`cli`]: the `lasso-select` command.

pub mod cli;
pub mod config;
pub mod dataset;
mod error;
pub mod parallel;
pub mod results;

pub use error::{Error, Result};
pub use lasso_select_core as engine;
