//! Config-driven front end: parse a problem description, solve, run the
//! requested checks and write fields, reports and a manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod build;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use error::{CliError, EXIT_SCHEMA, EXIT_SOLVER, EXIT_VERIFY};
