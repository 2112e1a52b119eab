//! Command-line front end: simulate, stream, collect, analyze, calibrate and compare.

// `!(x > y)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod live;
pub mod plot;

pub use args::Cli;
pub use error::CliError;
