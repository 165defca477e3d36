//! Command-line front end: configuration, orchestration and exports.

// negated comparisons below are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod export;
pub mod run;

pub use error::CliError;
