//! Configuration and data files, report emission and subcommands of the
//! `farezone` tool.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod emit;
pub mod error;
pub mod ridership;
pub mod run;

pub use error::CliError;
