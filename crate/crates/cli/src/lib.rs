//! Batch front end for `qafem`: configuration, AFEM runs with artifact
//! output, history comparison and the polynomial subcommands.

pub mod compare;
pub mod config;
pub mod error;
pub mod run;
pub mod witness;

pub use config::{parse_config, RunConfig};
pub use error::CliError;
