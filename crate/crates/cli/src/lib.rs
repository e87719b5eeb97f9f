//! Configuration, file formats and the `lgvi` command-line front end for the
//! attitude maneuver library.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::ManeuverConfig;
pub use error::CliError;
