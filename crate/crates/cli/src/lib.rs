//! Configuration, execution and file output behind the `spinsqueeze` binary.

pub mod commands;
pub mod config;
pub mod exec;
pub mod output;
pub mod presets;
