//! File formats, configuration, manifests and subcommands of the `regg`
//! experiment runner.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod edgelist;
pub mod error;
pub mod manifest;
pub mod pool;
pub mod svg;

pub use regg_core;
