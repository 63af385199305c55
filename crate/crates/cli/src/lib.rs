//! Library side of the `recloop` binary: scenario files, bundled presets,
//! artifact writers, and the subcommand implementations. Kept as a library
//! so integration tests can drive commands in-process.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod presets;
