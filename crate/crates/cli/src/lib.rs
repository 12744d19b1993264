//! Library side of the command-line driver: argument resolution, command
//! implementations, and the SVG chart writer. The `trajcluster` binary is a
//! thin wrapper over [`run`].

pub mod cli;
pub mod commands;
pub mod config;
pub mod svg;

pub use cli::run;
