//! Command implementations behind the `mtal` binary.

pub mod commands;
pub mod config;
pub mod grid;
