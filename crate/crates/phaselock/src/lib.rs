//! Command line, config files and scan artifacts for `phaselock-core`.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod expr;
pub mod report;
