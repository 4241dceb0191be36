//! Command-line frontend: instance and plan files, solver runs and sweeps.

pub mod commands;
pub mod error;
pub mod files;
pub mod metrics;
