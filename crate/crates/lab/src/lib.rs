//! Experiment catalog, config parsing and the run driver behind the
//! `dirac-clock` binary.

pub mod config;
pub mod experiments;
pub mod runner;
