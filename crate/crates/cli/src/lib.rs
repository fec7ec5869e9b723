//! Configuration parsing and run orchestration for the `robinfb` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, Certificate, ConfigError, Preset, RunConfig};
