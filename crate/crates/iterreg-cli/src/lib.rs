//! Experiment driver for the `iterreg` library. The binary front-end lives
//! in `main.rs`; the pipelines are exported here so integration tests can
//! drive them directly.

pub mod config;
pub mod driver;
pub mod svg;
