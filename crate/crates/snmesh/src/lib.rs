//! Command-line driver and verification harness for `snmesh-core`: problem
//! presets, convergence studies against a cached self-convergence oracle,
//! the scattering-ratio scaling check, timing runs and CSV/JSON output.

pub mod bench;
pub mod config;
pub mod csvio;
pub mod manifest;
pub mod oracle;
pub mod scalecheck;
pub mod study;

pub use config::Problem;
