//! Experiment orchestration for the fractional BBM laboratory: typed
//! experiment arguments, a plain-text configuration format, and deterministic
//! CSV/JSON/manifest persistence.
//!
//! Identical arguments and seed produce byte-identical output files.

pub mod config;
pub mod experiments;
pub mod output;

pub use experiments::{execute, Common, LabCommand, Manifest};
