//! Experiment orchestration, metrics, and statistical verifiers.

pub mod experiments;
pub mod verify;

pub use experiments::*;
pub use verify::*;
