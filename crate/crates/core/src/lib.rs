//! Simulation of bit-constrained estimation protocols on hide-and-seek problems.
//!
//! Coordinates are 0-based throughout.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod infotheory;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
