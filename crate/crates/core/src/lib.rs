//! Verification laboratory for functional equations and the martingale
//! property of space-transformed Brownian motion.

pub mod analytic;
pub mod error;
pub mod functions;
pub mod mgtest;
pub mod simulate;
pub mod stats;
pub mod theorems;
pub mod transforms;

pub use error::{Error, Result};
