//! Graph-based semi-supervised learning with quantum-state diagnostics.

pub mod benchmarking;
pub mod error;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod propagation;
pub mod qelp;
pub mod qsim;

pub use error::{Error, Result};
