//! Asymmetric BPE toolkit.
//!
//! Learns BPE merge tables with independent source and target merge counts,
//! samples parallel corpora by sentence-length strata, scores systems with
//! CHRF++ and paired approximate randomization, and runs full configuration
//! sweeps around an external translation backend.
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod bpe;
pub mod chrf;
mod error;
pub mod orchestrator;
pub mod rng;
pub mod sampler;
pub mod sweep;

pub use error::{Error, Result};
