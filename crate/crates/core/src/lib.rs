//! Energy-efficient hybrid beamforming for RIS-aided cell-free MIMO downlinks.
//!
//! The digital stage allocates power over zero-forcing directions at the BSs;
//! the analog stage picks RIS phase shifts one element at a time. The two
//! alternate until the energy efficiency settles.

pub mod channel;
pub mod cli;
pub mod config;
pub mod analog;
pub mod analysis;
pub mod digital;
pub mod eem;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod phase;
pub mod rng;
pub mod validate;

pub use error::{Error, Result};
