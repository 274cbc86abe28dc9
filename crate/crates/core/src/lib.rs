//! Cyclic-prefix MIMO-OFDM radar: interleaved Zadoff-Chu waveform design,
//! IRCI-free range reconstruction, pointing-error analysis and matched-filter
//! baselines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baselines;
pub mod channel;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod receiver;
pub mod waveform;

pub use error::{Error, Result};
pub use numerics::C64;
