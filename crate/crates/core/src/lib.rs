//! Dual-band (sub-6 GHz / mmWave) band-switch simulator: channel and beam
//! models, radio framing, the legacy, blind, optimal and learned switch
//! policies, and the per-partition classifiers behind the learned policy.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod dataset;
pub mod error;
pub mod framing;
pub mod learner;
pub mod metrics;
pub mod policy;
pub mod report;
pub mod runner;
pub mod seed;

pub use error::{Error, Result};
