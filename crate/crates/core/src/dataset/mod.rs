//! Dual-band channel samples: file ingestion, a synthetic correlated scene,
//! and Bernoulli blockage mixing of the mmWave channel.

mod file;
mod synthetic;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::channel::ComplexVector;
use crate::error::{Error, Result};

pub use file::{
    load_channel_file, read_channel_file, write_channel_file, BandHeader, ChannelFile, ChannelFileHeader,
    CHANNEL_FORMAT, CHANNEL_VERSION,
};
pub use synthetic::{generate_synthetic_scene, SyntheticScene, SyntheticSceneConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    pub ue_id: u64,
    pub coords: [f64; 3],
    pub h_sub6: ComplexVector,
    /// mmWave channel without blockage.
    pub h_mm_nb: ComplexVector,
    /// mmWave channel with the first path blocked.
    pub h_mm_b: ComplexVector,
}

/// Per-UE Bernoulli blockage. The draw for a UE is `u < p` with `u` uniform
/// and keyed by `(seed, ue_id)`, so runs that differ only in `p` block nested
/// sets of UEs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockageModel {
    pub probability: f64,
    pub rng_seed: u64,
}

impl BlockageModel {
    pub fn new(probability: f64, rng_seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::Config(format!("blockage probability {probability} outside [0, 1]")));
        }
        Ok(Self { probability, rng_seed })
    }

    pub fn is_blocked(&self, ue_id: u64) -> bool {
        crate::seed::unit_uniform(crate::seed::derive(self.rng_seed, 0, "blockage"), ue_id) < self.probability
    }

    /// `b·h_b + (1 − b)·h_nb`: one of the two vectors, never a mix.
    pub fn apply_blockage<'a>(&self, sample: &'a ChannelSample) -> &'a ComplexVector {
        if self.is_blocked(sample.ue_id) {
            &sample.h_mm_b
        } else {
            &sample.h_mm_nb
        }
    }
}

/// Anything that can hand out channel samples by index.
pub trait ChannelSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn sample(&self, index: usize) -> Cow<'_, ChannelSample>;
}

impl ChannelSource for [ChannelSample] {
    fn len(&self) -> usize {
        <[ChannelSample]>::len(self)
    }

    fn sample(&self, index: usize) -> Cow<'_, ChannelSample> {
        Cow::Borrowed(&self[index])
    }
}

impl ChannelSource for Vec<ChannelSample> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn sample(&self, index: usize) -> Cow<'_, ChannelSample> {
        Cow::Borrowed(&self[index])
    }
}
