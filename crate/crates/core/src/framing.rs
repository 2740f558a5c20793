//! Coherence times, frame schedule and throughput weighting.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::Band;
use crate::error::{Error, Result};
use crate::policy::PolicyKind;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Percentile used to turn per-UE coherence times into one frame length.
pub const FRAME_PERCENTILE: f64 = 0.01;

/// Empirical quantile with linear interpolation between order statistics
/// (the `(n - 1) q` convention).
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Degenerate("percentile of an empty set".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Config(format!("quantile {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

/// First percentile of `c / (f_c v sin α)` over the sampled angles. Angles
/// with `sin α <= 0` carry no Doppler and are skipped.
pub fn coherence_time_sub6(center_frequency_hz: f64, speed_mps: f64, alphas: &[f64]) -> Result<f64> {
    positive("center frequency", center_frequency_hz)?;
    positive("speed", speed_mps)?;
    let times: Vec<f64> = alphas
        .iter()
        .map(|a| a.sin())
        .filter(|s| *s > 0.0)
        .map(|s| SPEED_OF_LIGHT / (center_frequency_hz * speed_mps * s))
        .collect();
    if times.is_empty() {
        return Err(Error::Degenerate("every sampled angle has sin(alpha) = 0".into()));
    }
    percentile(&times, FRAME_PERCENTILE)
}

/// First percentile of the beam coherence time `D / (v sin α) · Θ / 2`,
/// pairing the i-th distance with the i-th angle.
pub fn coherence_time_mmwave(distances_m: &[f64], speed_mps: f64, alphas: &[f64], beamwidth_rad: f64) -> Result<f64> {
    positive("speed", speed_mps)?;
    positive("beamwidth", beamwidth_rad)?;
    if distances_m.len() != alphas.len() {
        return Err(Error::DimensionMismatch { expected: distances_m.len(), actual: alphas.len() });
    }
    if let Some(d) = distances_m.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::Config(format!("distance must be positive, got {d}")));
    }
    let times: Vec<f64> = distances_m
        .iter()
        .zip(alphas)
        .filter_map(|(d, a)| {
            let s = a.sin();
            (s > 0.0).then(|| d / (speed_mps * s) * beamwidth_rad / 2.0)
        })
        .collect();
    if times.is_empty() {
        return Err(Error::Degenerate("every sampled angle has sin(alpha) = 0".into()));
    }
    percentile(&times, FRAME_PERCENTILE)
}

/// Half-power beamwidth approximation `102° / M_y`, in radians.
pub fn beamwidth_rad(antennas_y: usize) -> f64 {
    (102.0 / antennas_y as f64).to_radians()
}

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}

/// `max(0, 1 - (T_B + T_H) / T_C)`.
pub fn throughput_weight(t_beam_training: f64, t_switch: f64, t_coherence: f64) -> f64 {
    (1.0 - (t_beam_training + t_switch) / t_coherence).max(0.0)
}

pub fn effective_rate(weight: f64, rate: f64) -> f64 {
    weight * rate
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub speed_mps: f64,
    pub rng_seed: u64,
}

impl MobilityConfig {
    /// Direction-of-travel angles, one per UE, from Uniform(0, π).
    pub fn sample_alphas(&self, n: usize) -> Result<Vec<f64>> {
        positive("speed", self.speed_mps)?;
        let mut rng = crate::seed::rng(self.rng_seed, 0, "mobility");
        Ok((0..n).map(|_| rng.gen_range(0.0..PI)).collect())
    }
}

/// Frame timing shared by every UE on a band. The frame length equals the
/// band's coherence time and carries two slots; switches happen at the start
/// of the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSchedule {
    pub t_c_sub6: f64,
    pub t_c_mmwave: f64,
    pub t_beam: f64,
    pub codebook_size_sub6: usize,
    pub codebook_size_mmwave: usize,
    /// Measurement gap as a fraction of the coherence time (ρ).
    pub gap_fraction: f64,
    /// Signaling overhead of a switch request and its response (β), seconds.
    pub signaling_overhead: f64,
    pub slots_per_frame: u32,
}

impl FrameSchedule {
    pub fn validate(&self) -> Result<()> {
        positive("T_C sub-6", self.t_c_sub6)?;
        positive("T_C mmWave", self.t_c_mmwave)?;
        if !(self.t_beam.is_finite() && self.t_beam >= 0.0) {
            return Err(Error::Config("T_beam must be nonnegative".into()));
        }
        if !(self.gap_fraction > 0.0 && self.gap_fraction <= 1.0) {
            return Err(Error::Config(format!("gap fraction {} outside (0, 1]", self.gap_fraction)));
        }
        if !(self.signaling_overhead.is_finite() && self.signaling_overhead >= 0.0) {
            return Err(Error::Config("signaling overhead must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn coherence_time(&self, band: Band) -> f64 {
        match band {
            Band::Sub6 => self.t_c_sub6,
            Band::MmWave => self.t_c_mmwave,
        }
    }

    /// `T_B = T_beam · N_CB`.
    pub fn beam_training_time(&self, band: Band) -> f64 {
        let n = match band {
            Band::Sub6 => self.codebook_size_sub6,
            Band::MmWave => self.codebook_size_mmwave,
        };
        self.t_beam * n as f64
    }

    /// `T_G = ρ T_C` of the band whose frame hosts the gap.
    pub fn measurement_gap(&self, band: Band) -> f64 {
        self.gap_fraction * self.coherence_time(band)
    }

    /// `T_H` charged to a UE on `source` under `policy`. Nothing is charged
    /// when no switch was requested.
    pub fn band_switch_overhead(&self, policy: PolicyKind, source: Band, requested: bool) -> f64 {
        if !requested {
            return 0.0;
        }
        match policy {
            PolicyKind::Legacy => self.measurement_gap(source) + self.signaling_overhead,
            PolicyKind::Blind | PolicyKind::Optimal | PolicyKind::Proposed => self.signaling_overhead,
        }
    }

    /// Throughput weight on `band` after the decision, given the switching overhead.
    pub fn weight(&self, band: Band, t_switch: f64) -> f64 {
        throughput_weight(self.beam_training_time(band), t_switch, self.coherence_time(band))
    }

    /// Rate with beam training but no switching overhead.
    pub fn training_weighted_rate(&self, band: Band, rate: f64) -> f64 {
        effective_rate(self.weight(band, 0.0), rate)
    }
}
