//! Learning features assembled from per-UE decision records.
//!
//! Column layout: `x0` bias, `x1` sub-6 effective rate, `x2` mmWave effective
//! rate, `x3` source band (1 = sub-6), `x4..x6` coordinates, `x7` switch
//! requested. Effective rates here include beam training but no switching
//! overhead.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::Band;
use crate::error::{Error, Result};
use crate::framing::FrameSchedule;
use crate::policy::UserRecord;

pub const NUM_FEATURES: usize = 8;

pub const COL_BIAS: usize = 0;
pub const COL_RATE_SUB6: usize = 1;
pub const COL_RATE_MMWAVE: usize = 2;
pub const COL_SOURCE: usize = 3;
pub const COL_REQUESTED: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    /// Both bands' rates are visible to the classifier.
    Full,
    /// Only the serving band's rate is visible; the target column is zeroed.
    Deployable,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Full => "full",
            FeatureMode::Deployable => "deployable",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(FeatureMode::Full),
            "deployable" => Ok(FeatureMode::Deployable),
            other => Err(Error::Config(format!("unknown feature mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Every UE is treated as requesting (`x7 = 1`).
    Learning,
    Exploitation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub x: [f64; NUM_FEATURES],
    pub y: bool,
}

fn rate_column(band: Band) -> usize {
    match band {
        Band::Sub6 => COL_RATE_SUB6,
        Band::MmWave => COL_RATE_MMWAVE,
    }
}

/// Builds one feature row per record. The label is `1[R_target > R_current]`.
///
/// The serving band's rate must be present. In full mode the target band's
/// rate must be present as well; in deployable mode an unmeasured target
/// yields a `false` label, which is only meaningful for prediction.
pub fn assemble_features(
    records: &[UserRecord],
    schedule: &FrameSchedule,
    mode: FeatureMode,
    phase: Phase,
) -> Result<Vec<FeatureRow>> {
    records
        .iter()
        .map(|rec| {
            let current = rec.current_rate();
            let target = rec.target_rate();
            if !current.is_finite() {
                return Err(Error::InsufficientData(format!("ue {}: serving-band rate missing", rec.ue_id)));
            }
            if mode == FeatureMode::Full && !target.is_finite() {
                return Err(Error::InsufficientData(format!(
                    "ue {}: target-band rate missing in full feature mode",
                    rec.ue_id
                )));
            }
            let mut x = [0.0; NUM_FEATURES];
            x[COL_BIAS] = 1.0;
            x[rate_column(rec.serving_band)] = schedule.training_weighted_rate(rec.serving_band, current);
            if mode == FeatureMode::Full {
                x[rate_column(rec.target_band())] = schedule.training_weighted_rate(rec.target_band(), target);
            }
            x[COL_SOURCE] = if rec.serving_band == Band::Sub6 { 1.0 } else { 0.0 };
            x[4..7].copy_from_slice(&rec.coords);
            x[COL_REQUESTED] = match phase {
                Phase::Learning => 1.0,
                Phase::Exploitation => f64::from(u8::from(rec.requests_switch())),
            };
            Ok(FeatureRow { x, y: rec.true_grant() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule() -> FrameSchedule {
        FrameSchedule {
            t_c_sub6: 6.17e-3,
            t_c_mmwave: 19.16e-3,
            t_beam: 1e-6,
            codebook_size_sub6: 64,
            codebook_size_mmwave: 64,
            gap_fraction: 0.6,
            signaling_overhead: 0.0,
            slots_per_frame: 2,
        }
    }

    fn rec(band: Band, sub6: f64, mm: f64) -> UserRecord {
        UserRecord::new(4, 0, band, sub6, mm, 1.72e6, 7.0e6, [10.0, 20.0, 2.0])
    }

    #[test]
    fn label_is_strict_comparison() {
        let s = schedule();
        let rows = assemble_features(
            &[rec(Band::Sub6, 1.0, 2.0), rec(Band::Sub6, 2.0, 2.0), rec(Band::MmWave, 1.0, 2.0)],
            &s,
            FeatureMode::Full,
            Phase::Exploitation,
        )
        .unwrap();
        assert!(rows[0].y);
        assert!(!rows[1].y);
        assert!(!rows[2].y);
    }

    #[test]
    fn layout_matches_columns() {
        let s = schedule();
        let row =
            assemble_features(&[rec(Band::MmWave, 1e6, 3e6)], &s, FeatureMode::Full, Phase::Exploitation).unwrap()[0];
        assert_eq!(row.x[0], 1.0);
        assert_eq!(row.x[1], s.training_weighted_rate(Band::Sub6, 1e6));
        assert_eq!(row.x[2], s.training_weighted_rate(Band::MmWave, 3e6));
        assert_eq!(row.x[3], 0.0);
        assert_eq!(&row.x[4..7], &[10.0, 20.0, 2.0]);
        // 3 Mbps is below the 7 Mbps mmWave threshold
        assert_eq!(row.x[7], 1.0);
    }

    #[test]
    fn learning_phase_forces_request_flag() {
        let s = schedule();
        let recs = vec![rec(Band::Sub6, 5e6, 1e6), rec(Band::MmWave, 1e6, 9e6)];
        for r in assemble_features(&recs, &s, FeatureMode::Full, Phase::Learning).unwrap() {
            assert_eq!(r.x[COL_REQUESTED], 1.0);
        }
        let exploit = assemble_features(&recs, &s, FeatureMode::Full, Phase::Exploitation).unwrap();
        assert_eq!(exploit[0].x[COL_REQUESTED], 0.0);
    }

    #[test]
    fn deployable_masks_target_rate() {
        let s = schedule();
        let rows = assemble_features(
            &[rec(Band::Sub6, 1e6, 3e6), rec(Band::MmWave, 1e6, 3e6)],
            &s,
            FeatureMode::Deployable,
            Phase::Learning,
        )
        .unwrap();
        assert!(rows[0].x[1] > 0.0 && rows[0].x[2] == 0.0);
        assert!(rows[1].x[1] == 0.0 && rows[1].x[2] > 0.0);
        assert!(rows[0].y);
    }

    #[test]
    fn missing_rate_in_full_mode() {
        let s = schedule();
        let r = rec(Band::Sub6, 1e6, f64::NAN);
        assert!(assemble_features(std::slice::from_ref(&r), &s, FeatureMode::Full, Phase::Learning).is_err());
        assert!(assemble_features(&[r], &s, FeatureMode::Deployable, Phase::Learning).is_ok());
    }
}
