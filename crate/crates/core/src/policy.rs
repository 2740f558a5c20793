//! Band-switch request/grant logic for the four policies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::Band;
use crate::error::{Error, Result};
use crate::framing::{effective_rate, FrameSchedule};
use crate::learner::{FeatureRow, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Legacy,
    Blind,
    Optimal,
    Proposed,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [PolicyKind::Legacy, PolicyKind::Blind, PolicyKind::Proposed, PolicyKind::Optimal];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Legacy => "legacy",
            PolicyKind::Blind => "blind",
            PolicyKind::Optimal => "optimal",
            PolicyKind::Proposed => "proposed",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "legacy" => Ok(PolicyKind::Legacy),
            "blind" => Ok(PolicyKind::Blind),
            "optimal" => Ok(PolicyKind::Optimal),
            "proposed" => Ok(PolicyKind::Proposed),
            other => Err(Error::Config(format!("unknown policy '{other}'"))),
        }
    }
}

/// One UE in one frame, before and after a policy decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub ue_id: u64,
    pub time_step: usize,
    pub serving_band: Band,
    /// Ground-truth achievable rates (bits/s). NaN marks an unmeasured rate.
    pub rate_sub6: f64,
    pub rate_mmwave: f64,
    pub threshold_sub6: f64,
    pub threshold_mmwave: f64,
    pub coords: [f64; 3],
    pub x_br: bool,
    /// Only defined when `x_br` is set.
    pub y: Option<bool>,
    pub post_decision_band: Band,
    pub overhead_s: f64,
    pub effective_rate: f64,
}

impl UserRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ue_id: u64,
        time_step: usize,
        serving_band: Band,
        rate_sub6: f64,
        rate_mmwave: f64,
        threshold_sub6: f64,
        threshold_mmwave: f64,
        coords: [f64; 3],
    ) -> Self {
        Self {
            ue_id,
            time_step,
            serving_band,
            rate_sub6,
            rate_mmwave,
            threshold_sub6,
            threshold_mmwave,
            coords,
            x_br: false,
            y: None,
            post_decision_band: serving_band,
            overhead_s: 0.0,
            effective_rate: f64::NAN,
        }
    }

    pub fn rate(&self, band: Band) -> f64 {
        match band {
            Band::Sub6 => self.rate_sub6,
            Band::MmWave => self.rate_mmwave,
        }
    }

    pub fn current_rate(&self) -> f64 {
        self.rate(self.serving_band)
    }

    pub fn target_band(&self) -> Band {
        self.serving_band.other()
    }

    pub fn target_rate(&self) -> f64 {
        self.rate(self.target_band())
    }

    pub fn threshold(&self) -> f64 {
        match self.serving_band {
            Band::Sub6 => self.threshold_sub6,
            Band::MmWave => self.threshold_mmwave,
        }
    }

    /// `1[R_current < r_threshold]`.
    pub fn requests_switch(&self) -> bool {
        self.current_rate() < self.threshold()
    }

    /// The grant decision a measurement would produce: `1[R_target > R_current]`.
    pub fn true_grant(&self) -> bool {
        self.target_rate() > self.current_rate()
    }

    fn settle(mut self, schedule: &FrameSchedule, x_br: bool, y: Option<bool>, overhead: f64) -> Self {
        self.x_br = x_br;
        self.y = if x_br { y } else { None };
        self.post_decision_band = match self.y {
            Some(true) => self.target_band(),
            _ => self.serving_band,
        };
        self.overhead_s = overhead;
        let w = schedule.weight(self.post_decision_band, overhead);
        self.effective_rate = effective_rate(w, self.rate(self.post_decision_band));
        self
    }
}

/// Measurement-gap policy: request below threshold, grant if the measured
/// target rate is higher. The gap is charged whenever a request is made.
pub fn decide_legacy(rec: UserRecord, schedule: &FrameSchedule) -> UserRecord {
    let x_br = rec.requests_switch();
    let y = x_br.then(|| rec.true_grant());
    let overhead = schedule.band_switch_overhead(PolicyKind::Legacy, rec.serving_band, x_br);
    rec.settle(schedule, x_br, y, overhead)
}

/// Every request is granted, no gap.
pub fn decide_blind(rec: UserRecord, schedule: &FrameSchedule) -> UserRecord {
    let x_br = rec.requests_switch();
    let overhead = schedule.band_switch_overhead(PolicyKind::Blind, rec.serving_band, x_br);
    rec.settle(schedule, x_br, Some(true), overhead)
}

/// Genie-aided choice of the band with the larger effective rate; no threshold.
/// Equal effective rates keep the UE on its current band.
pub fn decide_optimal(rec: UserRecord, schedule: &FrameSchedule) -> UserRecord {
    let overhead = schedule.band_switch_overhead(PolicyKind::Optimal, rec.serving_band, true);
    let value = |band: Band| effective_rate(schedule.weight(band, overhead), rec.rate(band));
    let switch = value(rec.target_band()) > value(rec.serving_band);
    rec.settle(schedule, true, Some(switch), overhead)
}

/// Gap-free decision using an already computed classifier prediction.
pub fn apply_proposed(rec: UserRecord, schedule: &FrameSchedule, predicted_grant: bool) -> UserRecord {
    let x_br = rec.requests_switch();
    let overhead = schedule.band_switch_overhead(PolicyKind::Proposed, rec.serving_band, x_br);
    rec.settle(schedule, x_br, Some(predicted_grant), overhead)
}

/// Gap-free decision querying the classifier for this UE's feature row.
pub fn decide_proposed(
    rec: UserRecord,
    schedule: &FrameSchedule,
    model: &TrainedModel,
    features: &FeatureRow,
) -> Result<UserRecord> {
    let prediction = model.predict(std::slice::from_ref(features))?;
    Ok(apply_proposed(rec, schedule, prediction.labels[0]))
}

pub fn decide(
    kind: PolicyKind,
    rec: UserRecord,
    schedule: &FrameSchedule,
    prediction: Option<bool>,
) -> Result<UserRecord> {
    Ok(match kind {
        PolicyKind::Legacy => decide_legacy(rec, schedule),
        PolicyKind::Blind => decide_blind(rec, schedule),
        PolicyKind::Optimal => decide_optimal(rec, schedule),
        PolicyKind::Proposed => {
            let p = prediction.ok_or_else(|| Error::Config("proposed policy needs a classifier prediction".into()))?;
            apply_proposed(rec, schedule, p)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

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
        UserRecord::new(1, 0, band, sub6, mm, 1.72e6, 7.0e6, [0.0, 0.0, 2.0])
    }

    #[test]
    fn legacy_grants_when_target_better() {
        let r = decide_legacy(rec(Band::Sub6, 1.0e6, 5.0e6), &schedule());
        assert!(r.x_br);
        assert_eq!(r.y, Some(true));
        assert_eq!(r.post_decision_band, Band::MmWave);
        // Gap on the sub-6 frame, rate on the mmWave frame.
        let s = schedule();
        let w = 1.0 - (64e-6 + 0.6 * 6.17e-3) / 19.16e-3;
        assert_abs_diff_eq!(r.overhead_s, 0.6 * s.t_c_sub6, epsilon = 1e-15);
        assert_abs_diff_eq!(r.effective_rate, w * 5.0e6, epsilon = 1e-6);
    }

    #[test]
    fn legacy_no_request_above_threshold() {
        let r = decide_legacy(rec(Band::Sub6, 2.0e6, 5.0e6), &schedule());
        assert!(!r.x_br);
        assert_eq!(r.y, None);
        assert_eq!(r.overhead_s, 0.0);
        assert_eq!(r.post_decision_band, Band::Sub6);
    }

    #[test]
    fn legacy_denied_still_pays_gap() {
        let r = decide_legacy(rec(Band::Sub6, 1.0e6, 0.5e6), &schedule());
        assert!(r.x_br);
        assert_eq!(r.y, Some(false));
        assert_abs_diff_eq!(r.effective_rate, 0.3896 * 1.0e6, epsilon = 1e2);
    }

    #[test]
    fn legacy_gap_from_long_frame_clamps_to_zero() {
        // A 60% mmWave gap is longer than a whole sub-6 frame.
        let r = decide_legacy(rec(Band::MmWave, 1.5e6, 1.0e6), &schedule());
        assert_eq!(r.y, Some(true));
        assert_eq!(r.effective_rate, 0.0);
    }

    #[test]
    fn blind_always_grants() {
        let r = decide_blind(rec(Band::Sub6, 1.0e6, 0.2e6), &schedule());
        assert_eq!(r.y, Some(true));
        assert_eq!(r.post_decision_band, Band::MmWave);
        assert_abs_diff_eq!(r.effective_rate, schedule().weight(Band::MmWave, 0.0) * 0.2e6, epsilon = 1e-9);
        let stay = decide_blind(rec(Band::Sub6, 3.0e6, 0.2e6), &schedule());
        assert!(!stay.x_br);
        assert_eq!(stay.post_decision_band, Band::Sub6);
    }

    #[test]
    fn optimal_tie_stays() {
        let s = schedule();
        // Choose rates with exactly equal training-weighted values.
        let sub6 = 1.0e6;
        let mm = sub6 * s.weight(Band::Sub6, 0.0) / s.weight(Band::MmWave, 0.0);
        let r = decide_optimal(rec(Band::Sub6, sub6, mm), &s);
        assert!(r.x_br);
        assert_eq!(r.post_decision_band, Band::Sub6);
        let r = decide_optimal(rec(Band::Sub6, 1.0e6, 4.0e6), &s);
        assert_eq!(r.y, Some(true));
        assert_eq!(r.post_decision_band, Band::MmWave);
    }

    #[test]
    fn proposed_matches_legacy_minus_gap() {
        let s = schedule();
        let base = rec(Band::Sub6, 1.0e6, 5.0e6);
        let p = apply_proposed(base.clone(), &s, true);
        assert_eq!(p.post_decision_band, Band::MmWave);
        assert_abs_diff_eq!(p.effective_rate, s.weight(Band::MmWave, 0.0) * 5.0e6, epsilon = 1e-9);
        let wrong = apply_proposed(base, &s, false);
        assert_eq!(wrong.post_decision_band, Band::Sub6);
    }

    #[test]
    fn proposed_without_prediction_is_error() {
        assert!(decide(PolicyKind::Proposed, rec(Band::Sub6, 1.0, 2.0), &schedule(), None).is_err());
    }

    #[test]
    fn policy_names_roundtrip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
        }
        assert!("sometimes".parse::<PolicyKind>().is_err());
    }
}
