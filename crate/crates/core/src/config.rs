//! Flat JSON scenario configuration. Every key is optional; unknown keys are
//! rejected so typos do not silently fall back to defaults.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{Band, BandConfig};
use crate::dataset::SyntheticSceneConfig;
use crate::error::{Error, Result};
use crate::learner::{ClassifierKind, FeatureMode, GbtHyperparams, MlpHyperparams};
use crate::policy::PolicyKind;

/// Population of the full-size scene; `scale` multiplies it.
pub const BASE_UE_COUNT: usize = 54_480;

/// µ above this marks a run's classifier as unreliable.
pub const ELEVATED_ERROR: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    A,
    B,
    C,
    #[serde(rename = "custom")]
    Custom,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::A => "A",
            Scenario::B => "B",
            Scenario::C => "C",
            Scenario::Custom => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Scenario::A),
            "B" | "b" => Ok(Scenario::B),
            "C" | "c" => Ok(Scenario::C),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Which policies a run reports. The optimal policy is always evaluated
/// because it is the normalization basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicySelection {
    All,
    Legacy,
    Blind,
    Optimal,
    Proposed,
}

impl PolicySelection {
    pub fn policies(self) -> Vec<PolicyKind> {
        match self {
            PolicySelection::All => PolicyKind::ALL.to_vec(),
            PolicySelection::Legacy => vec![PolicyKind::Legacy],
            PolicySelection::Blind => vec![PolicyKind::Blind],
            PolicySelection::Optimal => vec![PolicyKind::Optimal],
            PolicySelection::Proposed => vec![PolicyKind::Proposed],
        }
    }
}

impl FromStr for PolicySelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(PolicySelection::All),
            other => Ok(match other.parse::<PolicyKind>()? {
                PolicyKind::Legacy => PolicySelection::Legacy,
                PolicyKind::Blind => PolicySelection::Blind,
                PolicyKind::Optimal => PolicySelection::Optimal,
                PolicyKind::Proposed => PolicySelection::Proposed,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Fraction of UEs starting on sub-6 in the custom scenario.
    pub sub6_fraction: f64,
    /// Radio-frame partitions.
    pub t_simulation: usize,
    pub q_exploitation: f64,
    /// Learning fractions for the training-size sweep.
    pub q_training: Vec<f64>,
    pub threshold_sub6: f64,
    pub threshold_mmwave: f64,
    /// Values for the threshold sweep (bits/s).
    pub threshold_sweep: Vec<f64>,
    /// Band whose threshold the sweep varies; `None` varies both.
    pub threshold_sweep_band: Option<Band>,
    pub p_learning: f64,
    pub p_exploitation: Vec<f64>,
    pub rho: f64,
    /// Signaling overhead β (s).
    pub beta: f64,
    pub t_beam: f64,
    pub speed_kmh: f64,
    pub classifier: ClassifierKind,
    pub feature_mode: FeatureMode,
    pub policy: PolicySelection,
    pub seed: u64,
    pub scale: f64,
    pub folds: usize,
    pub mlp_epochs: usize,
    pub mlp_batch_size: usize,
    pub mlp_patience: usize,
    pub gbt_trees: usize,
    pub gbt_max_depth: usize,
    pub shadowing_std_db: f64,
    pub shadowing_correlation_m: f64,
    pub cross_band_coefficient: f64,
    pub blockage_loss_db: f64,
    /// Seed of the synthetic scene; defaults to `seed`.
    pub scene_seed: Option<u64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let scene = SyntheticSceneConfig::default();
        Self {
            scenario: Scenario::A,
            sub6_fraction: 0.7,
            t_simulation: 10,
            q_exploitation: 0.8,
            q_training: vec![1e-3, 5e-3, 7e-3, 1e-2, 3e-2, 5e-2, 7e-2, 1e-1, 3e-1, 4e-1, 5e-1, 7e-1],
            threshold_sub6: 1.72e6,
            threshold_mmwave: 7.0e6,
            threshold_sweep: vec![1.72e6, 2.0e6, 2.6e6],
            threshold_sweep_band: None,
            p_learning: 0.4,
            p_exploitation: vec![0.2, 0.4, 0.6, 0.8],
            rho: 0.6,
            beta: 0.0,
            t_beam: 1e-6,
            speed_kmh: 50.0,
            classifier: ClassifierKind::Mlp,
            feature_mode: FeatureMode::Deployable,
            policy: PolicySelection::All,
            seed: 0,
            scale: 1.0,
            folds: 2,
            mlp_epochs: 200,
            mlp_batch_size: 64,
            mlp_patience: 20,
            gbt_trees: 100,
            gbt_max_depth: 4,
            shadowing_std_db: scene.shadowing_std_db,
            shadowing_correlation_m: scene.shadowing_correlation_m,
            cross_band_coefficient: scene.cross_band_coefficient,
            blockage_loss_db: scene.blockage_loss_db,
            scene_seed: None,
        }
    }
}

fn fraction(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must lie in (0, 1)")))
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must lie in [0, 1]")))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        fraction("q_exploitation", self.q_exploitation)?;
        for &q in &self.q_training {
            fraction("q_training", q)?;
        }
        probability("sub6_fraction", self.sub6_fraction)?;
        probability("p_learning", self.p_learning)?;
        for &p in &self.p_exploitation {
            probability("p_exploitation", p)?;
        }
        probability("cross_band_coefficient", self.cross_band_coefficient)?;
        for (name, list) in [
            ("q_training", self.q_training.len()),
            ("p_exploitation", self.p_exploitation.len()),
            ("threshold_sweep", self.threshold_sweep.len()),
        ] {
            if list == 0 {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
        }
        for &t in self.threshold_sweep.iter().chain([&self.threshold_sub6, &self.threshold_mmwave]) {
            if t.is_nan() || t < 0.0 {
                return Err(Error::Config(format!("threshold {t} must be non-negative")));
            }
        }
        if self.t_simulation == 0 {
            return Err(Error::Config("t_simulation must be at least 1".into()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Config(format!("rho = {} must lie in (0, 1]", self.rho)));
        }
        for (name, v) in [("beta", self.beta), ("t_beam", self.t_beam)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        for (name, v) in [
            ("speed_kmh", self.speed_kmh),
            ("scale", self.scale),
            ("shadowing_correlation_m", self.shadowing_correlation_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.mlp_batch_size == 0 || self.mlp_epochs == 0 {
            return Err(Error::Config("MLP epochs and batch size must be positive".into()));
        }
        Ok(())
    }

    /// Fraction of UEs that start on sub-6.
    pub fn initial_sub6_fraction(&self) -> f64 {
        match self.scenario {
            Scenario::A => 1.0,
            Scenario::B => 0.0,
            Scenario::C => 0.7,
            Scenario::Custom => self.sub6_fraction,
        }
    }

    pub fn ue_count(&self) -> usize {
        ((BASE_UE_COUNT as f64 * self.scale).round() as usize).max(1)
    }

    pub fn bands(&self) -> (BandConfig, BandConfig) {
        (BandConfig::sub6_default(), BandConfig::mmwave_default())
    }

    pub fn scene(&self) -> SyntheticSceneConfig {
        SyntheticSceneConfig {
            ue_count: Some(self.ue_count()),
            shadowing_std_db: self.shadowing_std_db,
            shadowing_correlation_m: self.shadowing_correlation_m,
            cross_band_coefficient: self.cross_band_coefficient,
            blockage_loss_db: self.blockage_loss_db,
            rng_seed: self.scene_seed.unwrap_or(self.seed),
            ..SyntheticSceneConfig::default()
        }
    }

    pub fn mlp_base(&self) -> MlpHyperparams {
        MlpHyperparams {
            epochs: self.mlp_epochs,
            batch_size: self.mlp_batch_size,
            patience: self.mlp_patience,
            seed: self.seed,
            ..MlpHyperparams::default()
        }
    }

    pub fn gbt_base(&self) -> GbtHyperparams {
        GbtHyperparams {
            n_trees: self.gbt_trees,
            max_depth: self.gbt_max_depth,
            seed: self.seed,
            ..GbtHyperparams::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = ScenarioConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.t_simulation, 10);
        assert_eq!(cfg.q_training.len(), 12);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"tresholds": 3}"#).is_err());
    }

    #[test]
    fn out_of_range_values_rejected() {
        for bad in [
            r#"{"q_exploitation": 1.0}"#,
            r#"{"p_exploitation": []}"#,
            r#"{"p_learning": 1.2}"#,
            r#"{"rho": 0}"#,
            r#"{"t_simulation": 0}"#,
            r#"{"threshold_sub6": -1}"#,
        ] {
            assert!(ScenarioConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn scenario_assignment_fractions() {
        let mut cfg = ScenarioConfig::default();
        for (s, f) in [(Scenario::A, 1.0), (Scenario::B, 0.0), (Scenario::C, 0.7)] {
            cfg.scenario = s;
            assert_eq!(cfg.initial_sub6_fraction(), f);
        }
        let cfg = ScenarioConfig::from_json(r#"{"scenario": "custom", "sub6_fraction": 0.25}"#).unwrap();
        assert_eq!(cfg.initial_sub6_fraction(), 0.25);
    }

    #[test]
    fn scale_shrinks_population() {
        let cfg = ScenarioConfig { scale: 0.1, ..Default::default() };
        assert_eq!(cfg.ue_count(), 5_448);
    }

    #[test]
    fn selections_parse() {
        assert_eq!("all".parse::<PolicySelection>().unwrap().policies().len(), 4);
        assert_eq!("blind".parse::<PolicySelection>().unwrap().policies(), vec![PolicyKind::Blind]);
        assert!("most".parse::<PolicySelection>().is_err());
    }
}
