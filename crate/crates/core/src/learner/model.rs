//! Trained classifier handle: cross-validated training, prediction,
//! invalidation and JSON export.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cv::{class_weights, grid_search, stratified_kfold, weighted_bce};
use super::features::{FeatureMode, FeatureRow, COL_RATE_MMWAVE, COL_RATE_SUB6, NUM_FEATURES};
use super::gbt::{fit_gbt, Gbt, GbtHyperparams};
use super::mlp::{fine_tune_mlp, fit_mlp, DenseLayer, Mlp, MlpHyperparams};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "bandswitch-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Mlp,
    Gbt,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::Gbt => "gbt",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(ClassifierKind::Mlp),
            "gbt" => Ok(ClassifierKind::Gbt),
            other => Err(Error::Config(format!("unknown classifier '{other}'"))),
        }
    }
}

/// Per-column affine map `(x − mean) · scale`. Constant columns get scale 0,
/// so a feature that never varied during training cannot sway the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[f64], n_features: usize) -> Self {
        let n = (x.len() / n_features.max(1)).max(1) as f64;
        let mut mean = vec![0.0; n_features];
        for row in x.chunks(n_features) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; n_features];
        for row in x.chunks(n_features) {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var
            .iter()
            .zip(&mean)
            .map(|(&v, &m)| if v > 1e-12 * (1.0 + m * m) { 1.0 / v.sqrt() } else { 0.0 })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &mut [f64]) {
        let nf = self.mean.len();
        for row in x.chunks_mut(nf) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) * s;
            }
        }
    }
}

/// Rates span orders of magnitude; the network sees `ln(1 + r / 1 Mbps)`.
/// Zeroed rate columns stay zero.
fn compress_rates(x: &mut [f64]) {
    for row in x.chunks_mut(NUM_FEATURES) {
        for c in [COL_RATE_SUB6, COL_RATE_MMWAVE] {
            row[c] = (row[c].max(0.0) / 1e6).ln_1p();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Params {
    Mlp { standardizer: Standardizer, net: Mlp, hyper: MlpHyperparams },
    Gbt { model: Gbt, hyper: GbtHyperparams },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `1[score ≥ 0.5]`.
    pub labels: Vec<bool>,
    pub scores: Vec<f64>,
}

/// Validation-loss record of a grid search, kept for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub grid_size: usize,
    pub best_index: usize,
    pub mean_validation_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub feature_mode: FeatureMode,
    pub partition_id: usize,
    valid: bool,
    params: Params,
    pub selection: Option<SelectionSummary>,
}

impl TrainedModel {
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Purges the model at the end of its partition. Idempotent.
    pub fn invalidate(&mut self) {
        self.valid = false;
    }

    pub fn mlp_hyperparams(&self) -> Option<&MlpHyperparams> {
        match &self.params {
            Params::Mlp { hyper, .. } => Some(hyper),
            Params::Gbt { .. } => None,
        }
    }

    pub fn gbt_hyperparams(&self) -> Option<&GbtHyperparams> {
        match &self.params {
            Params::Gbt { hyper, .. } => Some(hyper),
            Params::Mlp { .. } => None,
        }
    }

    pub fn predict(&self, rows: &[FeatureRow]) -> Result<Prediction> {
        if !self.valid {
            return Err(Error::Invalidated(self.partition_id));
        }
        let scores: Vec<f64> = match &self.params {
            Params::Mlp { standardizer, net, .. } => rows
                .iter()
                .map(|r| {
                    let mut x = r.x;
                    compress_rates(&mut x);
                    standardizer.apply(&mut x);
                    net.score(&x)
                })
                .collect(),
            Params::Gbt { model, .. } => rows.iter().map(|r| model.score(&r.x)).collect(),
        };
        let labels = scores.iter().map(|&s| s >= 0.5).collect();
        Ok(Prediction { labels, scores })
    }

    pub fn to_json(&self) -> Result<String> {
        let params = match &self.params {
            Params::Mlp { standardizer, net, hyper } => ModelParams::Mlp {
                hyperparameters: hyper.clone(),
                standardizer: standardizer.clone(),
                layers: net.layers(),
            },
            Params::Gbt { model, hyper } => ModelParams::Gbt { hyperparameters: hyper.clone(), model: model.clone() },
        };
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_mode: self.feature_mode,
            partition_id: self.partition_id,
            valid: self.valid,
            n_features: NUM_FEATURES,
            params,
            selection: self.selection.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unexpected format '{}'", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported model version {}", file.version)));
        }
        if file.n_features != NUM_FEATURES {
            return Err(Error::Model(format!("model expects {} features, not {NUM_FEATURES}", file.n_features)));
        }
        let (kind, params) = match file.params {
            ModelParams::Mlp { hyperparameters, standardizer, layers } => {
                let net = Mlp::from_layers(layers)?;
                if net.n_inputs() != NUM_FEATURES
                    || standardizer.mean.len() != NUM_FEATURES
                    || standardizer.scale.len() != NUM_FEATURES
                {
                    return Err(Error::Model("network input size does not match the feature count".into()));
                }
                if standardizer.mean.iter().chain(&standardizer.scale).any(|v| !v.is_finite()) {
                    return Err(Error::Model("non-finite standardizer".into()));
                }
                (ClassifierKind::Mlp, Params::Mlp { standardizer, net, hyper: hyperparameters })
            }
            ModelParams::Gbt { hyperparameters, model } => {
                if model.n_features != NUM_FEATURES {
                    return Err(Error::Model("tree ensemble feature count mismatch".into()));
                }
                model.validate()?;
                (ClassifierKind::Gbt, Params::Gbt { model, hyper: hyperparameters })
            }
        };
        Ok(Self {
            kind,
            feature_mode: file.feature_mode,
            partition_id: file.partition_id,
            valid: file.valid,
            params,
            selection: file.selection,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    feature_mode: FeatureMode,
    partition_id: usize,
    valid: bool,
    n_features: usize,
    params: ModelParams,
    #[serde(default)]
    selection: Option<SelectionSummary>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ModelParams {
    Mlp { hyperparameters: MlpHyperparams, standardizer: Standardizer, layers: Vec<DenseLayer> },
    Gbt { hyperparameters: GbtHyperparams, model: Gbt },
}

/// Where a model comes from: the feature layout and the partition it serves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingContext {
    pub feature_mode: FeatureMode,
    pub partition_id: usize,
    pub folds: usize,
    pub seed: u64,
}

struct Design {
    x: Vec<f64>,
    y: Vec<bool>,
    w: Vec<f64>,
}

fn design(rows: &[FeatureRow]) -> Result<Design> {
    if rows.is_empty() {
        return Err(Error::Training("empty learn set".into()));
    }
    let y: Vec<bool> = rows.iter().map(|r| r.y).collect();
    let (wn, wp) = class_weights(&y)?;
    let w = y.iter().map(|&l| if l { wp } else { wn }).collect();
    let x = rows.iter().flat_map(|r| r.x).collect();
    Ok(Design { x, y, w })
}

/// Grid search with stratified K-fold CV on class-weighted BCE, then a refit
/// on the whole learn set. The refit starts from the winning configuration's
/// best fold network and runs for the mean early-stopping epoch across its
/// folds. Warm-starting keeps a fold solution that escaped a plateau; a
/// fresh initialization often lands back on it. The refit is discarded if it
/// raises the learn-set loss.
pub fn train_mlp(rows: &[FeatureRow], grid: &[MlpHyperparams], ctx: TrainingContext) -> Result<TrainedModel> {
    let Design { mut x, y, w } = design(rows)?;
    compress_rates(&mut x);
    let standardizer = Standardizer::fit(&x, NUM_FEATURES);
    standardizer.apply(&mut x);
    let all: Vec<usize> = (0..rows.len()).collect();
    let mut rng = crate::seed::rng(ctx.seed, ctx.partition_id as u64, "cv-folds");
    let folds = stratified_kfold(&all, &y, ctx.folds, &mut rng)?;
    let mut outcome = grid_search(grid, &folds, |p, train, val| {
        let fit = fit_mlp(&x, NUM_FEATURES, &y, &w, train, Some(val), p)?;
        let loss = fit.validation_loss.unwrap_or(f64::INFINITY);
        Ok((loss, (loss, fit.best_epochs, fit.model)))
    })?;
    let best = &grid[outcome.best];
    let fold_fits = std::mem::take(&mut outcome.fold_outputs[outcome.best]);
    let epochs = fold_fits.iter().map(|f| f.1).sum::<usize>() as f64 / folds.len() as f64;
    let init = fold_fits
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|f| f.2)
        .ok_or_else(|| Error::Training("no folds".into()))?;
    let refit = MlpHyperparams { epochs: (epochs.round() as usize).max(1), ..best.clone() };
    let start_loss = init.mean_loss(&x, &y, &w, &all);
    let tuned = fine_tune_mlp(init.clone(), &x, &y, &w, &all, &refit)?.model;
    let net = if tuned.mean_loss(&x, &y, &w, &all) <= start_loss { tuned } else { init };
    Ok(TrainedModel {
        kind: ClassifierKind::Mlp,
        feature_mode: ctx.feature_mode,
        partition_id: ctx.partition_id,
        valid: true,
        params: Params::Mlp { standardizer, net, hyper: refit },
        selection: Some(SelectionSummary {
            grid_size: grid.len(),
            best_index: outcome.best,
            mean_validation_losses: outcome.mean_losses,
        }),
    })
}

pub fn train_gbt(rows: &[FeatureRow], grid: &[GbtHyperparams], ctx: TrainingContext) -> Result<TrainedModel> {
    let Design { x, y, w } = design(rows)?;
    let all: Vec<usize> = (0..rows.len()).collect();
    let mut rng = crate::seed::rng(ctx.seed, ctx.partition_id as u64, "cv-folds");
    let folds = stratified_kfold(&all, &y, ctx.folds, &mut rng)?;
    let outcome = grid_search(grid, &folds, |p, train, val| {
        let model = fit_gbt(&x, NUM_FEATURES, &y, &w, train, p)?;
        let logits: Vec<f64> = val.iter().map(|&r| model.logit(&x[r * NUM_FEATURES..(r + 1) * NUM_FEATURES])).collect();
        let yv: Vec<bool> = val.iter().map(|&r| y[r]).collect();
        let wv: Vec<f64> = val.iter().map(|&r| w[r]).collect();
        Ok((weighted_bce(&logits, &yv, &wv), ()))
    })?;
    let best = grid[outcome.best].clone();
    let model = fit_gbt(&x, NUM_FEATURES, &y, &w, &all, &best)?;
    Ok(TrainedModel {
        kind: ClassifierKind::Gbt,
        feature_mode: ctx.feature_mode,
        partition_id: ctx.partition_id,
        valid: true,
        params: Params::Gbt { model, hyper: best },
        selection: Some(SelectionSummary {
            grid_size: grid.len(),
            best_index: outcome.best,
            mean_validation_losses: outcome.mean_losses,
        }),
    })
}
