//! Class weighting, stratified K-fold splits and grid search.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Inverse class frequency normalized to mean 1 over `labels`:
/// `n / (2 n_c)` for class `c`. Returned as `(negative, positive)`.
pub fn class_weights(labels: &[bool]) -> Result<(f64, f64)> {
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = n - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::Training("degenerate labels: only one class present".into()));
    }
    Ok((n / (2.0 * neg), n / (2.0 * pos)))
}

/// Numerically stable `log(1 + exp(z))`.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit, `softplus(z) - y z`.
pub fn bce_logit(z: f64, y: bool) -> f64 {
    softplus(z) - if y { z } else { 0.0 }
}

/// Weighted mean BCE over logits: `Σ w_i l_i / n`.
pub fn weighted_bce(logits: &[f64], labels: &[bool], weights: &[f64]) -> f64 {
    let n = logits.len().max(1) as f64;
    logits.iter().zip(labels).zip(weights).map(|((&z, &y), &w)| w * bce_logit(z, y)).sum::<f64>() / n
}

/// Stratified K folds over `rows` (validation index sets). Every row lands in
/// exactly one fold.
pub fn stratified_kfold<R: Rng + ?Sized>(
    rows: &[usize],
    labels: &[bool],
    k: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("K-fold needs K >= 2, got {k}")));
    }
    if rows.len() < k {
        return Err(Error::InsufficientData(format!("{} rows cannot fill {k} folds", rows.len())));
    }
    let mut pos: Vec<usize> = rows.iter().copied().filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = rows.iter().copied().filter(|&i| !labels[i]).collect();
    pos.shuffle(rng);
    neg.shuffle(rng);
    let mut folds = vec![Vec::new(); k];
    for (j, idx) in pos.into_iter().chain(neg).enumerate() {
        folds[j % k].push(idx);
    }
    Ok(folds)
}

/// Training rows for fold `f`: every row not in it.
pub fn complement(folds: &[Vec<usize>], f: usize) -> Vec<usize> {
    folds.iter().enumerate().filter(|(j, _)| *j != f).flat_map(|(_, v)| v.iter().copied()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome<T> {
    pub best: usize,
    /// Mean validation loss per grid point.
    pub mean_losses: Vec<f64>,
    /// Per grid point, the auxiliary value each fold reported.
    pub fold_outputs: Vec<Vec<T>>,
}

/// Evaluates every grid point on every fold (in parallel) and picks the
/// point with the lowest mean validation loss; ties go to the earlier point.
/// `eval(point, train_rows, validation_rows)` returns `(loss, aux)`.
pub fn grid_search<P, T, F>(grid: &[P], folds: &[Vec<usize>], eval: F) -> Result<GridOutcome<T>>
where
    P: Sync,
    T: Send,
    F: Fn(&P, &[usize], &[usize]) -> Result<(f64, T)> + Sync,
{
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..folds.len()).map(move |f| (g, f))).collect();
    let results: Vec<Result<(f64, T)>> =
        jobs.par_iter().map(|&(g, f)| eval(&grid[g], &complement(folds, f), &folds[f])).collect();
    let mut mean_losses = vec![0.0; grid.len()];
    let mut fold_outputs: Vec<Vec<T>> = (0..grid.len()).map(|_| Vec::new()).collect();
    for ((g, _), r) in jobs.into_iter().zip(results) {
        let (loss, aux) = r?;
        mean_losses[g] += loss / folds.len() as f64;
        fold_outputs[g].push(aux);
    }
    let mut best = 0;
    for (g, &l) in mean_losses.iter().enumerate() {
        if l < mean_losses[best] || mean_losses[best].is_nan() {
            best = g;
        }
    }
    Ok(GridOutcome { best, mean_losses, fold_outputs })
}
