//! Classifier and throughput metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points on the CDF grid written to reports.
pub const CDF_GRID_POINTS: usize = 512;

/// 2x2 counts; rows are the true class, columns the predicted class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new(counts: [[u64; 2]; 2]) -> Self {
        Self { counts }
    }

    pub fn from_predictions(truth: &[bool], predicted: &[bool]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch { expected: truth.len(), actual: predicted.len() });
        }
        let mut c = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            c.counts[usize::from(t)][usize::from(p)] += 1;
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for i in 0..2 {
            for j in 0..2 {
                self.counts[i][j] += other.counts[i][j];
            }
        }
    }
}

/// `E = Tr(J Cᵀ)` with `J` the 2x2 anti-diagonal identity, and `µ = E / n`
/// where `n` is the number of scored rows.
#[allow(clippy::needless_range_loop)]
pub fn misclassification(c: &ConfusionMatrix) -> Result<(u64, f64)> {
    const J: [[u64; 2]; 2] = [[0, 1], [1, 0]];
    let mut trace = 0;
    for i in 0..2 {
        // (J Cᵀ)_ii = Σ_k J_ik C_ik
        trace += (0..2).map(|k| J[i][k] * c.counts[i][k]).sum::<u64>();
    }
    let n = c.total();
    if n == 0 {
        return Err(Error::Undefined("misclassification rate of an empty confusion matrix".into()));
    }
    Ok((trace, trace as f64 / n as f64))
}

/// Area under the ROC curve via the rank-sum (Mann-Whitney) statistic, with
/// average ranks for tied scores.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), actual: labels.len() });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined("ROC AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputStats {
    pub mean: f64,
    pub count: usize,
    /// `(rate, P[R <= rate])` on an even grid from 0 to the sample maximum.
    pub cdf: Vec<(f64, f64)>,
}

pub fn empirical_cdf(rates: &[f64], points: usize) -> Vec<(f64, f64)> {
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let max = sorted.last().copied().unwrap_or(0.0).max(0.0);
    let n = sorted.len() as f64;
    (0..points)
        .map(|k| {
            // The last point is pinned to the max; the ratio can round below it.
            let x = if points > 1 && k + 1 < points { max * k as f64 / (points - 1) as f64 } else { max };
            let below = sorted.partition_point(|&r| r <= x);
            (x, below as f64 / n)
        })
        .collect()
}

pub fn throughput_stats(rates: &[f64]) -> Result<ThroughputStats> {
    if rates.is_empty() {
        return Err(Error::Undefined("throughput statistics of an empty sample".into()));
    }
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    Ok(ThroughputStats { mean, count: rates.len(), cdf: empirical_cdf(rates, CDF_GRID_POINTS) })
}
