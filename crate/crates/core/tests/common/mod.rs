//! Independent oracles shared by the learner tests and the acceptance run.

#![allow(dead_code)]

use bandswitch::learner::gbt::{find_best_split, split_gain};
use bandswitch::learner::mlp::Mlp;
use bandswitch::learner::GbtHyperparams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-feature toy set labelled by a linear rule.
pub fn toy(n: usize, seed: u64) -> (Vec<f64>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n * 2);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        x.extend([a, b]);
        y.push(a + 0.5 * b > 0.1);
    }
    (x, y)
}

/// Largest relative gap between backprop and central differences over every
/// parameter of every network with depth <= 2 and width <= 5.
#[allow(clippy::needless_range_loop)]
pub fn finite_difference_error() -> f64 {
    let (x, y) = toy(12, 1);
    let w: Vec<f64> = y.iter().map(|&l| if l { 1.7 } else { 0.6 }).collect();
    let rows: Vec<usize> = (0..12).collect();
    let mut worst: f64 = 0.0;
    for depth in 1..=2 {
        for width in 1..=5 {
            let mut net = Mlp::new(2, depth, width, &mut ChaCha8Rng::seed_from_u64((depth * 10 + width) as u64));
            let (_, grad) = net.loss_and_gradient(&x, &y, &w, &rows);
            let h = 1e-6;
            for i in 0..net.params().len() {
                let orig = net.params()[i];
                net.params_mut()[i] = orig + h;
                let up = net.mean_loss(&x, &y, &w, &rows);
                net.params_mut()[i] = orig - h;
                let down = net.mean_loss(&x, &y, &w, &rows);
                net.params_mut()[i] = orig;
                let numeric = (up - down) / (2.0 * h);
                let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    worst
}

/// Exhaustive search over midpoints of one feature.
fn brute_split(x: &[f64], g: &[f64], h: &[f64], p: &GbtHyperparams) -> Option<(f64, f64)> {
    let mut values = x.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut best: Option<(f64, f64)> = None;
    for pair in values.windows(2) {
        let t = (pair[0] + pair[1]) / 2.0;
        let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
        for ((&xi, &gi), &hi) in x.iter().zip(g).zip(h) {
            if xi < t {
                gl += gi;
                hl += hi;
            } else {
                gr += gi;
                hr += hi;
            }
        }
        let gain = split_gain(gl, hl, gr, hr, p);
        if gain > 0.0 && best.is_none_or(|b| gain > b.1) {
            best = Some((t, gain));
        }
    }
    best
}

/// Number of random 1-feature sets on which the tree learner's split differs
/// from the brute-force one.
pub fn split_mismatches(trials: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = GbtHyperparams { gamma: 0.01, lambda: 0.5, ..GbtHyperparams::default() };
    let mut bad = 0;
    for _ in 0..trials {
        let n = rng.gen_range(2..30);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 * 0.5).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.25)).collect();
        let rows: Vec<usize> = (0..n).collect();
        let ok = match (find_best_split(&x, 1, &g, &h, &rows, &p), brute_split(&x, &g, &h, &p)) {
            (None, None) => true,
            (Some(s), Some((t, gain))) => {
                s.feature == 0 && (s.threshold - t).abs() < 1e-12 && (s.gain - gain).abs() < 1e-9
            }
            _ => false,
        };
        bad += usize::from(!ok);
    }
    bad
}

/// Gradients of a 10-row set with positives weighted by `k`, and of the same
/// set with positives repeated `k` times at unit weight. Returns their cosine
/// and the largest elementwise gap once the row-count factor is removed.
pub fn weighting_vs_duplication(k: usize) -> (f64, f64) {
    let (x, y) = toy(10, 3);
    let net = Mlp::new(2, 1, 4, &mut ChaCha8Rng::seed_from_u64(5));
    let weighted: Vec<f64> = y.iter().map(|&l| if l { k as f64 } else { 1.0 }).collect();
    let rows: Vec<usize> = (0..10).collect();
    let (_, g_w) = net.loss_and_gradient(&x, &y, &weighted, &rows);
    let dup: Vec<usize> = rows.iter().flat_map(|&r| std::iter::repeat_n(r, if y[r] { k } else { 1 })).collect();
    let (_, g_d) = net.loss_and_gradient(&x, &y, &[1.0; 10], &dup);
    let dot: f64 = g_w.iter().zip(&g_d).map(|(a, b)| a * b).sum();
    let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = dup.len() as f64 / rows.len() as f64;
    let gap = g_w.iter().zip(&g_d).map(|(a, b)| (a - b * scale).abs()).fold(0.0, f64::max);
    (dot / (norm(&g_w) * norm(&g_d)), gap)
}
