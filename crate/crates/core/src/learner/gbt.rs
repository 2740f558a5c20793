//! Second-order gradient-boosted binary trees on the logistic loss with the
//! objective `loss + α‖w‖₁ + ½λ‖w‖₂² + γT`.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::cv::sigmoid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtHyperparams {
    /// L1 penalty on leaf weights.
    pub alpha: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Penalty per leaf.
    pub gamma: f64,
    /// Fraction of rows drawn (without replacement) for each tree.
    pub subsample: f64,
    /// Minimum hessian sum in a child.
    pub min_child_weight: f64,
    pub n_trees: usize,
    pub max_depth: usize,
    /// Shrinkage applied to each tree's leaf weights.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GbtHyperparams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            lambda: 1.0,
            gamma: 0.0,
            subsample: 0.7,
            min_child_weight: 0.0,
            n_trees: 100,
            max_depth: 4,
            learning_rate: 0.3,
            seed: 0,
        }
    }
}

pub const GBT_ALPHAS: [f64; 2] = [0.0, 1.0];
pub const GBT_LAMBDAS: [f64; 2] = [0.0, 1.0];
pub const GBT_GAMMAS: [f64; 3] = [0.0, 0.02, 0.04];
pub const GBT_SUBSAMPLES: [f64; 2] = [0.5, 0.7];
pub const GBT_MIN_CHILD_WEIGHTS: [f64; 2] = [0.0, 10.0];

pub fn gbt_grid(base: &GbtHyperparams) -> Vec<GbtHyperparams> {
    let mut out = Vec::new();
    for &alpha in &GBT_ALPHAS {
        for &lambda in &GBT_LAMBDAS {
            for &gamma in &GBT_GAMMAS {
                for &subsample in &GBT_SUBSAMPLES {
                    for &min_child_weight in &GBT_MIN_CHILD_WEIGHTS {
                        out.push(GbtHyperparams { alpha, lambda, gamma, subsample, min_child_weight, ..base.clone() });
                    }
                }
            }
        }
    }
    out
}

impl GbtHyperparams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.alpha, self.lambda, self.gamma, self.min_child_weight];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("GBT penalties must be finite and non-negative".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Config(format!("subsample must be in (0, 1], got {}", self.subsample)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("GBT learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// `sign(g) · max(|g| − α, 0)`.
pub fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

/// Optimal leaf weight for gradient sum `g` and hessian sum `h`.
pub fn leaf_weight(g: f64, h: f64, alpha: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom <= 0.0 {
        return 0.0;
    }
    -soft_threshold(g, alpha) / denom
}

/// Objective reduction of a leaf at its optimal weight (before the γ charge).
pub fn leaf_score(g: f64, h: f64, alpha: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = soft_threshold(g, alpha);
    t * t / denom
}

/// Gain of replacing one leaf by two: `½[S(L) + S(R) − S(L∪R)] − γ`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, p: &GbtHyperparams) -> f64 {
    0.5 * (leaf_score(gl, hl, p.alpha, p.lambda) + leaf_score(gr, hr, p.alpha, p.lambda)
        - leaf_score(gl + gr, hl + hr, p.alpha, p.lambda))
        - p.gamma
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    /// Rows with `x < threshold` go left.
    pub threshold: f64,
    pub gain: f64,
}

/// Exact greedy search over every feature and every midpoint between distinct
/// consecutive values. Only splits with positive gain whose children both
/// reach `min_child_weight` qualify; ties keep the first candidate found.
pub fn find_best_split(
    x: &[f64],
    n_features: usize,
    g: &[f64],
    h: &[f64],
    rows: &[usize],
    p: &GbtHyperparams,
) -> Option<Split> {
    let g_tot: f64 = rows.iter().map(|&r| g[r]).sum();
    let h_tot: f64 = rows.iter().map(|&r| h[r]).sum();
    let mut best: Option<Split> = None;
    let mut sorted = rows.to_vec();
    for f in 0..n_features {
        sorted.sort_by(|&a, &b| x[a * n_features + f].total_cmp(&x[b * n_features + f]));
        let (mut gl, mut hl) = (0.0, 0.0);
        for k in 0..sorted.len().saturating_sub(1) {
            let r = sorted[k];
            gl += g[r];
            hl += h[r];
            let (v, next) = (x[r * n_features + f], x[sorted[k + 1] * n_features + f]);
            if v == next {
                continue;
            }
            let (gr, hr) = (g_tot - gl, h_tot - hl);
            if hl < p.min_child_weight || hr < p.min_child_weight {
                continue;
            }
            let gain = split_gain(gl, hl, gr, hr, p);
            if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                best = Some(Split { feature: f, threshold: v + (next - v) / 2.0, gain });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Nodes in creation order; node 0 is the root and children always follow
/// their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Structural checks for trees read from untrusted input.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Model("tree has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Leaf { value } if !value.is_finite() => {
                    return Err(Error::Model(format!("node {i} has a non-finite leaf value")));
                }
                Node::Split { feature, threshold, left, right } => {
                    if *feature >= n_features || threshold.is_nan() {
                        return Err(Error::Model(format!("node {i} has an invalid split")));
                    }
                    // Forward-only links rule out cycles.
                    if *left <= i || *right <= i || *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return Err(Error::Model(format!("node {i} has out-of-order children")));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Training rows presorted once per feature; every tree reuses the order.
struct Presorted {
    by_feature: Vec<Vec<usize>>,
}

impl Presorted {
    fn new(x: &[f64], n_features: usize, rows: &[usize]) -> Self {
        let by_feature = (0..n_features)
            .map(|f| {
                let mut v = rows.to_vec();
                v.sort_by(|&a, &b| x[a * n_features + f].total_cmp(&x[b * n_features + f]));
                v
            })
            .collect();
        Self { by_feature }
    }
}

const INACTIVE: usize = usize::MAX;

#[derive(Clone, Copy)]
struct Scan {
    gl: f64,
    hl: f64,
    last: f64,
    seen: bool,
    best: Option<Split>,
}

/// Level-wise growth. For each level, one pass over each presorted feature
/// evaluates every open node at once, giving the same splits as running
/// [`find_best_split`] on each node separately.
#[allow(clippy::too_many_arguments)]
fn grow_tree(
    x: &[f64],
    n_features: usize,
    g: &[f64],
    h: &[f64],
    sorted: &Presorted,
    node_of: &mut [usize],
    picked: &[usize],
    p: &GbtHyperparams,
) -> Tree {
    // (tree node id, G, H) of the nodes open at the current level.
    let mut open: Vec<(usize, f64, f64)> =
        vec![(0, picked.iter().map(|&r| g[r]).sum(), picked.iter().map(|&r| h[r]).sum())];
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    for &r in picked {
        node_of[r] = 0;
    }
    let mut depth = 0;
    while !open.is_empty() {
        let mut slot = vec![INACTIVE; nodes.len()];
        for (k, &(id, _, _)) in open.iter().enumerate() {
            slot[id] = k;
        }
        let mut best: Vec<Option<Split>> = vec![None; open.len()];
        if depth < p.max_depth {
            for (f, order) in sorted.by_feature.iter().enumerate() {
                let mut scans: Vec<Scan> =
                    best.iter().map(|&b| Scan { gl: 0.0, hl: 0.0, last: 0.0, seen: false, best: b }).collect();
                for &r in order {
                    let id = node_of[r];
                    if id == INACTIVE || slot[id] == INACTIVE {
                        continue;
                    }
                    let k = slot[id];
                    let v = x[r * n_features + f];
                    let s = &mut scans[k];
                    if s.seen && v != s.last {
                        let (gt, ht) = (open[k].1, open[k].2);
                        let (gr, hr) = (gt - s.gl, ht - s.hl);
                        if s.hl >= p.min_child_weight && hr >= p.min_child_weight {
                            let gain = split_gain(s.gl, s.hl, gr, hr, p);
                            if gain > 0.0 && s.best.is_none_or(|b| gain > b.gain) {
                                s.best = Some(Split { feature: f, threshold: s.last + (v - s.last) / 2.0, gain });
                            }
                        }
                    }
                    s.gl += g[r];
                    s.hl += h[r];
                    s.last = v;
                    s.seen = true;
                }
                for (k, s) in scans.into_iter().enumerate() {
                    best[k] = s.best;
                }
            }
        }
        let mut child_of = vec![(INACTIVE, INACTIVE); open.len()];
        let mut sums = Vec::new();
        for (k, &(id, gt, ht)) in open.iter().enumerate() {
            match best[k] {
                None => nodes[id] = Node::Leaf { value: p.learning_rate * leaf_weight(gt, ht, p.alpha, p.lambda) },
                Some(sp) => {
                    let (l, r) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[id] = Node::Split { feature: sp.feature, threshold: sp.threshold, left: l, right: r };
                    child_of[k] = (l, r);
                    sums.push((l, 0.0, 0.0));
                    sums.push((r, 0.0, 0.0));
                }
            }
        }
        let mut sum_slot = vec![INACTIVE; nodes.len()];
        for (j, &(id, _, _)) in sums.iter().enumerate() {
            sum_slot[id] = j;
        }
        for &r in picked {
            let id = node_of[r];
            if id == INACTIVE || slot.get(id).copied().unwrap_or(INACTIVE) == INACTIVE {
                continue;
            }
            let k = slot[id];
            match nodes[id] {
                Node::Split { feature, threshold, .. } => {
                    let c = if x[r * n_features + feature] < threshold { child_of[k].0 } else { child_of[k].1 };
                    node_of[r] = c;
                    let j = sum_slot[c];
                    sums[j].1 += g[r];
                    sums[j].2 += h[r];
                }
                Node::Leaf { .. } => node_of[r] = INACTIVE,
            }
        }
        open = sums;
        depth += 1;
    }
    for &r in picked {
        node_of[r] = INACTIVE;
    }
    Tree { nodes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbt {
    pub n_features: usize,
    pub base_margin: f64,
    pub trees: Vec<Tree>,
}

impl Gbt {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.base_margin + self.trees.iter().map(|t| t.eval(x)).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.base_margin.is_finite() {
            return Err(Error::Model("non-finite base margin".into()));
        }
        self.trees.iter().try_for_each(|t| t.validate(self.n_features))
    }
}

/// Boosts `n_trees` trees over `rows` of the row-major matrix `x`. Per-row
/// weights `w` scale both the gradient and the hessian.
pub fn fit_gbt(x: &[f64], n_features: usize, y: &[bool], w: &[f64], rows: &[usize], p: &GbtHyperparams) -> Result<Gbt> {
    p.validate()?;
    if rows.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    let wsum: f64 = rows.iter().map(|&r| w[r]).sum();
    let wpos: f64 = rows.iter().filter(|&&r| y[r]).map(|&r| w[r]).sum();
    let prior = (wpos / wsum).clamp(1e-6, 1.0 - 1e-6);
    let base_margin = (prior / (1.0 - prior)).ln();

    let mut margin = vec![base_margin; y.len()];
    let mut g = vec![0.0; y.len()];
    let mut h = vec![0.0; y.len()];
    let mut rng = crate::seed::rng(p.seed, 0, "gbt");
    let sorted = Presorted::new(x, n_features, rows);
    let mut node_of = vec![INACTIVE; y.len()];
    let n_sub = ((rows.len() as f64 * p.subsample).round() as usize).clamp(1, rows.len());
    let mut trees = Vec::with_capacity(p.n_trees);
    for _ in 0..p.n_trees {
        for &r in rows {
            let pr = sigmoid(margin[r]);
            g[r] = w[r] * (pr - f64::from(u8::from(y[r])));
            h[r] = w[r] * pr * (1.0 - pr);
        }
        let picked: Vec<usize> = if n_sub == rows.len() {
            rows.to_vec()
        } else {
            sample(&mut rng, rows.len(), n_sub).into_iter().map(|i| rows[i]).collect()
        };
        let tree = grow_tree(x, n_features, &g, &h, &sorted, &mut node_of, &picked, p);
        for &r in rows {
            margin[r] += tree.eval(&x[r * n_features..(r + 1) * n_features]);
        }
        trees.push(tree);
    }
    Ok(Gbt { n_features, base_margin, trees })
}
