//! Feed-forward sigmoid network trained with Adam on class-weighted
//! binary cross-entropy.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cv::{bce_logit, sigmoid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHyperparams {
    /// Number of hidden layers.
    pub depth: usize,
    /// Units per hidden layer.
    pub width: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpHyperparams {
    fn default() -> Self {
        Self { depth: 1, width: 5, learning_rate: 0.05, epochs: 200, batch_size: 64, patience: 20, seed: 0 }
    }
}

pub const MLP_DEPTHS: [usize; 3] = [1, 3, 5];
pub const MLP_WIDTHS: [usize; 3] = [3, 5, 10];

/// Depth x width grid around a base configuration.
pub fn mlp_grid(base: &MlpHyperparams) -> Vec<MlpHyperparams> {
    MLP_DEPTHS
        .iter()
        .flat_map(|&depth| MLP_WIDTHS.iter().map(move |&width| MlpHyperparams { depth, width, ..base.clone() }))
        .collect()
}

/// Dense layer as stored in exported models: `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Parameters are kept in one flat vector, layer by layer (weights then bias),
/// so the optimizer and gradient checks see a single array.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases; sigmoid hidden layers and one
    /// sigmoid output unit.
    pub fn new<R: Rng + ?Sized>(n_inputs: usize, depth: usize, width: usize, rng: &mut R) -> Self {
        let mut dims = vec![n_inputs];
        dims.extend(std::iter::repeat_n(width, depth));
        dims.push(1);
        let mut params = Vec::new();
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            // Glorot range scaled by 4, the usual choice for logistic units.
            let limit = 4.0 * (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self { dims, params }
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        let first = layers.first().ok_or_else(|| Error::Model("network has no layers".into()))?;
        let mut dims = vec![first.inputs];
        let mut params = Vec::new();
        for (i, layer) in layers.into_iter().enumerate() {
            if layer.inputs != *dims.last().unwrap() {
                return Err(Error::Model(format!("layer {i} expects {} inputs", layer.inputs)));
            }
            if layer.outputs == 0 || layer.inputs == 0 {
                return Err(Error::Model(format!("layer {i} has an empty dimension")));
            }
            let expected =
                layer.inputs.checked_mul(layer.outputs).ok_or_else(|| Error::Model("layer too large".into()))?;
            if layer.weights.len() != expected || layer.bias.len() != layer.outputs {
                return Err(Error::Model(format!("layer {i} parameter count does not match its shape")));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::Model(format!("layer {i} has non-finite parameters")));
            }
            dims.push(layer.outputs);
            params.extend(layer.weights);
            params.extend(layer.bias);
        }
        if *dims.last().unwrap() != 1 {
            return Err(Error::Model("output layer must have one unit".into()));
        }
        Ok(Self { dims, params })
    }

    pub fn layers(&self) -> Vec<DenseLayer> {
        let mut out = Vec::new();
        let mut off = 0;
        for l in 0..self.dims.len() - 1 {
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            out.push(DenseLayer {
                inputs: i,
                outputs: o,
                weights: self.params[off..off + i * o].to_vec(),
                bias: self.params[off + i * o..off + i * o + o].to_vec(),
            });
            off += i * o + o;
        }
        out
    }

    pub fn n_inputs(&self) -> usize {
        self.dims[0]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Forward pass filling `acts[l]` with the activations of layer `l`
    /// (`acts[0]` is the input). Returns the output logit.
    fn forward_into(&self, x: &[f64], acts: &mut [Vec<f64>]) -> f64 {
        acts[0].clear();
        acts[0].extend_from_slice(x);
        let mut off = 0;
        let last = self.dims.len() - 2;
        let mut logit = 0.0;
        for l in 0..=last {
            let (ni, no) = (self.dims[l], self.dims[l + 1]);
            let (w, rest) = self.params[off..].split_at(ni * no);
            let b = &rest[..no];
            let (prev, next) = acts.split_at_mut(l + 1);
            let input = &prev[l];
            if l == last {
                logit = b[0] + w.iter().zip(input).map(|(a, v)| a * v).sum::<f64>();
            } else {
                let out = &mut next[0];
                out.clear();
                for o in 0..no {
                    let row = &w[o * ni..(o + 1) * ni];
                    let z = b[o] + row.iter().zip(input).map(|(a, v)| a * v).sum::<f64>();
                    out.push(sigmoid(z));
                }
            }
            off += ni * no + no;
        }
        logit
    }

    fn buffers(&self) -> Vec<Vec<f64>> {
        self.dims.iter().map(|&d| Vec::with_capacity(d)).collect()
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut acts = self.buffers();
        self.forward_into(x, &mut acts)
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean weighted BCE over `rows` of the row-major matrix `x`, and its
    /// gradient with respect to the flat parameter vector.
    pub fn loss_and_gradient(&self, x: &[f64], y: &[bool], w: &[f64], rows: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.accumulate_gradient(x, y, w, rows, &mut grad);
        (loss, grad)
    }

    fn accumulate_gradient(&self, x: &[f64], y: &[bool], w: &[f64], rows: &[usize], grad: &mut [f64]) -> f64 {
        let ni = self.dims[0];
        let n = rows.len().max(1) as f64;
        let nl = self.dims.len() - 1;
        let mut acts = self.buffers();
        let mut deltas: Vec<Vec<f64>> = self.dims.iter().map(|&d| vec![0.0; d]).collect();
        let offsets: Vec<usize> = {
            let mut v = Vec::with_capacity(nl);
            let mut off = 0;
            for l in 0..nl {
                v.push(off);
                off += self.dims[l] * self.dims[l + 1] + self.dims[l + 1];
            }
            v
        };
        let mut loss = 0.0;
        for &r in rows {
            let xi = &x[r * ni..(r + 1) * ni];
            let z = self.forward_into(xi, &mut acts);
            loss += w[r] * bce_logit(z, y[r]);
            deltas[nl][0] = w[r] * (sigmoid(z) - f64::from(u8::from(y[r]))) / n;
            for l in (0..nl).rev() {
                let (din, dout) = (self.dims[l], self.dims[l + 1]);
                let off = offsets[l];
                let input = &acts[l];
                {
                    let (gw, gb) = grad[off..off + din * dout + dout].split_at_mut(din * dout);
                    let d = &deltas[l + 1];
                    for o in 0..dout {
                        let dv = d[o];
                        if dv == 0.0 {
                            continue;
                        }
                        gb[o] += dv;
                        for (g, a) in gw[o * din..(o + 1) * din].iter_mut().zip(input) {
                            *g += dv * a;
                        }
                    }
                }
                if l > 0 {
                    let wts = &self.params[off..off + din * dout];
                    let (lower, upper) = deltas.split_at_mut(l + 1);
                    let d_out = &upper[0];
                    let d_in = &mut lower[l];
                    for (i, di) in d_in.iter_mut().enumerate() {
                        let mut s = 0.0;
                        for o in 0..dout {
                            s += wts[o * din + i] * d_out[o];
                        }
                        let a = input[i];
                        *di = s * a * (1.0 - a);
                    }
                }
            }
        }
        loss / n
    }

    pub fn mean_loss(&self, x: &[f64], y: &[bool], w: &[f64], rows: &[usize]) -> f64 {
        let ni = self.dims[0];
        let mut acts = self.buffers();
        let n = rows.len().max(1) as f64;
        rows.iter()
            .map(|&r| w[r] * bce_logit(self.forward_into(&x[r * ni..(r + 1) * ni], &mut acts), y[r]))
            .sum::<f64>()
            / n
    }
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self { lr, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpFit {
    pub model: Mlp,
    /// Epoch-mean training loss, one entry per epoch run.
    pub train_history: Vec<f64>,
    /// Epochs at which the returned parameters were taken.
    pub best_epochs: usize,
    pub validation_loss: Option<f64>,
}

/// Mini-batch Adam training over `rows`. With a validation set, training
/// stops after `patience` epochs without improvement and the best parameters
/// are returned; otherwise it runs `epochs` epochs.
pub fn fit_mlp(
    x: &[f64],
    n_features: usize,
    y: &[bool],
    w: &[f64],
    rows: &[usize],
    validation: Option<&[usize]>,
    params: &MlpHyperparams,
) -> Result<MlpFit> {
    if rows.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    if params.depth == 0 || params.width == 0 || params.batch_size == 0 {
        return Err(Error::Config("network depth, width and batch size must be positive".into()));
    }
    let mut rng = crate::seed::rng(params.seed, (params.depth * 100 + params.width) as u64, "mlp");
    let model = Mlp::new(n_features, params.depth, params.width, &mut rng);
    run_adam(model, rng, x, y, w, rows, validation, params)
}

/// Continues training `init` on `rows` for `params.epochs` epochs, with no
/// early stopping.
pub fn fine_tune_mlp(
    init: Mlp,
    x: &[f64],
    y: &[bool],
    w: &[f64],
    rows: &[usize],
    params: &MlpHyperparams,
) -> Result<MlpFit> {
    if rows.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    if params.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let rng = crate::seed::rng(params.seed, (params.depth * 100 + params.width) as u64, "mlp-fine-tune");
    run_adam(init, rng, x, y, w, rows, None, params)
}

#[allow(clippy::too_many_arguments)]
fn run_adam(
    mut model: Mlp,
    mut rng: ChaCha8Rng,
    x: &[f64],
    y: &[bool],
    w: &[f64],
    rows: &[usize],
    validation: Option<&[usize]>,
    params: &MlpHyperparams,
) -> Result<MlpFit> {
    let mut adam = Adam::new(model.params.len(), params.learning_rate);
    let mut order = rows.to_vec();
    let mut grad = vec![0.0; model.params.len()];
    let mut history = Vec::with_capacity(params.epochs);
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut since_best = 0;
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let l = model.accumulate_gradient(x, y, w, batch, &mut grad);
            epoch_loss += l * batch.len() as f64;
            adam.step(&mut model.params, &grad);
        }
        history.push(epoch_loss / order.len() as f64);
        if let Some(val) = validation {
            let vl = model.mean_loss(x, y, w, val);
            match &best {
                Some((b, _, _)) if !(vl < *b) => {
                    since_best += 1;
                    if since_best >= params.patience {
                        break;
                    }
                }
                _ => {
                    best = Some((vl, model.params.clone(), epoch + 1));
                    since_best = 0;
                }
            }
        }
    }
    match best {
        Some((vl, p, e)) => {
            model.params = p;
            Ok(MlpFit { model, train_history: history, best_epochs: e, validation_loss: Some(vl) })
        }
        None => {
            let e = history.len();
            Ok(MlpFit { model, train_history: history, best_epochs: e, validation_loss: None })
        }
    }
}
