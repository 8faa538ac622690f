//! A self-contained feed-forward network engine.
//!
//! Dense layers with optional batch normalization, leaky-ReLU/sigmoid
//! activations, inverted dropout, additive bypass connections between
//! equal-width layer outputs, exact backpropagation through all of it, and
//! Adam. Everything runs in f64.
//!
//! Per layer the forward order is
//!
//! ```text
//! affine -> batch norm -> (+ incoming bypass outputs) -> activation -> dropout
//! ```
//!
//! A bypass edge `(s, d)` adds the *output* of layer `s` (post-activation,
//! post-dropout) to the pre-activation signal of layer `d`; edges only run
//! forward and must connect equal widths.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// Negative-side slope of the leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.01;
/// Variance floor inside the batch-norm normalizer.
pub const BN_EPS: f64 = 1e-5;
/// Momentum of the batch-norm running statistics.
pub const BN_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    LeakyRelu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x > 0.0 {
                    x
                } else {
                    LEAKY_SLOPE * x
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative given the pre-activation `x` and the activation value `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

/// Shape and behaviour of one dense layer.
#[derive(Debug, Clone)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub batch_norm: bool,
    pub dropout: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gain: Array1<f64>,
    pub bias: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl BatchNorm {
    fn identity(dim: usize) -> Self {
        BatchNorm {
            gain: Array1::ones(dim),
            bias: Array1::zeros(dim),
            running_mean: Array1::zeros(dim),
            running_var: Array1::ones(dim),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// `out_dim x in_dim`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub batch_norm: Option<BatchNorm>,
    pub activation: Activation,
    pub dropout: f64,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// A trained (or trainable) multi-layer perceptron with bypass edges.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
    /// `(source_layer, dest_layer)` pairs, source output added to dest
    /// pre-activation; always `source < dest` and equal out dims.
    pub bypasses: Vec<(usize, usize)>,
}

/// Box-Muller standard normal sample.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Builds a network from layer specs and bypass edges, He-initialized for
/// leaky-ReLU layers and Xavier-initialized elsewhere. Deterministic for a
/// fixed seed.
pub fn init_mlp(specs: &[LayerSpec], bypasses: &[(usize, usize)], seed: u64) -> Result<Mlp> {
    use rand::SeedableRng;
    if specs.is_empty() {
        return Err(Error::ShapeMismatch("network needs at least one layer".into()));
    }
    for (i, spec) in specs.iter().enumerate() {
        if spec.in_dim == 0 || spec.out_dim == 0 {
            return Err(Error::ShapeMismatch(format!("layer {i} has a zero dimension")));
        }
        if !(0.0..1.0).contains(&spec.dropout) {
            return Err(Error::InvalidArgument(format!(
                "layer {i} dropout {} outside [0, 1)",
                spec.dropout
            )));
        }
        if i > 0 && spec.in_dim != specs[i - 1].out_dim {
            return Err(Error::ShapeMismatch(format!(
                "layer {i} expects {} inputs but layer {} emits {}",
                spec.in_dim,
                i - 1,
                specs[i - 1].out_dim
            )));
        }
    }
    for &(s, d) in bypasses {
        if s >= d || d >= specs.len() {
            return Err(Error::ShapeMismatch(format!(
                "bypass ({s}, {d}) must run forward within {} layers",
                specs.len()
            )));
        }
        if specs[s].out_dim != specs[d].out_dim {
            return Err(Error::ShapeMismatch(format!(
                "bypass ({s}, {d}) connects widths {} and {}",
                specs[s].out_dim, specs[d].out_dim
            )));
        }
    }

    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let layers = specs
        .iter()
        .map(|spec| {
            let std = match spec.activation {
                Activation::LeakyRelu => (2.0 / spec.in_dim as f64).sqrt(),
                _ => (1.0 / spec.in_dim as f64).sqrt(),
            };
            let weights = Array2::from_shape_fn((spec.out_dim, spec.in_dim), |_| {
                std * standard_normal(&mut rng)
            });
            DenseLayer {
                weights,
                bias: Array1::zeros(spec.out_dim),
                batch_norm: spec.batch_norm.then(|| BatchNorm::identity(spec.out_dim)),
                activation: spec.activation,
                dropout: spec.dropout,
            }
        })
        .collect();
    Ok(Mlp { layers, bypasses: bypasses.to_vec() })
}

/// All possible forward bypass pairs among layers of equal output width,
/// restricted to widths that occur more than once below the output layer.
pub fn matched_width_bypasses(specs: &[LayerSpec]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for s in 0..specs.len() {
        for d in s + 1..specs.len() {
            if specs[s].out_dim == specs[d].out_dim {
                edges.push((s, d));
            }
        }
    }
    edges
}

struct LayerCache {
    /// Input to the affine transform.
    input: Array2<f64>,
    /// Normalized activations and inverse std, present when the layer has BN.
    x_hat: Option<Array2<f64>>,
    inv_std: Option<Array1<f64>>,
    pre_act: Array2<f64>,
    post_act: Array2<f64>,
    dropout_mask: Option<Array2<f64>>,
    output: Array2<f64>,
}

/// Everything `backward` needs from a train-mode forward pass.
pub struct TrainCache {
    layers: Vec<LayerCache>,
}

/// Per-layer parameter gradients, shapes mirroring [`Mlp`].
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub bn_gain: Option<Array1<f64>>,
    pub bn_bias: Option<Array1<f64>>,
}

#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrads>,
}

fn check_finite(batch: &Array2<f64>) -> Result<()> {
    if batch.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("network input".into()));
    }
    Ok(())
}

impl Mlp {
    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Number of trainable parameters.
    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                l.weights.len()
                    + l.bias.len()
                    + l.batch_norm.as_ref().map_or(0, |bn| bn.gain.len() + bn.bias.len())
            })
            .sum()
    }

    fn check_input(&self, batch: &Array2<f64>) -> Result<()> {
        if batch.ncols() != self.in_dim() {
            return Err(Error::ShapeMismatch(format!(
                "batch width {} does not match input dim {}",
                batch.ncols(),
                self.in_dim()
            )));
        }
        check_finite(batch)
    }

    /// Deterministic inference pass: running batch-norm statistics, no
    /// dropout, no state mutation.
    pub fn forward_eval(&self, batch: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(batch)?;
        let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { batch } else { &outputs[i - 1] };
            let mut pre = input.dot(&layer.weights.t());
            pre += &layer.bias;
            if let Some(bn) = &layer.batch_norm {
                for (j, mut col) in pre.columns_mut().into_iter().enumerate() {
                    let mean = bn.running_mean[j];
                    let inv = 1.0 / (bn.running_var[j] + BN_EPS).sqrt();
                    let gain = bn.gain[j];
                    let bias = bn.bias[j];
                    col.mapv_inplace(|v| (v - mean) * inv * gain + bias);
                }
            }
            for &(s, d) in &self.bypasses {
                if d == i {
                    pre += &outputs[s];
                }
            }
            pre.mapv_inplace(|v| layer.activation.apply(v));
            outputs.push(pre);
        }
        Ok(outputs.pop().unwrap())
    }

    /// Training pass: batch statistics for batch norm (running statistics are
    /// updated with momentum 0.99), inverted dropout driven by `rng`.
    pub fn forward_train(
        &mut self,
        batch: &Array2<f64>,
        rng: &mut impl Rng,
    ) -> Result<(Array2<f64>, TrainCache)> {
        self.check_input(batch)?;
        let b = batch.nrows();
        if b == 0 {
            return Err(Error::ShapeMismatch("empty batch".into()));
        }
        let mut caches: Vec<LayerCache> = Vec::with_capacity(self.layers.len());
        for i in 0..self.layers.len() {
            let input = if i == 0 { batch.clone() } else { caches[i - 1].output.clone() };
            let layer = &mut self.layers[i];
            let mut pre = input.dot(&layer.weights.t());
            pre += &layer.bias;

            let (x_hat, inv_std) = if let Some(bn) = &mut layer.batch_norm {
                let mean = pre.mean_axis(Axis(0)).unwrap();
                let mut var = Array1::zeros(pre.ncols());
                for (j, col) in pre.columns().into_iter().enumerate() {
                    let m = mean[j];
                    var[j] = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / b as f64;
                }
                let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                let mut x_hat = pre.clone();
                for (j, mut col) in x_hat.columns_mut().into_iter().enumerate() {
                    let m = mean[j];
                    let inv = inv_std[j];
                    col.mapv_inplace(|v| (v - m) * inv);
                }
                pre = &x_hat * &bn.gain + &bn.bias;
                bn.running_mean =
                    &bn.running_mean * BN_MOMENTUM + &(mean.mapv(|m| m * (1.0 - BN_MOMENTUM)));
                bn.running_var = (&bn.running_var * BN_MOMENTUM
                    + &(var.mapv(|v| v * (1.0 - BN_MOMENTUM))))
                    .mapv(|v| v.max(BN_EPS));
                (Some(x_hat), Some(inv_std))
            } else {
                (None, None)
            };

            for &(s, d) in &self.bypasses {
                if d == i {
                    pre += &caches[s].output;
                }
            }
            let pre_act = pre;
            let post_act = pre_act.mapv(|v| layer.activation.apply(v));
            let (output, dropout_mask) = if layer.dropout > 0.0 {
                let keep = 1.0 - layer.dropout;
                let mask = Array2::from_shape_fn(post_act.dim(), |_| {
                    if rng.gen::<f64>() < layer.dropout {
                        0.0
                    } else {
                        1.0 / keep
                    }
                });
                (&post_act * &mask, Some(mask))
            } else {
                (post_act.clone(), None)
            };
            caches.push(LayerCache {
                input,
                x_hat,
                inv_std,
                pre_act,
                post_act,
                dropout_mask,
                output,
            });
        }
        let out = caches.last().unwrap().output.clone();
        Ok((out, TrainCache { layers: caches }))
    }

    /// Exact gradients of the cached train-mode computation with respect to
    /// every trainable parameter.
    pub fn backward(&self, cache: &TrainCache, output_grad: &Array2<f64>) -> Result<MlpGrads> {
        let num_layers = self.layers.len();
        if cache.layers.len() != num_layers {
            return Err(Error::ShapeMismatch("cache does not match network depth".into()));
        }
        let last = &cache.layers[num_layers - 1];
        if output_grad.dim() != last.output.dim() {
            return Err(Error::ShapeMismatch(format!(
                "output grad {:?} does not match output {:?}",
                output_grad.dim(),
                last.output.dim()
            )));
        }
        let b = output_grad.nrows() as f64;

        let mut d_outputs: Vec<Array2<f64>> = cache
            .layers
            .iter()
            .map(|c| Array2::zeros(c.output.dim()))
            .collect();
        d_outputs[num_layers - 1] += output_grad;

        let mut grads: Vec<Option<LayerGrads>> = (0..num_layers).map(|_| None).collect();
        for i in (0..num_layers).rev() {
            let layer = &self.layers[i];
            let lc = &cache.layers[i];
            let d_output = std::mem::replace(&mut d_outputs[i], Array2::zeros((0, 0)));
            let d_post = match &lc.dropout_mask {
                Some(mask) => &d_output * mask,
                None => d_output,
            };
            let mut d_pre = d_post;
            ndarray::Zip::from(&mut d_pre)
                .and(&lc.pre_act)
                .and(&lc.post_act)
                .for_each(|g, &x, &y| *g *= layer.activation.derivative(x, y));

            for &(s, d) in &self.bypasses {
                if d == i {
                    d_outputs[s] += &d_pre;
                }
            }

            let (d_affine, bn_gain, bn_bias) = if let Some(bn) = &layer.batch_norm {
                let x_hat = lc.x_hat.as_ref().unwrap();
                let inv_std = lc.inv_std.as_ref().unwrap();
                let d_gain = (&d_pre * x_hat).sum_axis(Axis(0));
                let d_bias = d_pre.sum_axis(Axis(0));
                let d_xhat = &d_pre * &bn.gain;
                let mean_dxhat = d_xhat.mean_axis(Axis(0)).unwrap();
                let mean_dxhat_xhat = (&d_xhat * x_hat).sum_axis(Axis(0)) / b;
                let mut d_affine = d_xhat;
                for (j, mut col) in d_affine.columns_mut().into_iter().enumerate() {
                    let inv = inv_std[j];
                    let md = mean_dxhat[j];
                    let mdx = mean_dxhat_xhat[j];
                    let x_col = x_hat.column(j);
                    for (g, &xh) in col.iter_mut().zip(x_col.iter()) {
                        *g = inv * (*g - md - xh * mdx);
                    }
                }
                (d_affine, Some(d_gain), Some(d_bias))
            } else {
                (d_pre, None, None)
            };

            let d_weights = d_affine.t().dot(&lc.input);
            let d_bias_layer = d_affine.sum_axis(Axis(0));
            if i > 0 {
                let back = d_affine.dot(&layer.weights);
                d_outputs[i - 1] += &back;
            }
            grads[i] = Some(LayerGrads {
                weights: d_weights,
                bias: d_bias_layer,
                bn_gain,
                bn_bias,
            });
        }
        Ok(MlpGrads { layers: grads.into_iter().map(Option::unwrap).collect() })
    }

    /// Perturbs one parameter by `delta`; groups and indices line up with
    /// [`MlpGrads`]. Intended for finite-difference gradient checks.
    pub fn nudge_param(&mut self, group: usize, idx: usize, delta: f64) {
        self.param_slices_mut()[group][idx] += delta;
    }

    /// Flat views over every trainable tensor, in a fixed order.
    pub(crate) fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.weights.as_slice_mut().unwrap());
            out.push(layer.bias.as_slice_mut().unwrap());
            if let Some(bn) = &mut layer.batch_norm {
                out.push(bn.gain.as_slice_mut().unwrap());
                out.push(bn.bias.as_slice_mut().unwrap());
            }
        }
        out
    }
}

impl MlpGrads {
    /// Number of parameter groups (weights, bias and BN gain/bias per layer),
    /// in the same fixed order as [`Mlp::nudge_param`].
    pub fn num_groups(&self) -> usize {
        self.grad_slices().len()
    }

    pub fn group_len(&self, group: usize) -> usize {
        self.grad_slices()[group].len()
    }

    pub fn group_value(&self, group: usize, idx: usize) -> f64 {
        self.grad_slices()[group][idx]
    }

    pub(crate) fn grad_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.push(layer.weights.as_slice().unwrap());
            out.push(layer.bias.as_slice().unwrap());
            if let Some(g) = &layer.bn_gain {
                out.push(g.as_slice().unwrap());
            }
            if let Some(b) = &layer.bn_bias {
                out.push(b.as_slice().unwrap());
            }
        }
        out
    }
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub params: AdamParams,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(mlp: &Mlp, params: AdamParams) -> Self {
        let mut sizes = Vec::new();
        for layer in &mlp.layers {
            sizes.push(layer.weights.len());
            sizes.push(layer.bias.len());
            if let Some(bn) = &layer.batch_norm {
                sizes.push(bn.gain.len());
                sizes.push(bn.bias.len());
            }
        }
        AdamState {
            params,
            step: 0,
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction.
pub fn adam_step(mlp: &mut Mlp, grads: &MlpGrads, state: &mut AdamState) -> Result<()> {
    let grad_slices = grads.grad_slices();
    let mut param_slices = mlp.param_slices_mut();
    if grad_slices.len() != state.m.len() || param_slices.len() != state.m.len() {
        return Err(Error::ShapeMismatch("optimizer state does not match network".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let p = state.params;
    let bc1 = 1.0 - p.beta1.powi(t);
    let bc2 = 1.0 - p.beta2.powi(t);
    for ((params, grad), (m, v)) in param_slices
        .iter_mut()
        .zip(&grad_slices)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        if params.len() != grad.len() {
            return Err(Error::ShapeMismatch("gradient shape does not match parameters".into()));
        }
        for i in 0..params.len() {
            let g = grad[i];
            m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * g;
            v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            params[i] -= p.lr * m_hat / (v_hat.sqrt() + p.eps);
        }
    }
    Ok(())
}
