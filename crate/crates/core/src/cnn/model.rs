use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::atomic::{AtomicU64, Ordering};

use super::layers::{maxpool, maxpool_backward, swish, swish_grad, ConvShape};
use super::scalar::{matmul, Scalar};
use crate::error::{Error, Result};
use crate::features::FeatureNormalizer;

/// Layer sizes of the regressor. Convolutions come in pairs, each pair
/// followed by a 2x2 max pool; then fully connected hidden layers and a
/// linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnArchitecture {
    pub input_rows: usize,
    pub input_cols: usize,
    /// Odd square kernel size of every convolution.
    pub kernel: usize,
    /// Output channels of each convolution; even length.
    pub conv: Vec<usize>,
    pub hidden: Vec<usize>,
    pub output: usize,
    /// Drop probability after every hidden activation.
    pub dropout: f64,
}

impl CnnArchitecture {
    /// Four 13x13 convolutions (30, 60 | 90, 120), a 1000-unit hidden layer
    /// and `output` linear units on 64x128 images.
    pub fn standard(output: usize) -> Self {
        Self {
            input_rows: 64,
            input_cols: 128,
            kernel: 13,
            conv: vec![30, 60, 90, 120],
            hidden: vec![1000],
            output,
            dropout: 0.2,
        }
    }

    /// Same layout at toy scale: 8x16 inputs, 3x3 kernels.
    pub fn reduced(output: usize) -> Self {
        Self {
            input_rows: 8,
            input_cols: 16,
            kernel: 3,
            conv: vec![3, 4, 5, 6],
            hidden: vec![12],
            output,
            dropout: 0.2,
        }
    }

    /// Small enough to train on a laptop in seconds: 16x32 inputs, 5x5
    /// kernels.
    pub fn toy(output: usize) -> Self {
        Self {
            input_rows: 16,
            input_cols: 32,
            kernel: 5,
            conv: vec![4, 8, 8, 16],
            hidden: vec![32],
            output,
            dropout: 0.2,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_rows * self.input_cols
    }

    fn pools(&self) -> usize {
        self.conv.len() / 2
    }

    /// Flattened size entering the first dense layer.
    pub fn flat_len(&self) -> usize {
        let s = 1 << self.pools();
        let c = self.conv.last().copied().unwrap_or(1);
        c * (self.input_rows / s) * (self.input_cols / s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if self.input_rows == 0 || self.input_cols == 0 || self.output == 0 {
            return bad("network dimensions must be positive".into());
        }
        if !self.conv.len().is_multiple_of(2) {
            return bad(format!("convolutions come in pairs, got {}", self.conv.len()));
        }
        if !self.conv.is_empty() && self.kernel.is_multiple_of(2) {
            return bad(format!("kernel size {} must be odd", self.kernel));
        }
        let s = 1 << self.pools();
        if !self.input_rows.is_multiple_of(s) || !self.input_cols.is_multiple_of(s) {
            return bad(format!(
                "{}x{} input is not divisible by {s} for {} pooling stages",
                self.input_rows,
                self.input_cols,
                self.pools()
            ));
        }
        if self.conv.iter().chain(&self.hidden).any(|&n| n == 0) {
            return bad("layer widths must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LayerKind {
    Conv(ConvShape),
    Dense { inputs: usize, outputs: usize },
}

/// Weights and biases of one parametrized layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub(crate) kind: LayerKind,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    fn fan_in(&self) -> usize {
        match self.kind {
            LayerKind::Conv(s) => s.patch(),
            LayerKind::Dense { inputs, .. } => inputs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Param(usize),
    Swish,
    Dropout,
    Pool { c: usize, h: usize, w: usize },
}

fn plan(arch: &CnnArchitecture) -> (Vec<LayerKind>, Vec<Op>) {
    let mut kinds = Vec::new();
    let mut ops = Vec::new();
    let (mut c, mut h, mut w) = (1, arch.input_rows, arch.input_cols);
    let hidden_tail = |ops: &mut Vec<Op>| {
        ops.push(Op::Swish);
        if arch.dropout > 0.0 {
            ops.push(Op::Dropout);
        }
    };
    for pair in arch.conv.chunks(2) {
        for &cout in pair {
            ops.push(Op::Param(kinds.len()));
            kinds.push(LayerKind::Conv(ConvShape {
                cin: c,
                cout,
                k: arch.kernel,
                h,
                w,
            }));
            hidden_tail(&mut ops);
            c = cout;
        }
        ops.push(Op::Pool { c, h, w });
        h /= 2;
        w /= 2;
    }
    let mut n = c * h * w;
    for &width in &arch.hidden {
        ops.push(Op::Param(kinds.len()));
        kinds.push(LayerKind::Dense {
            inputs: n,
            outputs: width,
        });
        hidden_tail(&mut ops);
        n = width;
    }
    ops.push(Op::Param(kinds.len()));
    kinds.push(LayerKind::Dense {
        inputs: n,
        outputs: arch.output,
    });
    (kinds, ops)
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// A convolutional regressor together with the target normalizer used to
/// map its outputs back to feature units.
#[derive(Debug)]
pub struct Cnn<T> {
    arch: CnnArchitecture,
    pub(crate) layers: Vec<Layer<T>>,
    ops: Vec<Op>,
    pub target_norm: Option<FeatureNormalizer>,
    pub(crate) trained: bool,
    /// Identifies the current weights; changes whenever they do.
    version: u64,
}

impl<T: Scalar> Clone for Cnn<T> {
    fn clone(&self) -> Self {
        Self {
            arch: self.arch.clone(),
            layers: self.layers.clone(),
            ops: self.ops.clone(),
            target_norm: self.target_norm.clone(),
            trained: self.trained,
            version: self.version,
        }
    }
}

/// Weight gradients in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<(Vec<T>, Vec<T>)>,
}

/// Intermediate values of one train-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    version: u64,
    /// Input of every op, in op order.
    inputs: Vec<Vec<T>>,
    masks: Vec<Vec<T>>,
    argmax: Vec<Vec<u32>>,
    pub output: Vec<T>,
}

impl<T> ForwardCache<T> {
    /// Argmax input index of every max-pool output, one vector per pool.
    pub fn pool_routes(&self) -> &[Vec<u32>] {
        &self.argmax
    }
}

/// Per-sample gradient in the form the batch reducer wants: dense layers
/// keep their input and output delta so the batch weight gradient becomes
/// one matrix product.
pub(crate) enum LayerGrad<T> {
    Conv { weight: Vec<T>, bias: Vec<T> },
    Dense { input: Vec<T>, delta: Vec<T> },
}

impl<T: Scalar> Cnn<T> {
    /// He-uniform initialization (`U(-sqrt(6/fan_in), sqrt(6/fan_in))`),
    /// zero biases.
    pub fn new(arch: CnnArchitecture, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &mut m.layers {
            let lim = (6.0 / l.fan_in() as f64).sqrt();
            for w in &mut l.weight {
                *w = T::of(rng.random_range(-lim..lim));
            }
        }
        Ok(m)
    }

    pub fn zeros(arch: CnnArchitecture) -> Result<Self> {
        arch.validate()?;
        let (kinds, ops) = plan(&arch);
        let layers = kinds
            .into_iter()
            .map(|kind| {
                let (nw, nb) = match kind {
                    LayerKind::Conv(s) => (s.weights(), s.cout),
                    LayerKind::Dense { inputs, outputs } => (inputs * outputs, outputs),
                };
                Layer {
                    kind,
                    weight: vec![T::zero(); nw],
                    bias: vec![T::zero(); nb],
                }
            })
            .collect();
        Ok(Self {
            arch,
            layers,
            ops,
            target_norm: None,
            trained: false,
            version: fresh_id(),
        })
    }

    pub fn architecture(&self) -> &CnnArchitecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Mutable weights. Any forward cache taken before this call becomes
    /// stale.
    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        self.version = fresh_id();
        &mut self.layers
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn mark_trained(&mut self) {
        self.trained = true;
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn output_dim(&self) -> usize {
        self.arch.output
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.arch.input_len() {
            return Err(Error::InvalidInput(format!(
                "expected {}x{} = {} pixels, got {}",
                self.arch.input_rows,
                self.arch.input_cols,
                self.arch.input_len(),
                x.len()
            )));
        }
        Ok(())
    }

    fn apply_param(&self, idx: usize, x: &[T]) -> Vec<T> {
        let l = &self.layers[idx];
        match l.kind {
            LayerKind::Conv(s) => s.forward(&l.weight, &l.bias, x),
            LayerKind::Dense { inputs, outputs } => {
                let mut y = l.bias.clone();
                matmul(outputs, inputs, 1, &l.weight, false, x, false, T::one(), &mut y);
                y
            }
        }
    }

    /// Eval-mode forward: dropout disabled, deterministic.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for op in &self.ops {
            a = match *op {
                Op::Param(i) => self.apply_param(i, &a),
                Op::Swish => a.into_iter().map(swish).collect(),
                Op::Dropout => a,
                Op::Pool { c, h, w } => maxpool(&a, c, h, w).0,
            };
        }
        Ok(a)
    }

    /// Train-mode forward with inverted dropout (kept units scaled by
    /// `1/(1-p)`), recording what backward needs.
    pub fn forward_train<R: Rng>(&self, x: &[T], rng: &mut R) -> Result<ForwardCache<T>> {
        self.check_input(x)?;
        let p = self.arch.dropout;
        let keep = T::of(1.0 / (1.0 - p));
        let mut cache = ForwardCache {
            version: self.version,
            inputs: Vec::with_capacity(self.ops.len()),
            masks: Vec::new(),
            argmax: Vec::new(),
            output: Vec::new(),
        };
        let mut a = x.to_vec();
        for op in &self.ops {
            let next = match *op {
                Op::Param(i) => self.apply_param(i, &a),
                Op::Swish => a.iter().map(|&v| swish(v)).collect(),
                Op::Dropout => {
                    let mask: Vec<T> = (0..a.len())
                        .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
                        .collect();
                    let y = a.iter().zip(&mask).map(|(&v, &m)| v * m).collect();
                    cache.masks.push(mask);
                    y
                }
                Op::Pool { c, h, w } => {
                    let (y, arg) = maxpool(&a, c, h, w);
                    cache.argmax.push(arg);
                    y
                }
            };
            cache.inputs.push(std::mem::replace(&mut a, next));
        }
        cache.output = a;
        Ok(cache)
    }

    pub(crate) fn backward_sample(&self, cache: &ForwardCache<T>, target: &[T]) -> Result<Vec<LayerGrad<T>>> {
        if cache.version != self.version || cache.inputs.len() != self.ops.len() {
            return Err(Error::InvalidCache);
        }
        if target.len() != self.arch.output {
            return Err(Error::InvalidInput(format!(
                "target has {} values, network outputs {}",
                target.len(),
                self.arch.output
            )));
        }
        // d/dy of mean((y - t)^2)
        let scale = T::of(2.0 / target.len() as f64);
        let mut g: Vec<T> = cache
            .output
            .iter()
            .zip(target)
            .map(|(&y, &t)| scale * (y - t))
            .collect();
        let mut grads: Vec<Option<LayerGrad<T>>> = (0..self.layers.len()).map(|_| None).collect();
        let mut mask_i = cache.masks.len();
        let mut pool_i = cache.argmax.len();
        for (k, op) in self.ops.iter().enumerate().rev() {
            let x = &cache.inputs[k];
            g = match *op {
                Op::Param(i) => {
                    let l = &self.layers[i];
                    let first = k == 0;
                    match l.kind {
                        LayerKind::Conv(s) => {
                            let (weight, bias, dx) = s.backward(&l.weight, x, &g, !first);
                            grads[i] = Some(LayerGrad::Conv { weight, bias });
                            dx.unwrap_or_default()
                        }
                        LayerKind::Dense { inputs, outputs } => {
                            let mut dx = vec![T::zero(); inputs];
                            if !first {
                                matmul(inputs, outputs, 1, &l.weight, true, &g, false, T::zero(), &mut dx);
                            }
                            grads[i] = Some(LayerGrad::Dense {
                                input: x.clone(),
                                delta: g,
                            });
                            dx
                        }
                    }
                }
                Op::Swish => g.iter().zip(x).map(|(&d, &v)| d * swish_grad(v)).collect(),
                Op::Dropout => {
                    mask_i -= 1;
                    g.iter().zip(&cache.masks[mask_i]).map(|(&d, &m)| d * m).collect()
                }
                Op::Pool { .. } => {
                    pool_i -= 1;
                    maxpool_backward(&g, &cache.argmax[pool_i], x.len())
                }
            };
        }
        Ok(grads.into_iter().map(|g| g.expect("every layer visited")).collect())
    }

    /// Gradients of the sample MSE `mean((y - target)^2)` with respect to
    /// every weight and bias, for the input recorded in `cache`.
    pub fn backward(&self, cache: &ForwardCache<T>, target: &[T]) -> Result<Gradients<T>> {
        let per = self.backward_sample(cache, target)?;
        Ok(self.reduce(&[per]))
    }

    /// Sum of per-sample gradients, in sample order.
    pub(crate) fn reduce(&self, samples: &[Vec<LayerGrad<T>>]) -> Gradients<T> {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| match l.kind {
                LayerKind::Conv(_) => {
                    let mut w = vec![T::zero(); l.weight.len()];
                    let mut b = vec![T::zero(); l.bias.len()];
                    for s in samples {
                        if let LayerGrad::Conv { weight, bias } = &s[i] {
                            w.iter_mut().zip(weight).for_each(|(a, &v)| *a = *a + v);
                            b.iter_mut().zip(bias).for_each(|(a, &v)| *a = *a + v);
                        }
                    }
                    (w, b)
                }
                LayerKind::Dense { inputs, outputs } => {
                    let n = samples.len();
                    let mut xs = Vec::with_capacity(n * inputs);
                    let mut ds = Vec::with_capacity(n * outputs);
                    for s in samples {
                        if let LayerGrad::Dense { input, delta } = &s[i] {
                            xs.extend_from_slice(input);
                            ds.extend_from_slice(delta);
                        }
                    }
                    // dW (out x in) = D^T (out x n) X (n x in)
                    let mut w = vec![T::zero(); outputs * inputs];
                    matmul(outputs, n, inputs, &ds, true, &xs, false, T::zero(), &mut w);
                    let mut b = vec![T::zero(); outputs];
                    for d in ds.chunks_exact(outputs) {
                        b.iter_mut().zip(d).for_each(|(a, &v)| *a = *a + v);
                    }
                    (w, b)
                }
            })
            .collect();
        Gradients { layers }
    }

    /// `w -= step * g` for every tensor.
    pub fn apply_gradients(&mut self, grads: &Gradients<T>, step: T) {
        for (l, (gw, gb)) in self.layers_mut().iter_mut().zip(&grads.layers) {
            l.weight.iter_mut().zip(gw).for_each(|(w, &g)| *w = *w - step * g);
            l.bias.iter_mut().zip(gb).for_each(|(b, &g)| *b = *b - step * g);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Copies the weights of `other`, which must share the architecture.
    pub(crate) fn load_weights(&mut self, other: &Cnn<T>) {
        debug_assert_eq!(self.arch, other.arch);
        self.layers.clone_from(&other.layers);
        self.version = fresh_id();
    }
}

/// Mean squared error over the output dimensions.
pub fn mse<T: Scalar>(y: &[T], t: &[T]) -> f64 {
    y.iter().zip(t).map(|(&a, &b)| (a.f64() - b.f64()).powi(2)).sum::<f64>() / y.len().max(1) as f64
}
