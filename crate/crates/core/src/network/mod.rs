//! Pairwise co-membership network.
//!
//! Each feature vector goes through a shared embedding `d -> 64 -> 64`
//! (ReLU between the two affine layers). A pair is represented by the sum of
//! its two embeddings, which a head `64 -> 256 -> 1` (ReLU, then sigmoid)
//! turns into the probability that both series share a cluster. Summation
//! makes the output exactly symmetric in the pair.
//!
//! All parameters live in one flat buffer so the optimizer, finite-difference
//! checks and the model file can treat them uniformly.

mod adam;
mod affinity;
mod model_file;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use affinity::{affinity_matrix, AffinityMatrix};
pub use model_file::{load_model, save_model, AffinityModel, MODEL_MAGIC, MODEL_VERSION};
pub use train::{sample_pairs, train, train_from, TrainConfig, TrainOutcome};

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EMBED_WIDTH: usize = 64;
pub const HEAD_WIDTH: usize = 256;
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkDims {
    pub input: usize,
    pub embed_hidden: usize,
    pub embed_out: usize,
    pub head_hidden: usize,
}

impl NetworkDims {
    pub fn new(input: usize) -> Self {
        Self {
            input,
            embed_hidden: EMBED_WIDTH,
            embed_out: EMBED_WIDTH,
            head_hidden: HEAD_WIDTH,
        }
    }

    fn layer_shapes(&self) -> [(usize, usize); 4] {
        [
            (self.embed_hidden, self.input),
            (self.embed_out, self.embed_hidden),
            (self.head_hidden, self.embed_out),
            (1, self.head_hidden),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(o, i)| o * i + o).sum()
    }

    /// Weight and bias ranges of layer `idx` in the flat buffer.
    fn ranges(&self, idx: usize) -> (Range<usize>, Range<usize>) {
        let shapes = self.layer_shapes();
        let start: usize = shapes[..idx].iter().map(|(o, i)| o * i + o).sum();
        let (o, i) = shapes[idx];
        (start..start + o * i, start + o * i..start + o * i + o)
    }
}

/// Network weights, or a gradient with the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    dims: NetworkDims,
    values: Vec<f64>,
}

struct Layer<'a> {
    w: &'a [f64],
    b: &'a [f64],
    inputs: usize,
}

impl Layer<'_> {
    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.b.iter().enumerate().map(|(o, b)| {
            let row = &self.w[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }
}

/// Intermediate values of one embedding pass.
#[derive(Debug, Clone)]
pub(crate) struct Embedding {
    pre_hidden: Vec<f64>,
    hidden: Vec<f64>,
    pub(crate) out: Vec<f64>,
}

/// Intermediate values of one head pass.
struct HeadPass {
    pre_hidden: Vec<f64>,
    hidden: Vec<f64>,
    logit: f64,
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy with `p` clamped to `[1e-7, 1 - 1e-7]`.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

impl NetworkParams {
    pub fn zeros(dims: NetworkDims) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.param_count()],
        }
    }

    /// Uniform weights on `[-sqrt(6 / fan_in), sqrt(6 / fan_in)]`, zero biases.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, rng: &mut R) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidParameter("feature dimension must be at least 1".into()));
        }
        let dims = NetworkDims::new(input_dim);
        let mut params = Self::zeros(dims);
        for (idx, (_, fan_in)) in dims.layer_shapes().into_iter().enumerate() {
            let bound = (6.0 / fan_in as f64).sqrt();
            let (w, _) = dims.ranges(idx);
            for v in &mut params.values[w] {
                *v = rng.random_range(-bound..bound);
            }
        }
        Ok(params)
    }

    pub fn from_values(dims: NetworkDims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.param_count() {
            return Err(Error::DimensionMismatch {
                expected: dims.param_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("network parameters must be finite".into()));
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> NetworkDims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Weight matrix (row-major, `out x in`) and bias of layer `idx`, where
    /// layers 0 and 1 form the embedding and 2 and 3 the head.
    pub fn layer(&self, idx: usize) -> (&[f64], &[f64]) {
        let (w, b) = self.dims.ranges(idx);
        (&self.values[w], &self.values[b])
    }

    fn layer_view(&self, idx: usize) -> Layer<'_> {
        let (w, b) = self.layer(idx);
        Layer {
            w,
            b,
            inputs: self.dims.layer_shapes()[idx].1,
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims.input {
            return Err(Error::DimensionMismatch {
                expected: self.dims.input,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn embed(&self, x: &[f64]) -> Embedding {
        let mut pre_hidden = Vec::with_capacity(self.dims.embed_hidden);
        self.layer_view(0).apply(x, &mut pre_hidden);
        let hidden = relu(&pre_hidden);
        let mut out = Vec::with_capacity(self.dims.embed_out);
        self.layer_view(1).apply(&hidden, &mut out);
        Embedding {
            pre_hidden,
            hidden,
            out,
        }
    }

    fn head(&self, pooled: &[f64]) -> HeadPass {
        let mut pre_hidden = Vec::with_capacity(self.dims.head_hidden);
        self.layer_view(2).apply(pooled, &mut pre_hidden);
        let hidden = relu(&pre_hidden);
        let (w, b) = self.layer(3);
        let logit = b[0] + w.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
        HeadPass {
            pre_hidden,
            hidden,
            logit,
        }
    }

    /// Probability from two precomputed embeddings; `first + second` order.
    pub(crate) fn pair_probability(&self, first: &Embedding, second: &Embedding) -> f64 {
        let pooled: Vec<f64> = first.out.iter().zip(&second.out).map(|(a, b)| a + b).collect();
        sigmoid(self.head(&pooled).logit)
    }

    /// Co-membership probability `sigmoid(head(embed(a) + embed(b)))`.
    pub fn forward_pair(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_input(a)?;
        self.check_input(b)?;
        Ok(self.pair_probability(&self.embed(a), &self.embed(b)))
    }

    /// Accumulates the head gradient for one pair, scaled by `weight`, and
    /// returns `(probability, d loss / d pooled embedding)`.
    fn head_backward(
        &self,
        first: &Embedding,
        second: &Embedding,
        target: f64,
        weight: f64,
        grads: &mut NetworkParams,
    ) -> (f64, Vec<f64>) {
        let pooled: Vec<f64> = first.out.iter().zip(&second.out).map(|(a, b)| a + b).collect();
        let pass = self.head(&pooled);
        let p = sigmoid(pass.logit);
        let g_logit = (p - target) * weight;

        let (w4, b4) = self.dims.ranges(3);
        grads.values[b4][0] += g_logit;
        let w_out = &self.values[w4.clone()];
        let d_pre: Vec<f64> = pass
            .pre_hidden
            .iter()
            .zip(w_out)
            .map(|(z, w)| if *z > 0.0 { g_logit * w } else { 0.0 })
            .collect();
        for (g, h) in grads.values[w4].iter_mut().zip(&pass.hidden) {
            *g += g_logit * h;
        }

        let (w3, b3) = self.dims.ranges(2);
        let width = self.dims.embed_out;
        let mut d_pooled = vec![0.0; width];
        let w_head = &self.values[w3.clone()];
        let g_w3 = &mut grads.values[w3];
        for (o, &d) in d_pre.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = o * width..(o + 1) * width;
            for ((g, s), (dp, w)) in g_w3[row.clone()]
                .iter_mut()
                .zip(&pooled)
                .zip(d_pooled.iter_mut().zip(&w_head[row]))
            {
                *g += d * s;
                *dp += d * w;
            }
        }
        for (g, d) in grads.values[b3].iter_mut().zip(&d_pre) {
            *g += d;
        }
        (p, d_pooled)
    }

    /// Accumulates the embedding gradient for input `x` given `d loss / d out`.
    fn embed_backward(&self, x: &[f64], emb: &Embedding, d_out: &[f64], grads: &mut NetworkParams) {
        let (w2, b2) = self.dims.ranges(1);
        let hidden_width = self.dims.embed_hidden;
        let mut d_hidden = vec![0.0; hidden_width];
        let w_second = &self.values[w2.clone()];
        {
            let g_w2 = &mut grads.values[w2];
            for (o, &d) in d_out.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = o * hidden_width..(o + 1) * hidden_width;
                for ((g, h), (dh, w)) in g_w2[row.clone()]
                    .iter_mut()
                    .zip(&emb.hidden)
                    .zip(d_hidden.iter_mut().zip(&w_second[row]))
                {
                    *g += d * h;
                    *dh += d * w;
                }
            }
        }
        for (g, d) in grads.values[b2].iter_mut().zip(d_out) {
            *g += d;
        }
        let (w1, b1) = self.dims.ranges(0);
        let input = self.dims.input;
        let g_w1 = &mut grads.values[w1];
        for (o, (&d, &z)) in d_hidden.iter().zip(&emb.pre_hidden).enumerate() {
            if z <= 0.0 || d == 0.0 {
                continue;
            }
            for (g, v) in g_w1[o * input..(o + 1) * input].iter_mut().zip(x) {
                *g += d * v;
            }
        }
        for ((g, &d), &z) in grads.values[b1].iter_mut().zip(&d_hidden).zip(&emb.pre_hidden) {
            if z > 0.0 {
                *g += d;
            }
        }
    }

    /// Exact gradient of `bce_loss(forward_pair(a, b), y)` with respect to
    /// every parameter, together with the loss.
    pub fn pair_gradient(&self, a: &[f64], b: &[f64], same_cluster: bool) -> Result<(f64, NetworkParams)> {
        self.check_input(a)?;
        self.check_input(b)?;
        let target = if same_cluster { 1.0 } else { 0.0 };
        let (ea, eb) = (self.embed(a), self.embed(b));
        let mut grads = NetworkParams::zeros(self.dims);
        let (p, d_pooled) = self.head_backward(&ea, &eb, target, 1.0, &mut grads);
        self.embed_backward(a, &ea, &d_pooled, &mut grads);
        self.embed_backward(b, &eb, &d_pooled, &mut grads);
        Ok((bce_loss(p, target), grads))
    }

    /// Mean loss and mean gradient over a set of pairs drawn from `points`.
    ///
    /// Each point is embedded once; the embedding gradient is accumulated per
    /// point and back-propagated once.
    pub fn batch_gradient<P: AsRef<[f64]>>(
        &self,
        points: &[P],
        pairs: &[(usize, usize, bool)],
    ) -> Result<(f64, NetworkParams)> {
        let mut grads = NetworkParams::zeros(self.dims);
        if pairs.is_empty() {
            return Ok((0.0, grads));
        }
        for p in points {
            self.check_input(p.as_ref())?;
        }
        let embeddings: Vec<Embedding> = points.iter().map(|p| self.embed(p.as_ref())).collect();
        let mut d_embed = vec![vec![0.0; self.dims.embed_out]; points.len()];
        let weight = 1.0 / pairs.len() as f64;
        let mut loss = 0.0;
        for &(i, j, same) in pairs {
            let target = if same { 1.0 } else { 0.0 };
            let (p, d_pooled) =
                self.head_backward(&embeddings[i], &embeddings[j], target, weight, &mut grads);
            loss += bce_loss(p, target);
            for (acc, d) in d_embed[i].iter_mut().zip(&d_pooled) {
                *acc += d;
            }
            for (acc, d) in d_embed[j].iter_mut().zip(&d_pooled) {
                *acc += d;
            }
        }
        for (idx, (emb, d)) in embeddings.iter().zip(&d_embed).enumerate() {
            if d.iter().any(|v| *v != 0.0) {
                self.embed_backward(points[idx].as_ref(), emb, d, &mut grads);
            }
        }
        Ok((loss * weight, grads))
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
