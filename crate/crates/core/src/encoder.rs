//! Transformer encoder with clipped relative-position attention, mean pooling
//! and an MLP projection head. Math runs in f64 with hand-written backprop;
//! parameters are kept representable as f32 so checkpoints reload exactly.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LN_EPS: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncoderError {
    #[error("sequence of length {len} exceeds maximum {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("token id {id} is outside a vocabulary of {vocab}")]
    IdOutOfRange { id: u32, vocab: usize },
    #[error("cannot embed an empty sequence")]
    EmptySequence,
    #[error("invalid encoder config: {0}")]
    BadConfig(String),
    #[error("parameter shapes differ")]
    ShapeMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub ffn_dim: usize,
    pub max_relative_distance: usize,
    pub vocab_size: usize,
    pub mlp_dims: Vec<usize>,
    pub max_sequence_length: usize,
    /// Adds the relative value table to attention outputs.
    pub relative_values: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::new(0, 64, 4, 2)
    }
}

impl EncoderConfig {
    pub fn new(vocab_size: usize, d_model: usize, n_heads: usize, n_layers: usize) -> Self {
        EncoderConfig {
            n_layers,
            d_model,
            n_heads,
            ffn_dim: 4 * d_model,
            max_relative_distance: 32,
            vocab_size,
            mlp_dims: vec![d_model, 256],
            max_sequence_length: 512,
            relative_values: true,
        }
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads.max(1)
    }

    pub fn output_dim(&self) -> usize {
        *self.mlp_dims.last().unwrap_or(&self.d_model)
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        let bad = |m: &str| Err(EncoderError::BadConfig(m.to_string()));
        if self.n_layers == 0 {
            return bad("n_layers must be at least 1");
        }
        if self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return bad("d_model must be a multiple of n_heads");
        }
        if self.mlp_dims.is_empty() || self.mlp_dims.contains(&0) {
            return bad("mlp_dims needs at least one positive width");
        }
        if self.max_relative_distance == 0 {
            return bad("max_relative_distance must be at least 1");
        }
        if self.vocab_size == 0 || self.ffn_dim == 0 || self.max_sequence_length == 0 {
            return bad("vocab_size, ffn_dim and max_sequence_length must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
    pub rel_k: Array2<f64>,
    pub rel_v: Array2<f64>,
    pub ln1_g: Array1<f64>,
    pub ln1_b: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub ln2_g: Array1<f64>,
    pub ln2_b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub embedding: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub head: Vec<Dense>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeEmbedding {
    pub source_id: String,
    pub vector: Vec<f64>,
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-bound..bound))
}

impl EncoderParams {
    /// Uniform init scaled by fan-in; layer norms start as identity.
    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self, EncoderError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.d_model;
        let dh = config.d_head();
        let f = config.ffn_dim;
        let r = 2 * config.max_relative_distance + 1;
        let fan = |n: usize| 1.0 / (n as f64).sqrt();
        let embedding = uniform(&mut rng, config.vocab_size, d, 1.0);
        let layers = (0..config.n_layers)
            .map(|_| LayerParams {
                wq: uniform(&mut rng, d, d, fan(d)),
                wk: uniform(&mut rng, d, d, fan(d)),
                wv: uniform(&mut rng, d, d, fan(d)),
                wo: uniform(&mut rng, d, d, fan(d)),
                rel_k: uniform(&mut rng, r, dh, fan(dh)),
                rel_v: uniform(&mut rng, r, dh, fan(dh)),
                ln1_g: Array1::ones(d),
                ln1_b: Array1::zeros(d),
                w1: uniform(&mut rng, d, f, fan(d)),
                b1: Array1::zeros(f),
                w2: uniform(&mut rng, f, d, fan(f)),
                b2: Array1::zeros(d),
                ln2_g: Array1::ones(d),
                ln2_b: Array1::zeros(d),
            })
            .collect();
        let mut head = Vec::new();
        let mut prev = d;
        for &out in &config.mlp_dims {
            head.push(Dense {
                w: uniform(&mut rng, prev, out, fan(prev)),
                b: Array1::zeros(out),
            });
            prev = out;
        }
        let mut p = EncoderParams {
            config,
            embedding,
            layers,
            head,
        };
        p.round_to_f32();
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// Named tensors in a fixed order, each as (name, shape, row-major data).
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> = Vec::new();
        let m = |a: &Array2<f64>| a.shape().to_vec();
        out.push((
            "embedding".into(),
            m(&self.embedding),
            self.embedding.as_slice().unwrap(),
        ));
        for (i, l) in self.layers.iter().enumerate() {
            for (n, a) in [
                ("wq", &l.wq),
                ("wk", &l.wk),
                ("wv", &l.wv),
                ("wo", &l.wo),
                ("rel_k", &l.rel_k),
                ("rel_v", &l.rel_v),
            ] {
                out.push((format!("layers.{i}.{n}"), m(a), a.as_slice().unwrap()));
            }
            for (n, a) in [("ln1_g", &l.ln1_g), ("ln1_b", &l.ln1_b)] {
                out.push((format!("layers.{i}.{n}"), vec![a.len()], a.as_slice().unwrap()));
            }
            out.push((format!("layers.{i}.w1"), m(&l.w1), l.w1.as_slice().unwrap()));
            out.push((format!("layers.{i}.b1"), vec![l.b1.len()], l.b1.as_slice().unwrap()));
            out.push((format!("layers.{i}.w2"), m(&l.w2), l.w2.as_slice().unwrap()));
            for (n, a) in [("b2", &l.b2), ("ln2_g", &l.ln2_g), ("ln2_b", &l.ln2_b)] {
                out.push((format!("layers.{i}.{n}"), vec![a.len()], a.as_slice().unwrap()));
            }
        }
        for (i, h) in self.head.iter().enumerate() {
            out.push((format!("head.{i}.w"), m(&h.w), h.w.as_slice().unwrap()));
            out.push((format!("head.{i}.b"), vec![h.b.len()], h.b.as_slice().unwrap()));
        }
        out
    }

    /// Same order as [`tensors`](Self::tensors).
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.embedding.as_slice_mut().unwrap()];
        for l in &mut self.layers {
            out.extend([
                l.wq.as_slice_mut().unwrap(),
                l.wk.as_slice_mut().unwrap(),
                l.wv.as_slice_mut().unwrap(),
                l.wo.as_slice_mut().unwrap(),
                l.rel_k.as_slice_mut().unwrap(),
                l.rel_v.as_slice_mut().unwrap(),
                l.ln1_g.as_slice_mut().unwrap(),
                l.ln1_b.as_slice_mut().unwrap(),
                l.w1.as_slice_mut().unwrap(),
                l.b1.as_slice_mut().unwrap(),
                l.w2.as_slice_mut().unwrap(),
                l.b2.as_slice_mut().unwrap(),
                l.ln2_g.as_slice_mut().unwrap(),
                l.ln2_b.as_slice_mut().unwrap(),
            ]);
        }
        for h in &mut self.head {
            out.extend([h.w.as_slice_mut().unwrap(), h.b.as_slice_mut().unwrap()]);
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.2.len()).sum()
    }

    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x = *x as f32 as f64);
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.0 == y.0 && x.1 == y.1)
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) -> Result<(), EncoderError> {
        if !self.same_shape(other) {
            return Err(EncoderError::ShapeMismatch);
        }
        for (dst, (_, _, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += scale * s);
        }
        Ok(())
    }

    fn check_ids(&self, ids: &[u32]) -> Result<(), EncoderError> {
        let cfg = &self.config;
        if ids.is_empty() {
            return Err(EncoderError::EmptySequence);
        }
        if ids.len() > cfg.max_sequence_length {
            return Err(EncoderError::SequenceTooLong {
                len: ids.len(),
                max: cfg.max_sequence_length,
            });
        }
        if let Some(&id) = ids.iter().find(|&&id| id as usize >= cfg.vocab_size) {
            return Err(EncoderError::IdOutOfRange {
                id,
                vocab: cfg.vocab_size,
            });
        }
        Ok(())
    }

    /// Hidden states `L x d_model` after all layers.
    pub fn encode(&self, ids: &[u32]) -> Result<Array2<f64>, EncoderError> {
        Ok(self.forward(ids)?.hidden)
    }

    /// MLP head: ReLU between layers, none after the last.
    pub fn project(&self, pooled: ArrayView1<f64>) -> Array1<f64> {
        self.project_trace(pooled).0
    }

    fn project_trace(&self, pooled: ArrayView1<f64>) -> (Array1<f64>, Vec<Array1<f64>>) {
        let mut h = pooled.to_owned();
        let mut pre = Vec::with_capacity(self.head.len());
        for (i, layer) in self.head.iter().enumerate() {
            let a = h.dot(&layer.w) + &layer.b;
            pre.push(a.clone());
            h = if i + 1 < self.head.len() { a.mapv(relu) } else { a };
        }
        (h, pre)
    }

    /// Unit-norm embedding of a subword id sequence.
    pub fn embed(&self, ids: &[u32]) -> Result<Array1<f64>, EncoderError> {
        Ok(self.forward(ids)?.unit)
    }

    pub fn embed_snippet(&self, source_id: &str, ids: &[u32]) -> Result<CodeEmbedding, EncoderError> {
        Ok(CodeEmbedding {
            source_id: source_id.to_string(),
            vector: self.embed(ids)?.to_vec(),
        })
    }

    pub fn forward(&self, ids: &[u32]) -> Result<Trace, EncoderError> {
        self.check_ids(ids)?;
        let d = self.config.d_model;
        let mut x = Array2::zeros((ids.len(), d));
        for (row, &id) in x.rows_mut().into_iter().zip(ids) {
            let mut row = row;
            row.assign(&self.embedding.row(id as usize));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (out, cache) = self.layer_forward(l, x);
            layers.push(cache);
            x = out;
        }
        let pooled = x.mean_axis(Axis(0)).expect("non-empty");
        let (z, head_pre) = self.project_trace(pooled.view());
        let norm = z.dot(&z).sqrt().max(f64::MIN_POSITIVE);
        let unit = &z / norm;
        Ok(Trace {
            ids: ids.to_vec(),
            layers,
            hidden: x,
            pooled,
            head_pre,
            z,
            norm,
            unit,
        })
    }

    fn layer_forward(&self, l: &LayerParams, x: Array2<f64>) -> (Array2<f64>, LayerCache) {
        let cfg = &self.config;
        let (n, dh, k) = (x.nrows(), cfg.d_head(), cfg.max_relative_distance);
        let q = x.dot(&l.wq);
        let kk = x.dot(&l.wk);
        let v = x.dot(&l.wv);
        let mut z = Array2::zeros((n, cfg.d_model));
        let mut attn = Vec::with_capacity(cfg.n_heads);
        let mut rel_mass = Vec::with_capacity(cfg.n_heads);
        for h in 0..cfg.n_heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let e = attention_logits(q.slice(cols), kk.slice(cols), l.rel_k.view(), k);
            let a = softmax_rows(&e);
            let mut zh = a.dot(&v.slice(cols));
            let b = relative_mass(&a, k);
            if cfg.relative_values {
                zh += &b.dot(&l.rel_v);
            }
            z.slice_mut(cols).assign(&zh);
            attn.push(a);
            rel_mass.push(b);
        }
        let o = z.dot(&l.wo);
        let (y1, ln1) = ln_forward(&(&x + &o), &l.ln1_g, &l.ln1_b);
        let a1 = y1.dot(&l.w1) + &l.b1;
        let h1 = a1.mapv(relu);
        let f = h1.dot(&l.w2) + &l.b2;
        let (out, ln2) = ln_forward(&(&y1 + &f), &l.ln2_g, &l.ln2_b);
        let cache = LayerCache {
            x,
            q,
            k: kk,
            v,
            attn,
            rel_mass,
            z,
            ln1,
            y1,
            a1,
            h1,
            ln2,
        };
        (out, cache)
    }

    /// Accumulates into `grads` the gradient of a loss whose derivative with
    /// respect to the unit embedding is `d_unit`.
    pub fn backward(&self, trace: &Trace, d_unit: ArrayView1<f64>, grads: &mut EncoderParams) {
        let u = &trace.unit;
        let dz = (&d_unit - &(u * u.dot(&d_unit))) / trace.norm;
        let mut dh = dz;
        for i in (0..self.head.len()).rev() {
            if i + 1 < self.head.len() {
                let pre = &trace.head_pre[i];
                dh.zip_mut_with(pre, |g, &a| {
                    if a <= 0.0 {
                        *g = 0.0
                    }
                });
            }
            let input = if i == 0 {
                trace.pooled.clone()
            } else {
                trace.head_pre[i - 1].mapv(relu)
            };
            let g = &mut grads.head[i];
            outer_acc(&mut g.w, input.view(), dh.view());
            g.b += &dh;
            dh = self.head[i].w.dot(&dh);
        }
        let n = trace.hidden.nrows();
        let mut dx = Array2::from_shape_fn((n, self.config.d_model), |(_, j)| dh[j] / n as f64);
        for (li, cache) in trace.layers.iter().enumerate().rev() {
            dx = self.layer_backward(&self.layers[li], cache, dx, &mut grads.layers[li]);
        }
        for (row, &id) in dx.rows().into_iter().zip(&trace.ids) {
            let mut g = grads.embedding.row_mut(id as usize);
            g += &row;
        }
    }

    fn layer_backward(&self, l: &LayerParams, c: &LayerCache, dout: Array2<f64>, g: &mut LayerParams) -> Array2<f64> {
        let cfg = &self.config;
        let (dh, k) = (cfg.d_head(), cfg.max_relative_distance);
        let scale = 1.0 / (dh as f64).sqrt();

        let d_sum2 = ln_backward(&dout, &c.ln2, &l.ln2_g, &mut g.ln2_g, &mut g.ln2_b);
        // y1 feeds both the residual and the FFN.
        let mut dy1 = d_sum2.clone();
        general_mat_mul(1.0, &c.h1.t(), &d_sum2, 1.0, &mut g.w2);
        g.b2 += &d_sum2.sum_axis(Axis(0));
        let mut da1 = d_sum2.dot(&l.w2.t());
        da1.zip_mut_with(&c.a1, |g, &a| {
            if a <= 0.0 {
                *g = 0.0
            }
        });
        general_mat_mul(1.0, &c.y1.t(), &da1, 1.0, &mut g.w1);
        g.b1 += &da1.sum_axis(Axis(0));
        dy1 += &da1.dot(&l.w1.t());

        let d_sum1 = ln_backward(&dy1, &c.ln1, &l.ln1_g, &mut g.ln1_g, &mut g.ln1_b);
        let mut dx = d_sum1.clone();
        general_mat_mul(1.0, &c.z.t(), &d_sum1, 1.0, &mut g.wo);
        let dzall = d_sum1.dot(&l.wo.t());

        let n = c.x.nrows();
        let mut dq = Array2::zeros((n, cfg.d_model));
        let mut dk = Array2::zeros((n, cfg.d_model));
        let mut dv = Array2::zeros((n, cfg.d_model));
        for h in 0..cfg.n_heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let a = &c.attn[h];
            let dzh = dzall.slice(cols);
            let (qh, kh, vh) = (c.q.slice(cols), c.k.slice(cols), c.v.slice(cols));
            dv.slice_mut(cols).assign(&a.t().dot(&dzh));
            let mut da = dzh.dot(&vh.t());
            if cfg.relative_values {
                general_mat_mul(1.0, &c.rel_mass[h].t(), &dzh, 1.0, &mut g.rel_v);
                let db = dzh.dot(&l.rel_v.t());
                for i in 0..n {
                    for j in 0..n {
                        da[[i, j]] += db[[i, rel_index(i, j, k)]];
                    }
                }
            }
            // Softmax backward, folded with the 1/sqrt(d_head) scale.
            let mut de = da;
            for i in 0..n {
                let dot: f64 = (0..n).map(|j| a[[i, j]] * de[[i, j]]).sum();
                for j in 0..n {
                    de[[i, j]] = a[[i, j]] * (de[[i, j]] - dot) * scale;
                }
            }
            let mut dp = Array2::zeros((n, 2 * k + 1));
            for i in 0..n {
                for j in 0..n {
                    dp[[i, rel_index(i, j, k)]] += de[[i, j]];
                }
            }
            let mut dqh = de.dot(&kh);
            dqh += &dp.dot(&l.rel_k);
            dq.slice_mut(cols).assign(&dqh);
            dk.slice_mut(cols).assign(&de.t().dot(&qh));
            general_mat_mul(1.0, &dp.t(), &qh, 1.0, &mut g.rel_k);
        }
        general_mat_mul(1.0, &c.x.t(), &dq, 1.0, &mut g.wq);
        general_mat_mul(1.0, &c.x.t(), &dk, 1.0, &mut g.wk);
        general_mat_mul(1.0, &c.x.t(), &dv, 1.0, &mut g.wv);
        dx += &dq.dot(&l.wq.t());
        dx += &dk.dot(&l.wk.t());
        dx += &dv.dot(&l.wv.t());
        dx
    }

    /// Per-head attention logits of one layer for input rows `x`.
    pub fn rel_attention_logits(
        &self,
        layer: usize,
        head: usize,
        x: ArrayView2<f64>,
    ) -> Result<Array2<f64>, EncoderError> {
        if x.nrows() > self.config.max_sequence_length {
            return Err(EncoderError::SequenceTooLong {
                len: x.nrows(),
                max: self.config.max_sequence_length,
            });
        }
        let l = &self.layers[layer];
        let dh = self.config.d_head();
        let cols = s![.., head * dh..(head + 1) * dh];
        let q = x.dot(&l.wq);
        let k = x.dot(&l.wk);
        Ok(attention_logits(
            q.slice(cols),
            k.slice(cols),
            l.rel_k.view(),
            self.config.max_relative_distance,
        ))
    }
}

/// Forward activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    ids: Vec<u32>,
    layers: Vec<LayerCache>,
    pub hidden: Array2<f64>,
    pub pooled: Array1<f64>,
    head_pre: Vec<Array1<f64>>,
    pub z: Array1<f64>,
    norm: f64,
    pub unit: Array1<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Vec<Array2<f64>>,
    rel_mass: Vec<Array2<f64>>,
    z: Array2<f64>,
    ln1: LnCache,
    y1: Array2<f64>,
    a1: Array2<f64>,
    h1: Array2<f64>,
    ln2: LnCache,
}

#[derive(Debug, Clone)]
struct LnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Row of the relative tables used for query `i` attending to key `j`.
pub fn rel_index(i: usize, j: usize, k: usize) -> usize {
    let k = k as isize;
    ((j as isize - i as isize).clamp(-k, k) + k) as usize
}

/// `e_ij = (q_i . k_j + q_i . a_clip(j-i)) / sqrt(d_head)`.
pub fn attention_logits(q: ArrayView2<f64>, kk: ArrayView2<f64>, rel_k: ArrayView2<f64>, k: usize) -> Array2<f64> {
    let n = q.nrows();
    let scale = 1.0 / (q.ncols() as f64).sqrt();
    let mut e = q.dot(&kk.t());
    let p = q.dot(&rel_k.t());
    for i in 0..n {
        for j in 0..n {
            e[[i, j]] = (e[[i, j]] + p[[i, rel_index(i, j, k)]]) * scale;
        }
    }
    e
}

fn softmax_rows(e: &Array2<f64>) -> Array2<f64> {
    let mut a = e.clone();
    for mut row in a.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - m).exp());
        let s = row.sum();
        row /= s;
    }
    a
}

/// Attention weight each query puts on each clipped offset.
fn relative_mass(a: &Array2<f64>, k: usize) -> Array2<f64> {
    let n = a.nrows();
    let mut b = Array2::zeros((n, 2 * k + 1));
    for i in 0..n {
        for j in 0..n {
            b[[i, rel_index(i, j, k)]] += a[[i, j]];
        }
    }
    b
}

fn ln_forward(x: &Array2<f64>, g: &Array1<f64>, b: &Array1<f64>) -> (Array2<f64>, LnCache) {
    let d = x.ncols() as f64;
    let mut xhat = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, s) in xhat.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mu = row.sum() / d;
        row -= mu;
        let var = row.dot(&row) / d;
        *s = 1.0 / (var + LN_EPS).sqrt();
        row *= *s;
    }
    let y = &xhat * g + b;
    (y, LnCache { xhat, inv_std })
}

fn ln_backward(
    dy: &Array2<f64>,
    c: &LnCache,
    g: &Array1<f64>,
    dg: &mut Array1<f64>,
    db: &mut Array1<f64>,
) -> Array2<f64> {
    *dg += &(dy * &c.xhat).sum_axis(Axis(0));
    *db += &dy.sum_axis(Axis(0));
    let d = dy.ncols() as f64;
    let mut dx = dy * g;
    for ((mut row, xhat), &s) in dx.rows_mut().into_iter().zip(c.xhat.rows()).zip(&c.inv_std) {
        let mean = row.sum() / d;
        let mean_x = row.dot(&xhat) / d;
        row.zip_mut_with(&xhat, |v, &xh| *v = s * (*v - mean - xh * mean_x));
    }
    dx
}

/// Layer norm without scale or offset, exposed for property tests.
pub fn layer_norm(x: &Array2<f64>) -> Array2<f64> {
    let d = x.ncols();
    ln_forward(x, &Array1::ones(d), &Array1::zeros(d)).0
}

fn outer_acc(w: &mut Array2<f64>, a: ArrayView1<f64>, b: ArrayView1<f64>) {
    for (i, &ai) in a.iter().enumerate() {
        let mut row = w.row_mut(i);
        row.scaled_add(ai, &b);
    }
}
