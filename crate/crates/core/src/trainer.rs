//! Momentum-contrastive training: a gradient-trained query encoder, a key
//! encoder that trails it as a moving average, a FIFO queue of old keys as
//! extra negatives, and InfoNCE. The supervised variants mix in a clone or
//! category loss through a trainable weight squashed into (0, 1).

use std::collections::VecDeque;

use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{EncoderConfig, EncoderError, EncoderParams};
use crate::eval::{ClassifierHead, EvalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("batch of {0} is too small; need at least 2")]
    BatchTooSmall(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub temperature: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub queue_capacity: usize,
    /// Initial mixing weight of the contrastive term; the per-task default
    /// applies when unset.
    pub alpha_init: Option<f64>,
    pub anchor_coefficient: f64,
    pub seed: u64,
    /// Sharpness of the clone-pair logistic, `s * (cos - threshold)`.
    pub clone_logit_scale: f64,
    pub clone_threshold: f64,
    pub collapse_floor: f64,
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            temperature: 0.07,
            batch_size: 32,
            epochs: 10,
            learning_rate: 1e-4,
            momentum: 0.999,
            queue_capacity: 4096,
            alpha_init: None,
            anchor_coefficient: 0.5,
            seed: 0,
            clone_logit_scale: 10.0,
            clone_threshold: 0.75,
            collapse_floor: 1e-4,
            checkpoint_every: 0,
        }
    }
}

pub const CLONE_ALPHA_INIT: f64 = 0.2;
pub const CLASSIFY_ALPHA_INIT: f64 = 0.1;

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(TrainError::NonPositiveTemperature(self.temperature));
        }
        if self.batch_size < 2 {
            return Err(TrainError::BatchTooSmall(self.batch_size));
        }
        if !(0.0..1.0).contains(&self.momentum) && self.momentum != 1.0 {
            return Err(TrainError::BadConfig(format!(
                "momentum {} outside [0, 1]",
                self.momentum
            )));
        }
        if let Some(a) = self.alpha_init {
            if !(a > 0.0 && a < 1.0) {
                return Err(TrainError::BadConfig(format!("alpha_init {a} outside (0, 1)")));
            }
        }
        if self.anchor_coefficient < 0.0 {
            return Err(TrainError::BadConfig("anchor_coefficient must be non-negative".into()));
        }
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<(), TrainError> {
    if tau > 0.0 {
        Ok(())
    } else {
        Err(TrainError::NonPositiveTemperature(tau))
    }
}

/// InfoNCE with the positive at index 0 of a (1 + negatives)-way softmax.
pub fn info_nce(q: &[f64], k_pos: &[f64], negatives: &[&[f64]], tau: f64) -> Result<f64, TrainError> {
    check_tau(tau)?;
    let dot = |a: &[f64], b: &[f64]| -> Result<f64, TrainError> {
        if a.len() != b.len() {
            return Err(TrainError::DimensionMismatch(a.len(), b.len()));
        }
        Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
    };
    let mut logits = vec![dot(q, k_pos)? / tau];
    for n in negatives {
        logits.push(dot(q, n)? / tau);
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    Ok((lse - logits[0]).max(0.0))
}

/// Loss and its gradient with respect to `q`.
pub fn info_nce_grad(
    q: ArrayView1<f64>,
    k_pos: ArrayView1<f64>,
    negatives: &[ArrayView1<f64>],
    tau: f64,
) -> (f64, Array1<f64>) {
    let mut logits = Vec::with_capacity(negatives.len() + 1);
    logits.push(q.dot(&k_pos) / tau);
    logits.extend(negatives.iter().map(|n| q.dot(n) / tau));
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = (m + z.ln() - logits[0]).max(0.0);
    let mut dq = k_pos.mapv(|v| v * (exps[0] / z - 1.0) / tau);
    for (n, e) in negatives.iter().zip(&exps[1..]) {
        dq.scaled_add(e / z / tau, n);
    }
    (loss, dq)
}

/// Bounded FIFO of key embeddings; the oldest entries leave first.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeQueue {
    capacity: usize,
    entries: VecDeque<Array1<f64>>,
}

impl NegativeQueue {
    pub fn new(capacity: usize) -> Self {
        NegativeQueue {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Array1<f64>> {
        self.entries.iter()
    }

    pub fn enqueue<I: IntoIterator<Item = Array1<f64>>>(&mut self, keys: I) {
        for k in keys {
            if self.capacity == 0 {
                return;
            }
            if self.entries.len() == self.capacity {
                self.entries.pop_front();
            }
            self.entries.push_back(k);
        }
    }
}

/// `key <- m * key + (1 - m) * query`, elementwise.
pub fn momentum_update(key: &mut EncoderParams, query: &EncoderParams, m: f64) -> Result<(), TrainError> {
    if !key.same_shape(query) {
        return Err(EncoderError::ShapeMismatch.into());
    }
    for (k, (_, _, q)) in key.tensors_mut().into_iter().zip(query.tensors()) {
        k.iter_mut().zip(q).for_each(|(k, q)| *k = m * *k + (1.0 - m) * q);
    }
    Ok(())
}

/// Adam over a fixed list of flat tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                p[j] -= self.lr * (m[j] / c1) / ((v[j] / c2).sqrt() + self.eps);
            }
        }
    }
}

/// Mixing weight kept in (0, 1) by a sigmoid over an unconstrained logit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainableAlpha {
    pub logit: f64,
}

impl TrainableAlpha {
    pub fn new(init: f64) -> Self {
        TrainableAlpha {
            logit: (init / (1.0 - init)).ln(),
        }
    }

    pub fn value(&self) -> f64 {
        1.0 / (1.0 + (-self.logit).exp())
    }

    /// Chain rule from d(loss)/d(alpha) to the logit.
    pub fn logit_grad(&self, d_alpha: f64) -> f64 {
        let a = self.value();
        d_alpha * a * (1.0 - a)
    }
}

pub fn combined_supervised_loss(contrastive: f64, supervised: f64, alpha: f64) -> f64 {
    alpha * contrastive + (1.0 - alpha) * supervised
}

pub fn classification_loss(contrastive: f64, category: f64, anchor_category: f64, alpha: f64, coeff: f64) -> f64 {
    alpha * contrastive + (1.0 - alpha) * category + coeff * anchor_category
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub contrastive: f64,
    pub supervised: Option<f64>,
    pub anchor: Option<f64>,
    pub total: f64,
    pub alpha_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: u64,
    pub loss_total: f64,
    pub loss_contrastive: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_supervised: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_anchor: Option<f64>,
    pub alpha: f64,
    pub queue_len: usize,
}

/// Subword ids of a positive pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairIds {
    pub query: Vec<u32>,
    pub key: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub steps: u64,
    pub epoch_losses: Vec<f64>,
    /// Mean per-dimension variance of query embeddings, per epoch.
    pub embedding_variance: Vec<f64>,
    pub collapse_warnings: usize,
}

/// Mean over dimensions of the across-batch variance.
pub fn embedding_variance(batch: &[Array1<f64>]) -> f64 {
    if batch.len() < 2 {
        return 0.0;
    }
    let n = batch.len() as f64;
    let dim = batch[0].len();
    let mean = batch.iter().fold(Array1::<f64>::zeros(dim), |acc, v| acc + v) / n;
    let var = batch.iter().fold(Array1::<f64>::zeros(dim), |acc, v| {
        let d = v - &mean;
        acc + &d * &d
    }) / n;
    var.mean().unwrap_or(0.0)
}

pub struct Trainer {
    pub cfg: TrainConfig,
    pub query: EncoderParams,
    pub key: EncoderParams,
    pub queue: NegativeQueue,
    pub alpha: Option<TrainableAlpha>,
    pub classifier: Option<ClassifierHead>,
    pub step: u64,
    pub collapse_warnings: usize,
    adam: Adam,
    alpha_adam: Adam,
    head_adam: Adam,
}

struct SampleGrad {
    loss: f64,
    supervised: f64,
    anchor: f64,
    d_alpha: f64,
    query_unit: Array1<f64>,
    grads: EncoderParams,
    head: Option<ClassifierHead>,
}

impl Trainer {
    pub fn new(encoder: EncoderConfig, cfg: TrainConfig) -> Result<Self, TrainError> {
        let query = EncoderParams::init(encoder, cfg.seed)?;
        Self::from_params(query, cfg)
    }

    pub fn from_params(query: EncoderParams, cfg: TrainConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        Ok(Trainer {
            key: query.clone(),
            query,
            queue: NegativeQueue::new(cfg.queue_capacity),
            alpha: None,
            classifier: None,
            step: 0,
            collapse_warnings: 0,
            adam: Adam::new(cfg.learning_rate),
            alpha_adam: Adam::new(cfg.learning_rate),
            head_adam: Adam::new(cfg.learning_rate),
            cfg,
        })
    }

    /// Switches to the clone-supervised objective.
    pub fn with_clone_supervision(mut self) -> Self {
        self.alpha = Some(TrainableAlpha::new(self.cfg.alpha_init.unwrap_or(CLONE_ALPHA_INIT)));
        self
    }

    /// Switches to the classification objective with `classes` categories.
    pub fn with_classifier(mut self, classes: usize) -> Self {
        self.alpha = Some(TrainableAlpha::new(self.cfg.alpha_init.unwrap_or(CLASSIFY_ALPHA_INIT)));
        self.classifier = Some(ClassifierHead::zeros(self.query.config.output_dim(), classes));
        self
    }

    pub fn alpha_value(&self) -> f64 {
        self.alpha.map_or(1.0, |a| a.value())
    }

    fn keys(&self, batch: &[PairIds]) -> Result<Vec<Array1<f64>>, TrainError> {
        batch
            .par_iter()
            .map(|p| self.key.embed(&p.key).map_err(TrainError::from))
            .collect()
    }

    fn contrastive(&self, q: &Array1<f64>, i: usize, keys: &[Array1<f64>]) -> (f64, Array1<f64>) {
        let negatives: Vec<ArrayView1<f64>> = keys
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, k)| k.view())
            .chain(self.queue.iter().map(|k| k.view()))
            .collect();
        info_nce_grad(q.view(), keys[i].view(), &negatives, self.cfg.temperature)
    }

    /// One unsupervised step on a batch of positive pairs.
    pub fn train_step(&mut self, batch: &[PairIds]) -> Result<LossBreakdown, TrainError> {
        Ok(self.train_step_inner(batch, None)?.0)
    }

    /// One classification step; `labels[i]` is the category of `batch[i]`,
    /// shared by the original and its anchor.
    pub fn train_step_classify(&mut self, batch: &[PairIds], labels: &[usize]) -> Result<LossBreakdown, TrainError> {
        assert!(self.classifier.is_some(), "call with_classifier first");
        Ok(self.train_step_inner(batch, Some(labels))?.0)
    }

    fn train_step_inner(
        &mut self,
        batch: &[PairIds],
        labels: Option<&[usize]>,
    ) -> Result<(LossBreakdown, Vec<Array1<f64>>), TrainError> {
        if batch.len() < 2 {
            return Err(TrainError::BatchTooSmall(batch.len()));
        }
        let keys = self.keys(batch)?;
        let alpha = self.alpha_value();
        let coeff = self.cfg.anchor_coefficient;
        let samples: Vec<SampleGrad> = (0..batch.len())
            .into_par_iter()
            .map(|i| -> Result<SampleGrad, TrainError> {
                let mut grads = self.query.zeros_like();
                let trace = self.query.forward(&batch[i].query)?;
                let (c, dq_c) = self.contrastive(&trace.unit, i, &keys);
                let Some(labels) = labels else {
                    self.query.backward(&trace, dq_c.view(), &mut grads);
                    return Ok(SampleGrad {
                        loss: c,
                        supervised: 0.0,
                        anchor: 0.0,
                        d_alpha: 0.0,
                        query_unit: trace.unit,
                        grads,
                        head: None,
                    });
                };
                let head = self.classifier.as_ref().expect("classifier present");
                let mut g_cat = ClassifierHead::zeros(head.w.nrows(), head.classes());
                let (cat, dq_cat) = head.cross_entropy(trace.unit.view(), labels[i], &mut g_cat)?;
                let anchor_trace = self.query.forward(&batch[i].key)?;
                let mut g_anc = ClassifierHead::zeros(head.w.nrows(), head.classes());
                let (anc, da) = head.cross_entropy(anchor_trace.unit.view(), labels[i], &mut g_anc)?;
                let dq = dq_c * alpha + dq_cat * (1.0 - alpha);
                self.query.backward(&trace, dq.view(), &mut grads);
                self.query.backward(&anchor_trace, (da * coeff).view(), &mut grads);
                g_cat.w = g_cat.w * (1.0 - alpha) + g_anc.w * coeff;
                g_cat.b = g_cat.b * (1.0 - alpha) + g_anc.b * coeff;
                Ok(SampleGrad {
                    loss: c,
                    supervised: cat,
                    anchor: anc,
                    d_alpha: c - cat,
                    query_unit: trace.unit,
                    grads,
                    head: Some(g_cat),
                })
            })
            .collect::<Result<_, _>>()?;
        let n = batch.len() as f64;
        let c = samples.iter().map(|s| s.loss).sum::<f64>() / n;
        let mut breakdown = LossBreakdown {
            contrastive: c,
            supervised: None,
            anchor: None,
            total: c,
            alpha_value: alpha,
        };
        if labels.is_some() {
            let cat = samples.iter().map(|s| s.supervised).sum::<f64>() / n;
            let anc = samples.iter().map(|s| s.anchor).sum::<f64>() / n;
            breakdown.supervised = Some(cat);
            breakdown.anchor = Some(anc);
            breakdown.total = classification_loss(c, cat, anc, alpha, coeff);
        }
        let d_alpha = samples.iter().map(|s| s.d_alpha).sum::<f64>() / n;
        let units: Vec<Array1<f64>> = samples.iter().map(|s| s.query_unit.clone()).collect();
        let mut total = self.query.zeros_like();
        let mut head_total = self
            .classifier
            .as_ref()
            .map(|h| ClassifierHead::zeros(h.w.nrows(), h.classes()));
        for s in &samples {
            total.add_scaled(&s.grads, 1.0 / n)?;
            if let (Some(acc), Some(h)) = (head_total.as_mut(), s.head.as_ref()) {
                acc.w.scaled_add(1.0 / n, &h.w);
                acc.b.scaled_add(1.0 / n, &h.b);
            }
        }
        self.apply(total, head_total, labels.map(|_| d_alpha))?;
        self.queue.enqueue(keys);
        Ok((breakdown, units))
    }

    /// One clone-supervised step: InfoNCE over `batch` plus a logistic loss
    /// on the cosine of each labeled pair against the clone threshold.
    pub fn train_step_clone(
        &mut self,
        batch: &[PairIds],
        labeled: &[(Vec<u32>, Vec<u32>, bool)],
    ) -> Result<LossBreakdown, TrainError> {
        assert!(self.alpha.is_some(), "call with_clone_supervision first");
        if batch.len() < 2 {
            return Err(TrainError::BatchTooSmall(batch.len()));
        }
        let keys = self.keys(batch)?;
        let alpha = self.alpha_value();
        let (scale, thr) = (self.cfg.clone_logit_scale, self.cfg.clone_threshold);
        let contrast: Vec<(f64, EncoderParams)> = (0..batch.len())
            .into_par_iter()
            .map(|i| -> Result<_, TrainError> {
                let mut g = self.query.zeros_like();
                let trace = self.query.forward(&batch[i].query)?;
                let (c, dq) = self.contrastive(&trace.unit, i, &keys);
                self.query.backward(&trace, (dq * alpha).view(), &mut g);
                Ok((c, g))
            })
            .collect::<Result<_, _>>()?;
        let sup: Vec<(f64, EncoderParams)> = labeled
            .par_iter()
            .map(|(a, b, y)| -> Result<_, TrainError> {
                let mut g = self.query.zeros_like();
                let ta = self.query.forward(a)?;
                let tb = self.query.forward(b)?;
                let cos = ta.unit.dot(&tb.unit);
                let p = 1.0 / (1.0 + (-scale * (cos - thr)).exp());
                let y = if *y { 1.0 } else { 0.0 };
                let loss = -(y * p.max(1e-12).ln() + (1.0 - y) * (1.0 - p).max(1e-12).ln());
                let dcos = (1.0 - alpha) * scale * (p - y);
                self.query.backward(&ta, (&tb.unit * dcos).view(), &mut g);
                self.query.backward(&tb, (&ta.unit * dcos).view(), &mut g);
                Ok((loss, g))
            })
            .collect::<Result<_, _>>()?;
        let nc = batch.len() as f64;
        let ns = labeled.len().max(1) as f64;
        let c = contrast.iter().map(|x| x.0).sum::<f64>() / nc;
        let s = sup.iter().map(|x| x.0).sum::<f64>() / ns;
        let mut total = self.query.zeros_like();
        for (_, g) in &contrast {
            total.add_scaled(g, 1.0 / nc)?;
        }
        for (_, g) in &sup {
            total.add_scaled(g, 1.0 / ns)?;
        }
        self.apply(total, None, Some(c - s))?;
        self.queue.enqueue(keys);
        Ok(LossBreakdown {
            contrastive: c,
            supervised: Some(s),
            anchor: None,
            total: combined_supervised_loss(c, s, alpha),
            alpha_value: alpha,
        })
    }

    fn apply(
        &mut self,
        grads: EncoderParams,
        head: Option<ClassifierHead>,
        d_alpha: Option<f64>,
    ) -> Result<(), TrainError> {
        let g: Vec<&[f64]> = grads.tensors().into_iter().map(|t| t.2).collect();
        self.adam.step(self.query.tensors_mut(), g);
        self.query.round_to_f32();
        if let (Some(h), Some(gh)) = (self.classifier.as_mut(), head) {
            self.head_adam.step(
                vec![h.w.as_slice_mut().unwrap(), h.b.as_slice_mut().unwrap()],
                vec![gh.w.as_slice().unwrap(), gh.b.as_slice().unwrap()],
            );
            h.w.mapv_inplace(|x| x as f32 as f64);
            h.b.mapv_inplace(|x| x as f32 as f64);
        }
        if let (Some(a), Some(da)) = (self.alpha.as_mut(), d_alpha) {
            let g = [a.logit_grad(da)];
            let mut p = [a.logit];
            self.alpha_adam.step(vec![&mut p[..]], vec![&g[..]]);
            a.logit = p[0];
        }
        momentum_update(&mut self.key, &self.query, self.cfg.momentum)?;
        self.step += 1;
        Ok(())
    }

    fn log_line(&self, b: &LossBreakdown) -> StepLog {
        StepLog {
            step: self.step,
            loss_total: b.total,
            loss_contrastive: b.contrastive,
            loss_supervised: b.supervised,
            loss_anchor: b.anchor,
            alpha: b.alpha_value,
            queue_len: self.queue.len(),
        }
    }

    fn epoch_order(&self, n: usize, epoch: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        order.shuffle(&mut rng);
        order
    }

    fn check_collapse(&mut self, epoch: usize, variance: f64) {
        if variance < self.cfg.collapse_floor {
            self.collapse_warnings += 1;
            log::warn!(
                "embedding variance {variance:.3e} fell below {:.1e} after epoch {}",
                self.cfg.collapse_floor,
                epoch + 1
            );
        }
    }

    /// Trains for `cfg.epochs` epochs. `labels` switches on the
    /// classification objective. `on_step` sees every log record and
    /// `on_epoch` runs after each epoch with its 1-based number.
    pub fn fit(
        &mut self,
        data: &[PairIds],
        labels: Option<&[usize]>,
        on_step: &mut dyn FnMut(&StepLog),
        on_epoch: &mut dyn FnMut(usize, &Trainer),
    ) -> Result<TrainReport, TrainError> {
        if data.len() < 2 {
            return Err(TrainError::BatchTooSmall(data.len()));
        }
        let mut report = TrainReport {
            steps: 0,
            epoch_losses: Vec::new(),
            embedding_variance: Vec::new(),
            collapse_warnings: 0,
        };
        for epoch in 0..self.cfg.epochs {
            let order = self.epoch_order(data.len(), epoch);
            let (mut loss_sum, mut var_sum, mut batches) = (0.0, 0.0, 0usize);
            for chunk in order.chunks(self.cfg.batch_size) {
                if chunk.len() < 2 {
                    continue;
                }
                let batch: Vec<PairIds> = chunk.iter().map(|&i| data[i].clone()).collect();
                let batch_labels: Option<Vec<usize>> = labels.map(|l| chunk.iter().map(|&i| l[i]).collect());
                let (b, units) = self.train_step_inner(&batch, batch_labels.as_deref())?;
                on_step(&self.log_line(&b));
                loss_sum += b.total;
                var_sum += embedding_variance(&units);
                batches += 1;
            }
            let var = var_sum / batches.max(1) as f64;
            self.check_collapse(epoch, var);
            report.epoch_losses.push(loss_sum / batches.max(1) as f64);
            report.embedding_variance.push(var);
            on_epoch(epoch + 1, self);
        }
        report.steps = self.step;
        report.collapse_warnings = self.collapse_warnings;
        Ok(report)
    }

    /// Clone-supervised training: each contrastive batch is paired with the
    /// next slice of labeled pairs, cycling through them.
    pub fn fit_clone(
        &mut self,
        data: &[PairIds],
        labeled: &[(Vec<u32>, Vec<u32>, bool)],
        on_step: &mut dyn FnMut(&StepLog),
        on_epoch: &mut dyn FnMut(usize, &Trainer),
    ) -> Result<TrainReport, TrainError> {
        if data.len() < 2 {
            return Err(TrainError::BatchTooSmall(data.len()));
        }
        let mut report = TrainReport {
            steps: 0,
            epoch_losses: Vec::new(),
            embedding_variance: Vec::new(),
            collapse_warnings: 0,
        };
        let mut cursor = 0;
        for epoch in 0..self.cfg.epochs {
            let order = self.epoch_order(data.len(), epoch);
            let (mut loss_sum, mut batches) = (0.0, 0usize);
            for chunk in order.chunks(self.cfg.batch_size) {
                if chunk.len() < 2 {
                    continue;
                }
                let batch: Vec<PairIds> = chunk.iter().map(|&i| data[i].clone()).collect();
                let take = self.cfg.batch_size.min(labeled.len());
                let sup: Vec<_> = (0..take)
                    .map(|j| labeled[(cursor + j) % labeled.len()].clone())
                    .collect();
                cursor = (cursor + take) % labeled.len().max(1);
                let b = self.train_step_clone(&batch, &sup)?;
                on_step(&self.log_line(&b));
                loss_sum += b.total;
                batches += 1;
            }
            let units: Vec<Array1<f64>> = data
                .iter()
                .take(64)
                .map(|p| self.query.embed(&p.query))
                .collect::<Result<_, _>>()?;
            let var = embedding_variance(&units);
            self.check_collapse(epoch, var);
            report.epoch_losses.push(loss_sum / batches.max(1) as f64);
            report.embedding_variance.push(var);
            on_epoch(epoch + 1, self);
        }
        report.steps = self.step;
        report.collapse_warnings = self.collapse_warnings;
        Ok(report)
    }
}
