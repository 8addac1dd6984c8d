//! Clone decisions, confusion-table metrics, subword F1 for method names and
//! the softmax classification head.

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("confusion table is empty")]
    EmptyCounts,
    #[error("cannot compare a zero vector")]
    ZeroVector,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("threshold {0} is outside [-1, 1]")]
    BadThreshold(f64),
    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    #[serde(rename = "TP")]
    pub tp: u64,
    #[serde(rename = "TN")]
    pub tn: u64,
    #[serde(rename = "FP")]
    pub fp: u64,
    #[serde(rename = "FN")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
    /// Set when some ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64, degenerate: &mut bool) -> f64 {
    if den == 0 {
        *degenerate = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(c: ConfusionCounts) -> Result<MetricsReport, EvalError> {
    if c.total() == 0 {
        return Err(EvalError::EmptyCounts);
    }
    let mut degenerate = false;
    let accuracy = ratio(c.tp + c.tn, c.total(), &mut degenerate);
    let precision = ratio(c.tp, c.tp + c.fp, &mut degenerate);
    let recall = ratio(c.tp, c.tp + c.fn_, &mut degenerate);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        degenerate = true;
        0.0
    };
    Ok(MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
        counts: c,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloneEvalConfig {
    pub threshold: f64,
}

impl Default for CloneEvalConfig {
    fn default() -> Self {
        CloneEvalConfig { threshold: 0.75 }
    }
}

impl CloneEvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if (-1.0..=1.0).contains(&self.threshold) {
            Ok(())
        } else {
            Err(EvalError::BadThreshold(self.threshold))
        }
    }
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(EvalError::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Clone iff similarity reaches the threshold.
pub fn classify_pair(a: &[f64], b: &[f64], cfg: &CloneEvalConfig) -> Result<bool, EvalError> {
    Ok(cosine_similarity(a, b)? >= cfg.threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDecision {
    pub id1: String,
    pub id2: String,
    pub sim: f64,
    pub decision: bool,
    pub label: bool,
}

pub fn evaluate_pairs<'a, I>(
    embeddings: &HashMap<String, Vec<f64>>,
    pairs: I,
    cfg: &CloneEvalConfig,
) -> Result<(MetricsReport, Vec<PairDecision>), EvalError>
where
    I: IntoIterator<Item = (&'a str, &'a str, bool)>,
{
    cfg.validate()?;
    let get = |id: &str| {
        embeddings
            .get(id)
            .ok_or_else(|| EvalError::MissingEmbedding(id.to_string()))
    };
    let mut counts = ConfusionCounts::default();
    let mut decisions = Vec::new();
    for (id1, id2, label) in pairs {
        let sim = cosine_similarity(get(id1)?, get(id2)?)?;
        let decision = sim >= cfg.threshold;
        counts.record(decision, label);
        decisions.push(PairDecision {
            id1: id1.to_string(),
            id2: id2.to_string(),
            sim,
            decision,
            label,
        });
    }
    Ok((compute_metrics(counts)?, decisions))
}

/// Splits an identifier on `_`, `-` and case boundaries, lowercased.
/// `parseHTTPResponse` gives `parse`, `http`, `response`.
pub fn subword_split(name: &str) -> Vec<String> {
    let mut out = Vec::new();
    for part in name.split(['_', '-']).filter(|p| !p.is_empty()) {
        let chars: Vec<char> = part.chars().collect();
        let mut cur = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if i > 0 && c.is_uppercase() {
                let prev = chars[i - 1];
                let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
                if !prev.is_uppercase() || next_lower {
                    out.push(std::mem::take(&mut cur));
                }
            }
            cur.extend(c.to_lowercase());
        }
        out.push(cur);
    }
    out.retain(|s| !s.is_empty());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubwordScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Method-name score over subwords. Matches are counted as a multiset
/// intersection. A wrong predicted subword standing in for a missed one is
/// charged to recall only; predicted subwords beyond that are false
/// positives. So `getMax` against `computeMax` keeps full precision.
pub fn subword_f1(predicted: &str, truth: &str) -> SubwordScore {
    let pred = subword_split(predicted);
    let gold = subword_split(truth);
    let mut remaining: HashMap<&str, usize> = HashMap::new();
    for g in &gold {
        *remaining.entry(g.as_str()).or_default() += 1;
    }
    let mut tp = 0usize;
    for p in &pred {
        if let Some(n) = remaining.get_mut(p.as_str()).filter(|n| **n > 0) {
            *n -= 1;
            tp += 1;
        }
    }
    let missed = gold.len() - tp;
    let fp = (pred.len() - tp).saturating_sub(missed);
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if gold.is_empty() {
        0.0
    } else {
        tp as f64 / gold.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    SubwordScore { precision, recall, f1 }
}

/// Fully connected layer plus softmax over categories.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl ClassifierHead {
    pub fn zeros(dim: usize, classes: usize) -> Self {
        ClassifierHead {
            w: Array2::zeros((dim, classes)),
            b: Array1::zeros(classes),
        }
    }

    pub fn classes(&self) -> usize {
        self.b.len()
    }

    pub fn logits(&self, embedding: ArrayView1<f64>) -> Result<Array1<f64>, EvalError> {
        if embedding.len() != self.w.nrows() {
            return Err(EvalError::DimensionMismatch(embedding.len(), self.w.nrows()));
        }
        Ok(embedding.dot(&self.w) + &self.b)
    }

    /// Cross-entropy against `label`; accumulates head gradients and returns
    /// (loss, gradient w.r.t. the embedding).
    pub fn cross_entropy(
        &self,
        embedding: ArrayView1<f64>,
        label: usize,
        grads: &mut ClassifierHead,
    ) -> Result<(f64, Array1<f64>), EvalError> {
        let probs = softmax(&self.logits(embedding)?);
        let loss = -probs[label].max(f64::MIN_POSITIVE).ln();
        let mut dlogits = probs;
        dlogits[label] -= 1.0;
        for (i, &e) in embedding.iter().enumerate() {
            grads.w.row_mut(i).scaled_add(e, &dlogits);
        }
        grads.b += &dlogits;
        Ok((loss, self.w.dot(&dlogits)))
    }
}

pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let m = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let e = logits.mapv(|x| (x - m).exp());
    let s = e.sum();
    e / s
}

pub fn classify_snippet(embedding: ArrayView1<f64>, head: &ClassifierHead) -> Result<Array1<f64>, EvalError> {
    Ok(softmax(&head.logits(embedding)?))
}

pub fn argmax(v: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
