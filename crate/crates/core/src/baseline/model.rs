use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, FeatureVector, DENSE_DIM};
use crate::error::{Error, Result};
use crate::labels::{LabelDistribution, LabelSet, NliLabel};

/// Output layer and loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    /// Softmax over E, N, C, Complicated with cross-entropy.
    #[serde(rename = "softmax4")]
    Softmax4,
    /// Three independent sigmoids with summed binary cross-entropy.
    #[serde(rename = "sigmoid3")]
    Sigmoid3,
    /// Softmax over E, N, C trained with KL divergence to soft labels.
    #[serde(rename = "mixup-softmax3")]
    MixupSoftmax3,
}

impl Head {
    pub const ALL: [Head; 3] = [Head::Softmax4, Head::Sigmoid3, Head::MixupSoftmax3];

    pub fn outputs(self) -> usize {
        match self {
            Head::Softmax4 => 4,
            Head::Sigmoid3 | Head::MixupSoftmax3 => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Head::Softmax4 => "softmax4",
            Head::Sigmoid3 => "sigmoid3",
            Head::MixupSoftmax3 => "mixup-softmax3",
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Head::ALL
            .into_iter()
            .find(|h| h.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown head {s:?}; expected softmax4, sigmoid3 or mixup-softmax3")))
    }
}

/// Training target matching a head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Class index for softmax4.
    Class(usize),
    /// Label presence for sigmoid3.
    Labels(LabelSet),
    /// Distribution over E, N, C for the KL head.
    Soft([f64; 3]),
}

/// Probabilities below this are clipped before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// KL(p || q) in nats, with q clipped to `[PROB_FLOOR, 1]` and `0 ln 0 = 0`.
///
/// ```
/// use nli_disagree::baseline::kl_divergence;
/// use nli_disagree::labels::LabelDistribution;
/// let p = LabelDistribution::new([1.0, 0.0, 0.0]).unwrap();
/// let q = LabelDistribution::new([0.5, 0.25, 0.25]).unwrap();
/// assert!((kl_divergence(&p, &q) - 2f64.ln()).abs() < 1e-12);
/// ```
pub fn kl_divergence(p: &LabelDistribution, q: &LabelDistribution) -> f64 {
    kl(&p.as_array(), &q.as_array())
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi.clamp(PROB_FLOOR, 1.0)).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Loss of one example and its gradient with respect to the logits.
pub fn loss_and_logit_gradient(head: Head, logits: &[f64], target: &Target) -> Result<(f64, Vec<f64>)> {
    match (head, target) {
        (Head::Softmax4, Target::Class(y)) if *y < 4 => {
            let mut p = softmax(logits);
            let loss = -p[*y].max(PROB_FLOOR).ln();
            p[*y] -= 1.0;
            Ok((loss, p))
        }
        (Head::Sigmoid3, Target::Labels(set)) => {
            let mut loss = 0.0;
            let grad = NliLabel::ALL
                .iter()
                .map(|&l| {
                    let z = logits[l.index()];
                    let y = f64::from(u8::from(set.contains(l)));
                    loss += softplus(z) - y * z;
                    sigmoid(z) - y
                })
                .collect();
            Ok((loss, grad))
        }
        (Head::MixupSoftmax3, Target::Soft(y)) => {
            let p = softmax(logits);
            let loss = kl(y, &p);
            Ok((loss, p.iter().zip(y).map(|(pi, yi)| pi - yi).collect()))
        }
        (head, target) => Err(Error::InvalidInput(format!("target {target:?} does not fit head {head}"))),
    }
}

/// Weights and biases of a linear model over dense + hashed features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub head: Head,
    pub features: FeatureConfig,
    /// Row-major, one row of `features.dim()` per output.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(head: Head, features: FeatureConfig) -> Self {
        LinearModel {
            head,
            features,
            weights: vec![0.0; head.outputs() * features.dim()],
            bias: vec![0.0; head.outputs()],
        }
    }

    pub fn check_shape(&self) -> Result<()> {
        let k = self.head.outputs();
        if self.bias.len() != k || self.weights.len() != k * self.features.dim() {
            return Err(Error::InvalidInput(format!(
                "model shape mismatch: head {} needs {k} x {} weights",
                self.head,
                self.features.dim()
            )));
        }
        if self.weights.iter().chain(&self.bias).any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("model has non-finite parameters".to_string()));
        }
        Ok(())
    }

    fn row(&self, k: usize) -> &[f64] {
        let d = self.features.dim();
        &self.weights[k * d..(k + 1) * d]
    }

    fn check_features(&self, x: &FeatureVector) -> Result<()> {
        match x.sparse.last() {
            Some((idx, _)) if *idx as usize >= self.features.hash_dim => Err(Error::InvalidInput(format!(
                "feature index {idx} outside hash dimension {}",
                self.features.hash_dim
            ))),
            _ => Ok(()),
        }
    }

    pub fn logits(&self, x: &FeatureVector) -> Vec<f64> {
        (0..self.head.outputs())
            .map(|k| {
                let row = self.row(k);
                let mut z = self.bias[k];
                for (w, v) in row[..DENSE_DIM].iter().zip(&x.dense) {
                    z += w * v;
                }
                for (idx, v) in &x.sparse {
                    z += row[DENSE_DIM + *idx as usize] * v;
                }
                z
            })
            .collect()
    }

    /// Class probabilities of a softmax head.
    pub fn softmax_forward(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        if self.head == Head::Sigmoid3 {
            return Err(Error::InvalidInput("softmax_forward called on a sigmoid3 model".to_string()));
        }
        self.check_features(x)?;
        Ok(softmax(&self.logits(x)))
    }

    /// Independent label probabilities of the sigmoid head.
    pub fn sigmoid_forward(&self, x: &FeatureVector) -> Result<[f64; 3]> {
        if self.head != Head::Sigmoid3 {
            return Err(Error::InvalidInput(format!("sigmoid_forward called on a {} model", self.head)));
        }
        self.check_features(x)?;
        let z = self.logits(x);
        Ok([sigmoid(z[0]), sigmoid(z[1]), sigmoid(z[2])])
    }

    /// Adds `scale * g_k * x` to row `k` for every output `k`, and
    /// `scale * g_k` to the bias.
    pub(crate) fn add_outer(&mut self, x: &FeatureVector, g: &[f64], scale: f64) {
        let d = self.features.dim();
        for (k, gk) in g.iter().enumerate() {
            let step = scale * gk;
            let row = &mut self.weights[k * d..(k + 1) * d];
            for (w, v) in row[..DENSE_DIM].iter_mut().zip(&x.dense) {
                *w += step * v;
            }
            for (idx, v) in &x.sparse {
                row[DENSE_DIM + *idx as usize] += step * v;
            }
            self.bias[k] += step;
        }
    }
}

/// Mean loss over a batch and its full gradient, laid out like the model
/// (`weights` then `bias` in one model-shaped value).
pub fn batch_loss_and_gradient(model: &LinearModel, batch: &[(&FeatureVector, Target)]) -> Result<(f64, LinearModel)> {
    let mut grad = LinearModel::zeros(model.head, model.features);
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for (x, target) in batch {
        let (l, g) = loss_and_logit_gradient(model.head, &model.logits(x), target)?;
        loss += l;
        grad.add_outer(x, &g, scale);
    }
    Ok((loss * scale, grad))
}
