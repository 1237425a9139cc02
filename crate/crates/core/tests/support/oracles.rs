//! Independent reference computations for the integration and acceptance
//! tests. Each one follows the textbook definition as literally as
//! possible, with no sharing of code paths with the library.

#![allow(dead_code)]

use nli_disagree::baseline::{batch_loss_and_gradient, FeatureVector, LinearModel, Target};

/// Largest relative gap between the analytic gradient and central
/// differences over every weight and bias.
pub fn gradient_check(model: &LinearModel, batch: &[(&FeatureVector, Target)], h: f64) -> f64 {
    let (_, analytic) = batch_loss_and_gradient(model, batch).unwrap();
    let loss = |m: &LinearModel| batch_loss_and_gradient(m, batch).unwrap().0;
    let mut worst: f64 = 0.0;
    let n_weights = model.weights.len();
    for idx in 0..n_weights + model.bias.len() {
        let bump = |delta: f64| {
            let mut m = model.clone();
            if idx < n_weights {
                m.weights[idx] += delta;
            } else {
                m.bias[idx - n_weights] += delta;
            }
            loss(&m)
        };
        let numeric = (bump(h) - bump(-h)) / (2.0 * h);
        let exact = if idx < n_weights { analytic.weights[idx] } else { analytic.bias[idx - n_weights] };
        let rel = (numeric - exact).abs() / (numeric.abs() + exact.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

/// Krippendorff's alpha by enumerating ordered pairs of annotations:
/// within units for observed disagreement, across the pooled values for
/// expected disagreement.
pub fn alpha_by_pairs<V: Clone>(units: &[Vec<V>], d: impl Fn(&V, &V) -> f64) -> f64 {
    let pairable: Vec<&Vec<V>> = units.iter().filter(|u| u.len() >= 2).collect();
    let pooled: Vec<&V> = pairable.iter().flat_map(|u| u.iter()).collect();
    let n = pooled.len() as f64;
    let mut observed = 0.0;
    for u in &pairable {
        let m = u.len() as f64;
        for i in 0..u.len() {
            for j in 0..u.len() {
                if i != j {
                    observed += d(&u[i], &u[j]) / (m - 1.0);
                }
            }
        }
    }
    observed /= n;
    let mut expected = 0.0;
    for i in 0..pooled.len() {
        for j in 0..pooled.len() {
            if i != j {
                expected += d(pooled[i], pooled[j]);
            }
        }
    }
    expected /= n * (n - 1.0);
    if observed == 0.0 {
        1.0
    } else {
        1.0 - observed / expected
    }
}

/// Two-sided Mann-Whitney p-value by enumerating every way to split the
/// pooled sample into groups of the original sizes. Returns (U, p).
pub fn mann_whitney_by_permutation(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let u_of = |mask: u32| -> f64 {
        let mut u = 0.0;
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            for j in (0..n).filter(|j| mask >> j & 1 == 0) {
                if pooled[i] > pooled[j] {
                    u += 1.0;
                } else if pooled[i] == pooled[j] {
                    u += 0.5;
                }
            }
        }
        u
    };
    let u_obs = u_of((1u32 << a.len()) - 1);
    let center = (a.len() * b.len()) as f64 / 2.0;
    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == a.len() {
            total += 1;
            if (u_of(mask) - center).abs() >= (u_obs - center).abs() - 1e-9 {
                extreme += 1;
            }
        }
    }
    (u_obs, extreme as f64 / total as f64)
}

/// Accuracy and per-class F1 (percent) of a square confusion matrix with
/// gold rows and predicted columns.
pub fn scores_from_matrix<const K: usize>(m: &[[usize; K]; K]) -> (f64, [f64; K]) {
    let total: usize = m.iter().flatten().sum();
    let correct: usize = (0..K).map(|i| m[i][i]).sum();
    let f1 = std::array::from_fn(|k| {
        let gold: usize = m[k].iter().sum();
        let predicted: usize = m.iter().map(|row| row[k]).sum();
        // F1 = 2 tp / (gold + predicted)
        200.0 * m[k][k] as f64 / (gold + predicted) as f64
    });
    (100.0 * correct as f64 / total as f64, f1)
}
