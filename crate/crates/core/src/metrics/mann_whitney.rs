use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest `n_a * n_b` handled by exact enumeration.
pub const EXACT_MAX_PRODUCT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitney {
    /// U of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Two-sided Mann-Whitney U test with midranks for ties.
///
/// Small samples get the exact permutation p-value; larger ones a normal
/// approximation with tie and continuity corrections.
///
/// ```
/// use nli_disagree::metrics::mann_whitney_two_sided;
/// let r = mann_whitney_two_sided(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
/// assert_eq!(r.u, 0.0);
/// assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
/// ```
pub fn mann_whitney_two_sided(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Mann-Whitney needs two nonempty samples".to_string()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("Mann-Whitney sample contains NaN".to_string()));
    }
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let (doubled_ranks, tie_sizes) = doubled_midranks(a, b);
    let doubled_sum_a: u64 = doubled_ranks[..na].iter().sum();
    let u = doubled_sum_a as f64 / 2.0 - (na * (na + 1)) as f64 / 2.0;

    if tie_sizes.len() == 1 {
        return Ok(MannWhitney { u, p_value: 1.0, exact: na * nb <= EXACT_MAX_PRODUCT });
    }
    if na * nb <= EXACT_MAX_PRODUCT {
        // enumerate subsets of the smaller sample; the two-sided p is the same
        let p = if na <= nb {
            exact_p(&doubled_ranks, na, doubled_sum_a)
        } else {
            exact_p(&doubled_ranks, nb, doubled_ranks.iter().sum::<u64>() - doubled_sum_a)
        };
        return Ok(MannWhitney { u, p_value: p, exact: true });
    }

    let (naf, nbf, nf) = (na as f64, nb as f64, n as f64);
    let ties: f64 = tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum();
    let variance = naf * nbf / 12.0 * ((nf + 1.0) - ties / (nf * (nf - 1.0)));
    let mean = naf * nbf / 2.0;
    let p = if variance <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / variance.sqrt();
        (2.0 * Normal::standard().sf(z)).min(1.0)
    };
    Ok(MannWhitney { u, p_value: p, exact: false })
}

/// Twice the midrank of every value (first `a`, then `b`), which is always
/// an integer, and the size of each tie group.
fn doubled_midranks(a: &[f64], b: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let values: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0u64; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // ranks start+1..=end, midrank doubled = start + 1 + end
        for &i in &order[start..end] {
            ranks[i] = (start + 1 + end) as u64;
        }
        ties.push((end - start) as u64);
        start = end;
    }
    (ranks, ties)
}

/// P(|D - center| >= |observed - center|) over all ways of choosing `na`
/// of the ranks, where D is the doubled rank sum of the chosen ones.
fn exact_p(doubled_ranks: &[u64], na: usize, observed: u64) -> f64 {
    let max_sum: u64 = doubled_ranks.iter().sum();
    let width = max_sum as usize + 1;
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0u128; width]; na + 1];
    ways[0][0] = 1;
    for &r in doubled_ranks {
        let r = r as usize;
        for k in (1..=na).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let (prev, cur) = (&lower[k - 1], &mut upper[0]);
            for s in (r..width).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let n = doubled_ranks.len() as i64;
    let center = na as i64 * (n + 1);
    let observed_dev = (observed as i64 - center).abs();
    let mut extreme = 0u128;
    let mut total = 0u128;
    for (s, &count) in ways[na].iter().enumerate() {
        total += count;
        if (s as i64 - center).abs() >= observed_dev {
            extreme += count;
        }
    }
    (extreme as f64 / total as f64).min(1.0)
}
