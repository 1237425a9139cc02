use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementReport {
    pub alpha: f64,
    pub observed_disagreement: f64,
    pub expected_disagreement: f64,
    /// Units with at least two annotations.
    pub n_units: usize,
    /// Annotations pooled over those units.
    pub n_annotations: usize,
}

/// 0 for equal values, 1 otherwise.
pub fn nominal_distance<V: PartialEq>(a: &V, b: &V) -> f64 {
    if a == b {
        0.0
    } else {
        1.0
    }
}

/// Krippendorff's alpha over `(unit, annotator, value)` triples.
///
/// Units with a single annotation are dropped. Observed disagreement sums
/// ordered within-unit pairs, each unit weighted by `1 / (m_u - 1)`, over
/// the pooled count `N`; expected disagreement averages all ordered pooled
/// pairs. Sums run over distinct values in sorted order, so the result does
/// not depend on input order.
///
/// ```
/// use nli_disagree::agreement::{krippendorff_alpha, nominal_distance};
/// let data = [(1, "x", 'A'), (1, "y", 'A'), (2, "x", 'A'), (2, "y", 'B'), (3, "x", 'B'), (3, "y", 'B')];
/// let report = krippendorff_alpha(&data, nominal_distance).unwrap();
/// assert!((report.alpha - 4.0 / 9.0).abs() < 1e-12);
/// ```
pub fn krippendorff_alpha<U, A, V, D>(annotations: &[(U, A, V)], distance: D) -> Result<AgreementReport>
where
    U: Ord,
    A: Ord,
    V: Ord,
    D: Fn(&V, &V) -> f64,
{
    let mut units: BTreeMap<&U, (BTreeSet<&A>, BTreeMap<&V, usize>)> = BTreeMap::new();
    for (unit, annotator, value) in annotations {
        let (annotators, values) = units.entry(unit).or_default();
        if !annotators.insert(annotator) {
            return Err(Error::InvalidInput(
                "an annotator labeled the same unit twice".to_string(),
            ));
        }
        *values.entry(value).or_insert(0) += 1;
    }

    let mut pooled: BTreeMap<&V, usize> = BTreeMap::new();
    let mut n_units = 0;
    let mut n = 0usize;
    let mut observed_sum = 0.0;
    for (_, values) in units.values() {
        let m: usize = values.values().sum();
        if m < 2 {
            continue;
        }
        n_units += 1;
        n += m;
        observed_sum += pair_sum(values, &distance) / (m - 1) as f64;
        for (v, c) in values {
            *pooled.entry(v).or_insert(0) += c;
        }
    }
    if n_units == 0 {
        return Err(Error::InvalidInput(
            "no unit has two or more annotations".to_string(),
        ));
    }
    let observed = observed_sum / n as f64;
    let expected = pair_sum(&pooled, &distance) / (n * (n - 1)) as f64;
    let alpha = if observed == 0.0 {
        1.0
    } else if expected == 0.0 {
        return Err(Error::InvalidInput(
            "expected disagreement is zero but observed is not; the distance is not a metric".to_string(),
        ));
    } else {
        1.0 - observed / expected
    };
    Ok(AgreementReport {
        alpha,
        observed_disagreement: observed,
        expected_disagreement: expected,
        n_units,
        n_annotations: n,
    })
}

/// Sum of `d` over ordered pairs of distinct annotations, from value counts.
fn pair_sum<V, D: Fn(&V, &V) -> f64>(counts: &BTreeMap<&V, usize>, distance: &D) -> f64 {
    let counts: Vec<(&V, usize)> = counts.iter().map(|(v, c)| (*v, *c)).collect();
    let mut total = 0.0;
    for (i, &(a, ca)) in counts.iter().enumerate() {
        for (j, &(b, cb)) in counts.iter().enumerate() {
            let pairs = if i == j { ca * (ca - 1) } else { ca * cb };
            if pairs > 0 {
                total += pairs as f64 * distance(a, b);
            }
        }
    }
    total
}
