use crate::ingest::CategorySet;

/// MASI distance between two category sets: `1 - J * M`, with Jaccard `J`
/// and monotonicity weight `M` (1 equal, 2/3 subset, 1/3 overlap, 0
/// disjoint). Two empty sets are identical, so their distance is 0; an
/// empty set against a nonempty one is disjoint, distance 1.
///
/// ```
/// use nli_disagree::agreement::masi_distance;
/// let a = "Lexical".parse().unwrap();
/// let b = "Lexical;ProbabilisticEnrichment".parse().unwrap();
/// assert!((masi_distance(a, b) - 2.0 / 3.0).abs() < 1e-12);
/// ```
pub fn masi_distance(a: CategorySet, b: CategorySet) -> f64 {
    if a == b {
        return 0.0;
    }
    let shared = a.intersection(b).len();
    if shared == 0 {
        return 1.0;
    }
    let jaccard = shared as f64 / a.union(b).len() as f64;
    let monotonicity = if a.is_subset(b) || b.is_subset(a) { 2.0 / 3.0 } else { 1.0 / 3.0 };
    1.0 - jaccard * monotonicity
}
