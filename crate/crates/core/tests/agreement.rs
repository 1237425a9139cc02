mod support;

use nli_disagree::agreement::{krippendorff_alpha, masi_distance, nominal_distance};
use nli_disagree::ingest::{CategorySet, TaxonomyCategory};
use proptest::prelude::*;
use support::oracles::alpha_by_pairs;

fn triples<V: Copy>(units: &[Vec<V>]) -> Vec<(usize, usize, V)> {
    units.iter().enumerate().flat_map(|(u, vs)| vs.iter().enumerate().map(move |(a, v)| (u, a, *v))).collect()
}

fn category_set() -> impl Strategy<Value = CategorySet> {
    prop::collection::vec(prop::sample::select(TaxonomyCategory::ALL.to_vec()), 1..3)
        .prop_map(|cs| cs.into_iter().collect())
}

proptest! {
    #[test]
    fn nominal_alpha_matches_pair_enumeration(
        units in prop::collection::vec(prop::collection::vec(0u8..3, 2..5), 1..8)
    ) {
        let oracle = alpha_by_pairs(&units, nominal_distance);
        match krippendorff_alpha(&triples(&units), nominal_distance) {
            Ok(r) => prop_assert!((r.alpha - oracle).abs() < 1e-10, "{} vs {oracle}", r.alpha),
            Err(_) => prop_assert!(!oracle.is_finite()),
        }
    }

    #[test]
    fn masi_alpha_matches_pair_enumeration(
        units in prop::collection::vec(prop::collection::vec(category_set(), 2..4), 1..6)
    ) {
        let oracle = alpha_by_pairs(&units, |a, b| masi_distance(*a, *b));
        if let Ok(r) = krippendorff_alpha(&triples(&units), |a, b| masi_distance(*a, *b)) {
            prop_assert!((r.alpha - oracle).abs() < 1e-10, "{} vs {oracle}", r.alpha);
        }
    }

    #[test]
    fn masi_is_a_bounded_symmetric_distance(a in category_set(), b in category_set()) {
        let d = masi_distance(a, b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, masi_distance(b, a));
        prop_assert_eq!(masi_distance(a, a), 0.0);
        prop_assert_eq!(d == 0.0, a == b);
    }
}

#[test]
fn single_annotator_units_do_not_count() {
    let rows = [(1, "a", 'x'), (1, "b", 'y'), (2, "a", 'x'), (2, "b", 'x'), (3, "a", 'y')];
    let r = krippendorff_alpha(&rows, nominal_distance).unwrap();
    assert_eq!(r.n_units, 2);
    let oracle = alpha_by_pairs(&[vec!['x', 'y'], vec!['x', 'x'], vec!['y']], nominal_distance);
    assert!((r.alpha - oracle).abs() < 1e-12);
}
