mod support;

use nli_disagree::baseline::{FeatureConfig, FeatureVector, Head, LinearModel, Target};
use nli_disagree::labels::{LabelSet, NliLabel};
use proptest::prelude::*;
use support::oracles::gradient_check;

fn vector() -> impl Strategy<Value = FeatureVector> {
    (prop::array::uniform7(-1.0..1.0f64), prop::collection::btree_map(0u32..4, 0.1..1.0f64, 0..4)).prop_map(
        |(dense, sparse)| FeatureVector { dense, sparse: sparse.into_iter().collect() },
    )
}

fn target(head: Head) -> BoxedStrategy<Target> {
    match head {
        Head::Softmax4 => (0usize..4).prop_map(Target::Class).boxed(),
        Head::Sigmoid3 => (0u8..8)
            .prop_map(|bits| {
                let set: LabelSet = NliLabel::ALL.into_iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, l)| l).collect();
                Target::Labels(set)
            })
            .boxed(),
        Head::MixupSoftmax3 => prop::array::uniform3(0.0..1.0f64)
            .prop_filter("nonzero mass", |w| w.iter().sum::<f64>() > 1e-3)
            .prop_map(|w| {
                let s: f64 = w.iter().sum();
                Target::Soft(w.map(|x| x / s))
            })
            .boxed(),
    }
}

fn case() -> impl Strategy<Value = (LinearModel, Vec<(FeatureVector, Target)>)> {
    prop::sample::select(Head::ALL.to_vec()).prop_flat_map(|head| {
        let features = FeatureConfig { hash_dim: 4, cross_features: false };
        let size = LinearModel::zeros(head, features);
        let n_params = size.weights.len() + size.bias.len();
        (
            prop::collection::vec(-1.0..1.0f64, n_params),
            prop::collection::vec((vector(), target(head)), 1..6),
        )
            .prop_map(move |(params, batch)| {
                let mut model = LinearModel::zeros(head, features);
                let (w, b) = params.split_at(model.weights.len());
                model.weights.copy_from_slice(w);
                model.bias.copy_from_slice(b);
                (model, batch)
            })
    })
}

proptest! {
    // logits stay small enough that central differences are not dominated by roundoff
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn analytic_gradients_match_central_differences((model, batch) in case()) {
        let refs: Vec<(&FeatureVector, Target)> = batch.iter().map(|(x, t)| (x, *t)).collect();
        let err = gradient_check(&model, &refs, 1e-5);
        prop_assert!(err < 1e-4, "{} relative error {err:e}", model.head);
    }
}
