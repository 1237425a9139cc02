//! Linearly separable stand-in data for exercising the trainers.

use rand::Rng;

use crate::error::Result;
use crate::ingest::{ItemRecord, Source};
use crate::labels::{AnnotationCounts, LabelSet, NliLabel};
use crate::relabel::{LabeledItem, SchemeLabels};
use crate::rng;

/// Cue word per label when present, then when absent.
const CUES: [(&str, &str); 3] = [("alpha", "amber"), ("beta", "birch"), ("gamma", "glade")];

const FILLER: [&str; 24] = [
    "river", "stone", "lamp", "field", "crow", "table", "winter", "coat", "bridge", "garden", "paper", "engine", "violin",
    "market", "harbor", "candle", "forest", "ladder", "pocket", "meadow", "silver", "window", "basket", "thunder",
];

/// Items whose multilabel is spelled out by three cue words in the
/// hypothesis, one slot per label, so every scheme is recoverable by a
/// linear model. Combinations are drawn uniformly from the seven nonempty
/// sets and votes are split evenly over the set's labels.
pub fn separable_items(n: usize, seed: u64) -> Result<Vec<LabeledItem>> {
    let mut rng = rng::stream(seed, 0);
    (0..n)
        .map(|i| {
            let set = LabelSet::COMBINATIONS[rng.random_range(0..7)];
            let mut hypothesis: Vec<&str> = NliLabel::ALL
                .iter()
                .map(|&l| if set.contains(l) { CUES[l.index()].0 } else { CUES[l.index()].1 })
                .collect();
            hypothesis.push(FILLER[rng.random_range(0..FILLER.len())]);
            let premise: Vec<&str> = (0..6).map(|_| FILLER[rng.random_range(0..FILLER.len())]).collect();
            let item = ItemRecord {
                uid: format!("syn{i:05}"),
                premise: premise.join(" "),
                hypothesis: hypothesis.join(" "),
                genre: None,
                counts: even_votes(set),
                source: Source::Chaos100,
                original_gold: None,
            };
            Ok(LabeledItem::new(item, SchemeLabels::from_multilabel(set)?))
        })
        .collect()
}

/// 100 votes split as evenly as possible over `set`, remainder to the
/// earliest labels.
fn even_votes(set: LabelSet) -> AnnotationCounts {
    let k = set.len() as u32;
    let mut votes = [0u32; 3];
    for (rank, label) in set.iter().enumerate() {
        votes[label.index()] = 100 / k + u32::from((rank as u32) < 100 % k);
    }
    AnnotationCounts::new(votes[0], votes[1], votes[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relabel::{relabel_item, RelabelPolicy};

    #[test]
    fn items_survive_relabeling() {
        let items = separable_items(200, 3).unwrap();
        for it in &items {
            let relabeled = relabel_item(&it.item, &RelabelPolicy::default()).unwrap();
            assert_eq!(relabeled, it.labels());
            assert_eq!(it.item.counts.total(), 100);
        }
        assert_eq!(items, separable_items(200, 3).unwrap());
    }
}
