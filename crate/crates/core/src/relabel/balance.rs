use rand::seq::index::sample;

use super::LabeledItem;
use crate::error::{Error, Result};
use crate::ingest::Source;
use crate::labels::{LabelSet, NliLabel};
use crate::rng;

/// Size of the largest multilabel combination (EN, NC, EC or ENC).
pub fn auto_balance_target(items: &[LabeledItem]) -> usize {
    let counts = super::CountTable::of(items);
    counts.combinations[3..].iter().copied().max().unwrap_or(0)
}

/// Downsamples MNLI single-label items so each of E, N and C ends at
/// `target` items. Chaos single-label items and all multilabel items are
/// always kept. Output keeps input order.
pub fn downsample_balance(items: &[LabeledItem], target: usize, seed: u64) -> Result<Vec<LabeledItem>> {
    let mut keep = vec![true; items.len()];
    let mut shortfalls = Vec::new();
    for label in NliLabel::ALL {
        let single = LabelSet::singleton(label);
        let chaos = items
            .iter()
            .filter(|i| i.multilabel == single && i.source() == Source::Chaos100)
            .count();
        let mnli: Vec<usize> = items
            .iter()
            .enumerate()
            .filter(|(_, i)| i.multilabel == single && i.source() == Source::Mnli5)
            .map(|(idx, _)| idx)
            .collect();
        if chaos > target || chaos + mnli.len() < target {
            shortfalls.push(format!(
                "{}: {chaos} chaos + {} mnli available",
                label.letter(),
                mnli.len()
            ));
            continue;
        }
        for &idx in &mnli {
            keep[idx] = false;
        }
        // one stream per class so a class's selection does not depend on the others
        let mut rng = rng::stream(seed, label.index() as u64);
        for pick in sample(&mut rng, mnli.len(), target - chaos) {
            keep[mnli[pick]] = true;
        }
    }
    if !shortfalls.is_empty() {
        return Err(Error::InvalidInput(format!(
            "balance target {target} cannot be met ({})",
            shortfalls.join("; ")
        )));
    }
    Ok(items.iter().zip(keep).filter(|(_, k)| *k).map(|(i, _)| i.clone()).collect())
}

/// Uniform sample of `n` items without replacement, in input order.
pub fn sample_uniform<T: Clone>(items: &[T], n: usize, seed: u64) -> Result<Vec<T>> {
    if n > items.len() {
        return Err(Error::InvalidInput(format!(
            "cannot sample {n} items from {}",
            items.len()
        )));
    }
    let mut picks = sample(&mut rng::stream(seed, 0), items.len(), n).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|i| items[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relabel::tests::item;
    use crate::relabel::{CountTable, SchemeLabels};

    fn labeled(uid: String, source: Source, set: &str) -> LabeledItem {
        let votes = if source == Source::Mnli5 { [5, 0, 0] } else { [100, 0, 0] };
        LabeledItem::new(
            item(&uid, source, votes),
            SchemeLabels::from_multilabel(set.parse().unwrap()).unwrap(),
        )
    }

    fn pool() -> Vec<LabeledItem> {
        let mut items = Vec::new();
        for (set, chaos, mnli) in [("E", 3, 10), ("N", 1, 8), ("C", 0, 12), ("EN", 6, 2), ("NC", 2, 1)] {
            for i in 0..chaos {
                items.push(labeled(format!("c{set}{i}"), Source::Chaos100, set));
            }
            for i in 0..mnli {
                items.push(labeled(format!("m{set}{i}"), Source::Mnli5, set));
            }
        }
        items
    }

    #[test]
    fn balances_singles_to_target() {
        let items = pool();
        let target = auto_balance_target(&items);
        assert_eq!(target, 8);
        let out = downsample_balance(&items, target, 7).unwrap();
        let counts = CountTable::of(&out);
        assert_eq!(&counts.combinations[..3], &[8, 8, 8]);
        assert_eq!(counts.get("EN".parse().unwrap()), 8);
        assert_eq!(counts.get("NC".parse().unwrap()), 3);
        // chaos singles always survive
        assert!(out.iter().any(|i| i.item.uid == "cN0"));
        // input order preserved
        let positions: Vec<usize> = out
            .iter()
            .map(|o| items.iter().position(|i| i.item.uid == o.item.uid).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn deterministic_per_seed() {
        let items = pool();
        let uids = |seed| -> Vec<String> {
            downsample_balance(&items, 8, seed).unwrap().into_iter().map(|i| i.item.uid).collect()
        };
        assert_eq!(uids(3), uids(3));
        assert_ne!(uids(3), uids(4));
    }

    #[test]
    fn target_exceeding_availability() {
        let err = downsample_balance(&pool(), 10, 0).unwrap_err().to_string();
        assert!(err.contains("N: 1 chaos + 8 mnli"), "{err}");
        let err = downsample_balance(&pool(), 2, 0).unwrap_err().to_string();
        assert!(err.contains("E: 3 chaos"), "{err}");
    }

    #[test]
    fn uniform_sample() {
        let xs: Vec<u32> = (0..50).collect();
        let s = sample_uniform(&xs, 10, 1).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, sample_uniform(&xs, 10, 1).unwrap());
        assert!(sample_uniform(&xs, 51, 1).is_err());
    }
}
