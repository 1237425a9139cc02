//! Gold-label construction from vote counts.
//!
//! Items are relabeled under both schemes at once. ChaosNLI items (100
//! votes) get a single label when the majority is above
//! `chaos_single_min_votes`, and a multilabel of every label with at least
//! `chaos_multilabel_min_votes` when the majority is below
//! `chaos_disagree_max_votes`; everything in between is discarded. MNLI items
//! (5 votes) get a single label when unanimous and a multilabel of every
//! label with at least `mnli_multilabel_min_votes` when at least two labels
//! reach `mnli_complicated_min_votes`.

mod balance;
mod split;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{HasUid, ItemRecord, Source};
use crate::labels::{majority, multilabel_to_fourway, FourWayLabel, LabelSet, NliLabel};

pub use balance::{auto_balance_target, downsample_balance, sample_uniform};
pub use split::{split_sizes_from_ratios, stratified_split, SplitPart, SplitResult, SplitSizes, SplitSpec, Stratify};

/// Vote thresholds of the relabeling rules. Bounds are exclusive or
/// inclusive as noted per field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelabelPolicy {
    /// Majority must be strictly greater for a single Chaos label.
    pub chaos_single_min_votes: u32,
    /// Majority must be strictly smaller for a Chaos multilabel.
    pub chaos_disagree_max_votes: u32,
    /// Inclusive vote count for a label to join a Chaos multilabel.
    pub chaos_multilabel_min_votes: u32,
    /// Votes on one label needed for a single MNLI label.
    pub mnli_unanimous: u32,
    /// Inclusive vote count; two labels reaching it make an MNLI item Complicated.
    pub mnli_complicated_min_votes: u32,
    /// Inclusive vote count for a label to join an MNLI multilabel.
    pub mnli_multilabel_min_votes: u32,
}

impl Default for RelabelPolicy {
    fn default() -> Self {
        RelabelPolicy {
            chaos_single_min_votes: 80,
            chaos_disagree_max_votes: 60,
            chaos_multilabel_min_votes: 20,
            mnli_unanimous: 5,
            mnli_complicated_min_votes: 2,
            mnli_multilabel_min_votes: 2,
        }
    }
}

impl RelabelPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.chaos_disagree_max_votes > self.chaos_single_min_votes {
            return Err(Error::Config(format!(
                "chaos_disagree_max_votes ({}) must not exceed chaos_single_min_votes ({})",
                self.chaos_disagree_max_votes, self.chaos_single_min_votes
            )));
        }
        if self.chaos_multilabel_min_votes > self.chaos_disagree_max_votes {
            return Err(Error::Config(format!(
                "chaos_multilabel_min_votes ({}) must not exceed chaos_disagree_max_votes ({})",
                self.chaos_multilabel_min_votes, self.chaos_disagree_max_votes
            )));
        }
        if self.mnli_unanimous == 0 || self.mnli_unanimous > 5 {
            return Err(Error::Config(format!(
                "mnli_unanimous must lie in 1..=5, got {}",
                self.mnli_unanimous
            )));
        }
        Ok(())
    }
}

/// Gold labels of one item under both schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeLabels {
    pub fourway: FourWayLabel,
    pub multilabel: LabelSet,
}

impl SchemeLabels {
    /// Derives the 4-way label from a nonempty multilabel.
    pub fn from_multilabel(multilabel: LabelSet) -> Result<Self> {
        Ok(SchemeLabels {
            fourway: multilabel_to_fourway(multilabel)?,
            multilabel,
        })
    }

    pub fn is_consistent(&self) -> bool {
        multilabel_to_fourway(self.multilabel).ok() == Some(self.fourway)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscardReason {
    /// Chaos majority between the two thresholds.
    ChaosGrayZone,
    /// MNLI item matching neither rule, e.g. [4,1,0] or [3,1,1].
    MnliNoRule,
}

impl DiscardReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscardReason::ChaosGrayZone => "chaos-gray-zone",
            DiscardReason::MnliNoRule => "mnli-no-rule",
        }
    }
}

impl fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Applies the relabeling rules to one item.
pub fn relabel_item(item: &ItemRecord, policy: &RelabelPolicy) -> Result<SchemeLabels, DiscardReason> {
    // vote totals are checked at ingest; the rules only look at thresholds
    let counts = &item.counts;
    let top = majority(counts);
    let labels_with = |min: u32| -> LabelSet { NliLabel::ALL.into_iter().filter(|l| counts.get(*l) >= min).collect() };
    let multilabel = match item.source {
        Source::Chaos100 => {
            if top.votes > policy.chaos_single_min_votes {
                LabelSet::singleton(top.label)
            } else if top.votes < policy.chaos_disagree_max_votes {
                labels_with(policy.chaos_multilabel_min_votes)
            } else {
                return Err(DiscardReason::ChaosGrayZone);
            }
        }
        Source::Mnli5 => {
            if top.votes >= policy.mnli_unanimous {
                LabelSet::singleton(top.label)
            } else if labels_with(policy.mnli_complicated_min_votes).len() >= 2 {
                labels_with(policy.mnli_multilabel_min_votes)
            } else {
                return Err(DiscardReason::MnliNoRule);
            }
        }
    };
    SchemeLabels::from_multilabel(multilabel).map_err(|_| match item.source {
        Source::Chaos100 => DiscardReason::ChaosGrayZone,
        Source::Mnli5 => DiscardReason::MnliNoRule,
    })
}

/// An item together with its gold labels, the unit written to labeled JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledItem {
    #[serde(flatten)]
    pub item: ItemRecord,
    pub fourway: FourWayLabel,
    pub multilabel: LabelSet,
    #[serde(default)]
    pub split: Option<SplitPart>,
}

impl LabeledItem {
    pub fn new(item: ItemRecord, labels: SchemeLabels) -> Self {
        LabeledItem {
            item,
            fourway: labels.fourway,
            multilabel: labels.multilabel,
            split: None,
        }
    }

    pub fn labels(&self) -> SchemeLabels {
        SchemeLabels {
            fourway: self.fourway,
            multilabel: self.multilabel,
        }
    }

    pub fn source(&self) -> Source {
        self.item.source
    }

    /// Parses one labeled JSONL line, checking the two schemes agree.
    pub fn from_json_line(line: &str) -> Result<Self> {
        let labeled: LabeledItem =
            serde_json::from_str(line).map_err(|e| Error::InvalidInput(format!("labeled record: {e}")))?;
        if !labeled.labels().is_consistent() {
            return Err(Error::InvalidInput(format!(
                "uid {}: fourway {} inconsistent with multilabel {}",
                labeled.item.uid, labeled.fourway, labeled.multilabel
            )));
        }
        Ok(labeled)
    }
}

impl HasUid for LabeledItem {
    fn uid(&self) -> &str {
        &self.item.uid
    }
}

/// Item counts per multilabel combination, plus the Complicated total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CountTable {
    /// Indexed like [`LabelSet::COMBINATIONS`]: E, N, C, EN, NC, EC, ENC.
    pub combinations: [usize; 7],
}

impl CountTable {
    pub const CSV_HEADER: &'static str = "dataset,E,N,C,EN,NC,EC,ENC,Complicated";

    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a LabelSet>) -> Self {
        let mut table = CountTable::default();
        for set in labels {
            if let Some(i) = set.combination_index() {
                table.combinations[i] += 1;
            }
        }
        table
    }

    pub fn of(items: &[LabeledItem]) -> Self {
        Self::from_labels(items.iter().map(|i| &i.multilabel))
    }

    pub fn get(&self, set: LabelSet) -> usize {
        set.combination_index().map_or(0, |i| self.combinations[i])
    }

    /// Number of items whose 4-way label is Complicated.
    pub fn complicated(&self) -> usize {
        self.combinations[3..].iter().sum()
    }

    pub fn total(&self) -> usize {
        self.combinations.iter().sum()
    }

    pub fn csv_row(&self, dataset: &str) -> String {
        let cells: Vec<String> = self.combinations.iter().map(usize::to_string).collect();
        format!("{dataset},{},{}", cells.join(","), self.complicated())
    }
}

/// Output of [`relabel_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct RelabeledDataset {
    /// Retained items, in input order.
    pub labeled: Vec<LabeledItem>,
    pub counts: CountTable,
    pub discards: BTreeMap<(Source, DiscardReason), usize>,
}

impl RelabeledDataset {
    pub fn discarded(&self) -> usize {
        self.discards.values().sum()
    }
}

pub fn relabel_dataset(items: &[ItemRecord], policy: &RelabelPolicy) -> Result<RelabeledDataset> {
    policy.validate()?;
    let mut seen = HashSet::with_capacity(items.len());
    let mut labeled = Vec::new();
    let mut discards = BTreeMap::new();
    for item in items {
        if !seen.insert(item.uid.as_str()) {
            return Err(Error::DuplicateUid(item.uid.clone()));
        }
        match relabel_item(item, policy) {
            Ok(labels) => labeled.push(LabeledItem::new(item.clone(), labels)),
            Err(reason) => *discards.entry((item.source, reason)).or_insert(0) += 1,
        }
    }
    let counts = CountTable::of(&labeled);
    Ok(RelabeledDataset {
        labeled,
        counts,
        discards,
    })
}

/// MNLI items on which at most two of the five annotators agree.
pub fn filter_no_majority(items: &[ItemRecord]) -> Result<Vec<ItemRecord>> {
    if let Some(item) = items.iter().find(|i| i.source != Source::Mnli5) {
        return Err(Error::InvalidInput(format!(
            "uid {}: no-majority filtering applies to 5-vote MNLI items only",
            item.uid
        )));
    }
    Ok(items
        .iter()
        .filter(|i| majority(&i.counts).votes <= 2)
        .cloned()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::AnnotationCounts;
    use proptest::prelude::*;

    pub(crate) fn item(uid: &str, source: Source, votes: [u32; 3]) -> ItemRecord {
        ItemRecord {
            uid: uid.to_string(),
            premise: "p".into(),
            hypothesis: "h".into(),
            genre: None,
            counts: AnnotationCounts::from(votes),
            source,
            original_gold: None,
        }
    }

    fn relabel(source: Source, votes: [u32; 3]) -> Result<(FourWayLabel, String), DiscardReason> {
        relabel_item(&item("x", source, votes), &RelabelPolicy::default())
            .map(|l| (l.fourway, l.multilabel.to_string()))
    }

    #[test]
    fn chaos_rules() {
        use FourWayLabel::*;
        assert_eq!(relabel(Source::Chaos100, [82, 17, 1]), Ok((Entailment, "E".into())));
        assert_eq!(relabel(Source::Chaos100, [65, 33, 2]), Err(DiscardReason::ChaosGrayZone));
        assert_eq!(relabel(Source::Chaos100, [36, 34, 30]), Ok((Complicated, "ENC".into())));
        assert_eq!(relabel(Source::Chaos100, [2, 39, 41]), Ok((Complicated, "NC".into())));
    }

    #[test]
    fn chaos_boundaries() {
        use FourWayLabel::*;
        assert_eq!(relabel(Source::Chaos100, [80, 20, 0]), Err(DiscardReason::ChaosGrayZone));
        assert_eq!(relabel(Source::Chaos100, [60, 40, 0]), Err(DiscardReason::ChaosGrayZone));
        assert_eq!(relabel(Source::Chaos100, [81, 19, 0]), Ok((Entailment, "E".into())));
        assert_eq!(relabel(Source::Chaos100, [59, 21, 20]), Ok((Complicated, "ENC".into())));
        assert_eq!(relabel(Source::Chaos100, [59, 22, 19]), Ok((Complicated, "EN".into())));
    }

    #[test]
    fn mnli_rules() {
        use FourWayLabel::*;
        assert_eq!(relabel(Source::Mnli5, [3, 2, 0]), Ok((Complicated, "EN".into())));
        assert_eq!(relabel(Source::Mnli5, [2, 2, 1]), Ok((Complicated, "EN".into())));
        assert_eq!(relabel(Source::Mnli5, [5, 0, 0]), Ok((Entailment, "E".into())));
        assert_eq!(relabel(Source::Mnli5, [0, 0, 5]), Ok((Contradiction, "C".into())));
        assert_eq!(relabel(Source::Mnli5, [3, 1, 1]), Err(DiscardReason::MnliNoRule));
        assert_eq!(relabel(Source::Mnli5, [4, 1, 0]), Err(DiscardReason::MnliNoRule));
        assert_eq!(relabel(Source::Mnli5, [4, 0, 0]), Err(DiscardReason::MnliNoRule));
    }

    #[test]
    fn policy_invariants() {
        assert!(RelabelPolicy::default().validate().is_ok());
        let bad = RelabelPolicy {
            chaos_disagree_max_votes: 90,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RelabelPolicy {
            chaos_multilabel_min_votes: 70,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dataset_tables() {
        let empty = relabel_dataset(&[], &RelabelPolicy::default()).unwrap();
        assert_eq!(empty.counts, CountTable::default());
        assert_eq!(empty.counts.csv_row("Chaos"), "Chaos,0,0,0,0,0,0,0,0");

        let items = vec![
            item("a", Source::Chaos100, [82, 17, 1]),
            item("b", Source::Chaos100, [65, 33, 2]),
            item("c", Source::Chaos100, [36, 34, 30]),
            item("d", Source::Chaos100, [2, 39, 41]),
            item("e", Source::Mnli5, [3, 1, 1]),
        ];
        let out = relabel_dataset(&items, &RelabelPolicy::default()).unwrap();
        assert_eq!(out.labeled.len(), 3, "{:?}", out.discards);
        assert_eq!(out.counts.csv_row("x"), "x,1,0,0,0,1,0,1,2");
        assert_eq!(out.discards[&(Source::Chaos100, DiscardReason::ChaosGrayZone)], 1);
        assert_eq!(out.discards[&(Source::Mnli5, DiscardReason::MnliNoRule)], 1);

        let dup = vec![item("a", Source::Chaos100, [82, 17, 1]), item("a", Source::Chaos100, [82, 17, 1])];
        assert!(relabel_dataset(&dup, &RelabelPolicy::default()).is_err());
    }

    #[test]
    fn no_majority_filter() {
        let items = vec![
            item("a", Source::Mnli5, [2, 2, 1]),
            item("b", Source::Mnli5, [3, 2, 0]),
            item("c", Source::Mnli5, [2, 1, 2]),
        ];
        let kept: Vec<_> = filter_no_majority(&items).unwrap().into_iter().map(|i| i.uid).collect();
        assert_eq!(kept, ["a", "c"]);
        assert!(filter_no_majority(&[item("z", Source::Chaos100, [50, 50, 0])]).is_err());
    }

    #[test]
    fn labeled_json_round_trip() {
        let labeled = LabeledItem::new(
            item("a", Source::Chaos100, [2, 39, 41]),
            SchemeLabels::from_multilabel("NC".parse().unwrap()).unwrap(),
        );
        let line = serde_json::to_string(&labeled).unwrap();
        assert!(line.contains(r#""multilabel":"NC""#), "{line}");
        assert!(line.contains(r#""source":"chaos""#), "{line}");
        assert_eq!(LabeledItem::from_json_line(&line).unwrap(), labeled);
        let tampered = line.replace(r#""fourway":"Complicated""#, r#""fourway":"E""#);
        assert!(LabeledItem::from_json_line(&tampered).is_err());
    }

    fn chaos_counts() -> impl Strategy<Value = [u32; 3]> {
        (0u32..=100, 0u32..=100).prop_filter_map("sum to 100", |(a, b)| {
            (a + b <= 100).then(|| [a, b, 100 - a - b])
        })
    }

    proptest! {
        #[test]
        fn chaos_invariants(votes in chaos_counts()) {
            let policy = RelabelPolicy::default();
            let top = majority(&AnnotationCounts::from(votes));
            match relabel_item(&item("x", Source::Chaos100, votes), &policy) {
                Ok(labels) => {
                    prop_assert!(labels.is_consistent());
                    prop_assert!(labels.multilabel.contains(top.label));
                    prop_assert!(!(60..=80).contains(&top.votes));
                }
                Err(reason) => {
                    prop_assert_eq!(reason, DiscardReason::ChaosGrayZone);
                    prop_assert!((60..=80).contains(&top.votes));
                }
            }
        }

        #[test]
        fn relabel_commutes_with_permutation(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let mut items: Vec<ItemRecord> = (0..40u32)
                .map(|i| item(&format!("u{i}"), Source::Mnli5, [(i % 6).min(5), 5 - (i % 6).min(5), 0]))
                .collect();
            let base = relabel_dataset(&items, &RelabelPolicy::default()).unwrap();
            items.shuffle(&mut crate::rng::stream(seed, 0));
            let shuffled = relabel_dataset(&items, &RelabelPolicy::default()).unwrap();
            prop_assert_eq!(base.counts, shuffled.counts);
            for l in &shuffled.labeled {
                let original = base.labeled.iter().find(|b| b.item.uid == l.item.uid).unwrap();
                prop_assert_eq!(original.labels(), l.labels());
            }
        }
    }
}
