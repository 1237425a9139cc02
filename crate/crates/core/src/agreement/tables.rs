use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{CategorySet, ItemRecord, Source, TaxonomyAnnotation, TaxonomyCategory};
use crate::labels::{majority, AnnotationCounts, FourWayLabel, LabelSet};

/// Aggregated categories for one item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Adjudication {
    pub item_uid: String,
    pub categories: CategorySet,
    /// Annotators assigned categories but none in common.
    pub needs_reconciliation: bool,
}

/// Intersection of two annotators' category sets for the same item.
pub fn intersect_adjudicate(a: &TaxonomyAnnotation, b: &TaxonomyAnnotation) -> Result<Adjudication> {
    if a.item_uid != b.item_uid {
        return Err(Error::InvalidInput(format!(
            "cannot adjudicate different items {} and {}",
            a.item_uid, b.item_uid
        )));
    }
    let categories = a.categories.intersection(b.categories);
    Ok(Adjudication {
        item_uid: a.item_uid.clone(),
        categories,
        needs_reconciliation: categories.is_empty() && !a.categories.union(b.categories).is_empty(),
    })
}

/// Intersects all annotations of each item, in order of first appearance.
/// A singly-annotated item keeps its one set.
pub fn aggregate_by_intersection(annotations: &[TaxonomyAnnotation]) -> Vec<Adjudication> {
    let mut order: Vec<&str> = Vec::new();
    let mut sets: HashMap<&str, (CategorySet, CategorySet)> = HashMap::new();
    for a in annotations {
        sets.entry(a.item_uid.as_str())
            .and_modify(|(inter, union)| {
                *inter = inter.intersection(a.categories);
                *union = union.union(a.categories);
            })
            .or_insert_with(|| {
                order.push(&a.item_uid);
                (a.categories, a.categories)
            });
    }
    order
        .into_iter()
        .map(|uid| {
            let (inter, union) = sets[uid];
            Adjudication {
                item_uid: uid.to_string(),
                categories: inter,
                needs_reconciliation: inter.is_empty() && !union.is_empty(),
            }
        })
        .collect()
}

/// Replaces the sets of reconciled items. Returns the uids that were flagged
/// for reconciliation but received no override.
pub fn apply_reconciliations(adjudications: &mut [Adjudication], overrides: &HashMap<String, CategorySet>) -> Vec<String> {
    let mut pending = Vec::new();
    for adj in adjudications.iter_mut() {
        match overrides.get(&adj.item_uid) {
            Some(set) => {
                adj.categories = *set;
                adj.needs_reconciliation = false;
            }
            None if adj.needs_reconciliation => pending.push(adj.item_uid.clone()),
            None => {}
        }
    }
    pending
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinationRow {
    pub combination: CategorySet,
    /// Short names joined by ", ", or "None".
    pub label: String,
    pub count: usize,
    pub percentage: f64,
}

/// Frequency of each exact category combination, most frequent first. Ties
/// put smaller combinations first, then order by label.
pub fn category_combination_frequencies(sets: &[CategorySet]) -> Vec<CombinationRow> {
    let mut counts: HashMap<CategorySet, usize> = HashMap::new();
    for set in sets {
        *counts.entry(*set).or_insert(0) += 1;
    }
    let total = sets.len() as f64;
    let mut rows: Vec<CombinationRow> = counts
        .into_iter()
        .map(|(combination, count)| CombinationRow {
            combination,
            label: combination.combination_label(),
            count,
            percentage: 100.0 * count as f64 / total,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(a.combination.len().cmp(&b.combination.len()))
            .then_with(|| a.label.cmp(&b.label))
    });
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdKind {
    /// Divides by n - 1; 0 for a single value.
    #[default]
    Sample,
    Population,
}

/// Mean and standard deviation.
pub fn mean_std(values: &[f64], kind: StdKind) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let denom = match kind {
        StdKind::Sample if values.len() > 1 => n - 1.0,
        StdKind::Sample => return (mean, 0.0),
        StdKind::Population => n,
    };
    (mean, (ss / denom).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceConfig {
    /// Inclusive majority count for an item to converge.
    pub threshold: u32,
    pub std: StdKind,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            threshold: 80,
            std: StdKind::Sample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub category: TaxonomyCategory,
    pub converge_pct: f64,
    pub total_items: usize,
    pub mean_majority: f64,
    pub std_majority: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// One row per category with items, in canonical category order.
    pub rows: Vec<ConvergenceRow>,
    pub notes: Vec<String>,
}

/// Per-category convergence over ChaosNLI items. An item counts in every
/// category of its set.
pub fn convergence_stats(items: &[(&ItemRecord, CategorySet)], config: &ConvergenceConfig) -> Result<ConvergenceReport> {
    if let Some((item, _)) = items.iter().find(|(i, _)| i.source != Source::Chaos100) {
        return Err(Error::InvalidInput(format!(
            "uid {}: convergence needs 100-vote ChaosNLI items",
            item.uid
        )));
    }
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for category in TaxonomyCategory::ALL {
        let majorities: Vec<f64> = items
            .iter()
            .filter(|(_, set)| set.contains(category))
            .map(|(item, _)| majority(&item.counts).votes as f64)
            .collect();
        if majorities.is_empty() {
            notes.push(format!("{}: no items, row omitted", category.display_name()));
            continue;
        }
        let converged = majorities.iter().filter(|m| **m >= config.threshold as f64).count();
        let (mean, std) = mean_std(&majorities, config.std);
        rows.push(ConvergenceRow {
            category,
            converge_pct: 100.0 * converged as f64 / majorities.len() as f64,
            total_items: majorities.len(),
            mean_majority: mean,
            std_majority: std,
        });
    }
    Ok(ConvergenceReport { rows, notes })
}

/// One categorized item with model predictions under both schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedItem {
    pub counts: AnnotationCounts,
    pub categories: CategorySet,
    pub fourway: FourWayLabel,
    pub multilabel: LabelSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRow {
    pub category: TaxonomyCategory,
    pub n_items: usize,
    pub converge_pct: f64,
    pub pct_complicated: f64,
    pub pct_multilabel: f64,
}

/// Per category: convergence against the share predicted Complicated and
/// the share predicted with more than one label.
pub fn scatter_data(items: &[PredictedItem], threshold: u32) -> (Vec<ScatterRow>, Vec<String>) {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for category in TaxonomyCategory::ALL {
        let members: Vec<&PredictedItem> = items.iter().filter(|i| i.categories.contains(category)).collect();
        if members.is_empty() {
            notes.push(format!("{}: no joined items, row omitted", category.display_name()));
            continue;
        }
        let n = members.len() as f64;
        let pct = |pred: &dyn Fn(&PredictedItem) -> bool| 100.0 * members.iter().filter(|i| pred(i)).count() as f64 / n;
        rows.push(ScatterRow {
            category,
            n_items: members.len(),
            converge_pct: pct(&|i| majority(&i.counts).votes >= threshold),
            pct_complicated: pct(&|i| i.fourway == FourWayLabel::Complicated),
            pct_multilabel: pct(&|i| i.multilabel.len() > 1),
        });
    }
    (rows, notes)
}
