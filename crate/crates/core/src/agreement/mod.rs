//! Agreement on the disagreement taxonomy: Krippendorff's alpha with MASI
//! distance, intersection adjudication, and per-category tables.

mod alpha;
mod masi;
mod tables;

pub use alpha::{krippendorff_alpha, nominal_distance, AgreementReport};
pub use masi::masi_distance;
pub use tables::{
    aggregate_by_intersection, apply_reconciliations, category_combination_frequencies, convergence_stats,
    intersect_adjudicate, mean_std, scatter_data, Adjudication, CombinationRow, ConvergenceConfig,
    ConvergenceReport, ConvergenceRow, PredictedItem, ScatterRow, StdKind,
};

use crate::error::Result;
use crate::ingest::TaxonomyAnnotation;

/// Alpha over taxonomy annotations with MASI distance; units are items.
pub fn taxonomy_alpha(annotations: &[TaxonomyAnnotation]) -> Result<AgreementReport> {
    let rows: Vec<(&str, &str, crate::ingest::CategorySet)> = annotations
        .iter()
        .map(|a| (a.item_uid.as_str(), a.annotator_id.as_str(), a.categories))
        .collect();
    krippendorff_alpha(&rows, |a, b| masi_distance(*a, *b))
}
