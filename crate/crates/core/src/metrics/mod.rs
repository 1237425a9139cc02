//! Evaluation: 4-way and multilabel scores, confusion and contingency
//! matrices, entropy summaries and the Mann-Whitney test. Rates are
//! percentages, rounded only when written out.

mod classification;
mod mann_whitney;
mod summary;

pub use classification::{
    confusion, contingency, fourway_report, mean_rows, multilabel_report, rows_to_csv, ClassScores,
    ConfusionMatrix4, ContingencyMatrix, FourWayReport, MultilabelOptions, MultilabelReport,
};
pub use mann_whitney::{mann_whitney_two_sided, MannWhitney, EXACT_MAX_PRODUCT};
pub use summary::{entropy_by_group, quantile, summarize, EntropyGroups, Summary};
