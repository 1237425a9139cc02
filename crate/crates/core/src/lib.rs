//! Annotation analytics for natural language inference disagreement.
//!
//! The crate turns multi-annotator NLI vote counts into categorical gold
//! labels under two schemes (a 4-way scheme with a `Complicated` class and a
//! multilabel scheme over {E, N, C}), measures agreement on set-valued
//! disagreement-source annotations, trains small linear baselines for each
//! scheme and scores prediction files.
//!
//! | module | contents |
//! |---|---|
//! | [`labels`] | label types, vote counts, distribution / multilabel / 4-way conversions |
//! | [`ingest`] | ChaosNLI, MNLI, taxonomy and prediction file parsers |
//! | [`relabel`] | relabeling policy, class balancing, stratified splits |
//! | [`agreement`] | MASI distance, Krippendorff's alpha, category statistics |
//! | [`metrics`] | 4-way and multilabel reports, confusion tables, Mann-Whitney U |
//! | [`baseline`] | features, softmax / sigmoid / MixUp linear models and their trainer |
//!
//! A guide with worked examples lives in the `book/` directory of the
//! repository; its code listings are compiled and run as doc-tests.

pub mod agreement;
pub mod baseline;
pub mod error;
pub mod ingest;
pub mod labels;
pub mod metrics;
pub mod relabel;
pub mod rng;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/labels.md")]
    mod labels {}
    #[doc = include_str!("../../../book/src/relabeling.md")]
    mod relabeling {}
    #[doc = include_str!("../../../book/src/agreement.md")]
    mod agreement {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/baseline.md")]
    mod baseline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
