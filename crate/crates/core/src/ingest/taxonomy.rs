use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Collector, HasUid, ParseOptions, Parsed, RecordError};
use crate::error::{Error, Result};

/// The three high-level classes of disagreement sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HighLevelClass {
    UncertaintyInMeaning,
    GuidelineUnderspecification,
    AnnotatorBehavior,
}

/// A potential source of annotator disagreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaxonomyCategory {
    Lexical,
    Implicature,
    Presupposition,
    ProbabilisticEnrichment,
    Imperfection,
    Coreference,
    TemporalReference,
    InterrogativeHypothesis,
    AccommodatingMinimallyAddedContent,
    HighOverlap,
}

impl TaxonomyCategory {
    pub const ALL: [TaxonomyCategory; 10] = [
        TaxonomyCategory::Lexical,
        TaxonomyCategory::Implicature,
        TaxonomyCategory::Presupposition,
        TaxonomyCategory::ProbabilisticEnrichment,
        TaxonomyCategory::Imperfection,
        TaxonomyCategory::Coreference,
        TaxonomyCategory::TemporalReference,
        TaxonomyCategory::InterrogativeHypothesis,
        TaxonomyCategory::AccommodatingMinimallyAddedContent,
        TaxonomyCategory::HighOverlap,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn class(self) -> HighLevelClass {
        use TaxonomyCategory::*;
        match self {
            Lexical | Implicature | Presupposition | ProbabilisticEnrichment | Imperfection => {
                HighLevelClass::UncertaintyInMeaning
            }
            Coreference | TemporalReference | InterrogativeHypothesis => HighLevelClass::GuidelineUnderspecification,
            AccommodatingMinimallyAddedContent | HighOverlap => HighLevelClass::AnnotatorBehavior,
        }
    }

    /// Identifier used in annotation files.
    pub fn canonical_name(self) -> &'static str {
        use TaxonomyCategory::*;
        match self {
            Lexical => "Lexical",
            Implicature => "Implicature",
            Presupposition => "Presupposition",
            ProbabilisticEnrichment => "ProbabilisticEnrichment",
            Imperfection => "Imperfection",
            Coreference => "Coreference",
            TemporalReference => "TemporalReference",
            InterrogativeHypothesis => "InterrogativeHypothesis",
            AccommodatingMinimallyAddedContent => "AccommodatingMinimallyAddedContent",
            HighOverlap => "HighOverlap",
        }
    }

    /// Human-readable name, as used in per-category reports.
    pub fn display_name(self) -> &'static str {
        use TaxonomyCategory::*;
        match self {
            Lexical => "Lexical",
            Implicature => "Implicature",
            Presupposition => "Presupposition",
            ProbabilisticEnrichment => "Probabilistic Enrichment",
            Imperfection => "Imperfection",
            Coreference => "Coreference",
            TemporalReference => "Temporal Reference",
            InterrogativeHypothesis => "Interrogative Hypothesis",
            AccommodatingMinimallyAddedContent => "Accommodating",
            HighOverlap => "High Overlap",
        }
    }

    /// Abbreviation used when listing combinations of categories.
    pub fn short_name(self) -> &'static str {
        use TaxonomyCategory::*;
        match self {
            ProbabilisticEnrichment => "Probabilistic",
            TemporalReference => "Temporal",
            InterrogativeHypothesis => "Interrogative",
            AccommodatingMinimallyAddedContent => "Accommodating",
            other => other.display_name(),
        }
    }

    fn valid_names() -> String {
        Self::ALL.iter().map(|c| c.canonical_name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for TaxonomyCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

impl FromStr for TaxonomyCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.canonical_name() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown category {s:?}; valid names: {}",
                    Self::valid_names()
                ))
            })
    }
}

/// A set of taxonomy categories (possibly empty), stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CategorySet(u16);

impl TryFrom<String> for CategorySet {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<CategorySet> for String {
    fn from(set: CategorySet) -> Self {
        set.to_string()
    }
}

impl CategorySet {
    pub const fn empty() -> Self {
        CategorySet(0)
    }

    pub fn from_bits(bits: u16) -> Self {
        CategorySet(bits & 0x3ff)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn insert(&mut self, category: TaxonomyCategory) {
        self.0 |= 1 << category.index();
    }

    pub fn contains(self, category: TaxonomyCategory) -> bool {
        self.0 & (1 << category.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersection(self, other: CategorySet) -> CategorySet {
        CategorySet(self.0 & other.0)
    }

    pub fn union(self, other: CategorySet) -> CategorySet {
        CategorySet(self.0 | other.0)
    }

    pub fn is_subset(self, other: CategorySet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = TaxonomyCategory> {
        TaxonomyCategory::ALL.into_iter().filter(move |c| self.contains(*c))
    }

    /// Short names joined alphabetically, e.g. `"Lexical, Temporal"`; `"None"` when empty.
    pub fn combination_label(self) -> String {
        if self.is_empty() {
            return "None".to_string();
        }
        let mut names: Vec<&str> = self.iter().map(TaxonomyCategory::short_name).collect();
        names.sort_unstable();
        names.join(", ")
    }
}

impl FromIterator<TaxonomyCategory> for CategorySet {
    fn from_iter<I: IntoIterator<Item = TaxonomyCategory>>(iter: I) -> Self {
        let mut set = CategorySet::empty();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

impl fmt::Debug for CategorySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for CategorySet {
    /// Canonical names separated by `;`, the annotation file form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(TaxonomyCategory::canonical_name).collect();
        f.write_str(&names.join(";"))
    }
}

impl FromStr for CategorySet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut set = CategorySet::empty();
        for name in s.split(';').map(str::trim).filter(|n| !n.is_empty()) {
            set.insert(name.parse()?);
        }
        Ok(set)
    }
}

/// The categories one annotator assigned to one item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyAnnotation {
    pub item_uid: String,
    pub annotator_id: String,
    pub categories: CategorySet,
}

impl HasUid for TaxonomyAnnotation {
    fn uid(&self) -> &str {
        &self.item_uid
    }
}

const HEADER: [&str; 3] = ["item_uid", "annotator_id", "categories"];

/// Parses `item_uid,annotator_id,categories` rows; categories are canonical
/// names separated by `;` and may be empty.
pub fn parse_taxonomy_annotations<R: Read>(reader: R, options: ParseOptions) -> Result<Parsed<TaxonomyAnnotation>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv_reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            uid: None,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Parse {
            line: 1,
            uid: None,
            message: format!("expected header {:?}, found {:?}", HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut collector = Collector::with_key(options, |a: &TaxonomyAnnotation| {
        format!("{}\u{1f}{}", a.item_uid, a.annotator_id)
    });
    for row in csv_reader.records() {
        let (line, outcome) = match row {
            Ok(record) => {
                let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
                (line, parse_row(&record))
            }
            Err(err) => {
                let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
                (line, Err(RecordError::new(None, err.to_string())))
            }
        };
        collector.push(line, outcome)?;
    }
    Ok(collector.finish())
}

fn parse_row(record: &csv::StringRecord) -> Result<TaxonomyAnnotation, RecordError> {
    if record.iter().all(str::is_empty) {
        return Err(RecordError::new(None, "empty row"));
    }
    if record.len() != 3 {
        return Err(RecordError::new(
            record.get(0),
            format!("expected 3 fields, found {}", record.len()),
        ));
    }
    let item_uid = &record[0];
    let annotator_id = &record[1];
    if item_uid.is_empty() || annotator_id.is_empty() {
        return Err(RecordError::new(Some(item_uid), "item_uid and annotator_id must be nonempty"));
    }
    let categories: CategorySet = record[2]
        .parse()
        .map_err(|e: Error| RecordError::new(Some(item_uid), e.to_string()))?;
    Ok(TaxonomyAnnotation {
        item_uid: item_uid.to_string(),
        annotator_id: annotator_id.to_string(),
        categories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use TaxonomyCategory::*;

    fn parse(body: &str, options: ParseOptions) -> Result<Parsed<TaxonomyAnnotation>> {
        let input = format!("item_uid,annotator_id,categories\n{body}");
        parse_taxonomy_annotations(input.as_bytes(), options)
    }

    #[test]
    fn parses_categories() {
        let parsed = parse("p1,a1,Lexical;TemporalReference\np2,a1,\n", ParseOptions::strict()).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(
            parsed.records[0].categories,
            [Lexical, TemporalReference].into_iter().collect()
        );
        assert!(parsed.records[1].categories.is_empty());
    }

    #[test]
    fn unknown_category_lists_valid_names() {
        let err = parse("p3,a1,Vibes\n", ParseOptions::strict()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Vibes") && msg.contains("HighOverlap"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn duplicate_pair_rejected() {
        let body = "p1,a1,Lexical\np1,a2,Lexical\np1,a1,Coreference\n";
        let parsed = parse(body, ParseOptions::default()).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.diagnostics[0].line, 4);
        assert!(parse(body, ParseOptions::strict()).is_err());
    }

    #[test]
    fn bad_header() {
        let err = parse_taxonomy_annotations("uid,who,cats\np1,a1,\n".as_bytes(), ParseOptions::default());
        assert!(err.is_err());
    }

    #[test]
    fn class_mapping() {
        let uncertainty: Vec<_> = TaxonomyCategory::ALL
            .into_iter()
            .filter(|c| c.class() == HighLevelClass::UncertaintyInMeaning)
            .collect();
        assert_eq!(uncertainty, [Lexical, Implicature, Presupposition, ProbabilisticEnrichment, Imperfection]);
        assert_eq!(Coreference.class(), HighLevelClass::GuidelineUnderspecification);
        assert_eq!(InterrogativeHypothesis.class(), HighLevelClass::GuidelineUnderspecification);
        assert_eq!(HighOverlap.class(), HighLevelClass::AnnotatorBehavior);
    }

    #[test]
    fn combination_labels() {
        let set: CategorySet = [TemporalReference, Lexical].into_iter().collect();
        assert_eq!(set.combination_label(), "Lexical, Temporal");
        let set: CategorySet = [ProbabilisticEnrichment, Coreference].into_iter().collect();
        assert_eq!(set.combination_label(), "Coreference, Probabilistic");
        assert_eq!(CategorySet::empty().combination_label(), "None");
        assert_eq!(set.to_string().parse::<CategorySet>().unwrap(), set);
    }
}
