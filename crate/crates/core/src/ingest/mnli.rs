use std::io::BufRead;

use serde_json::{json, Value};

use super::{check_total, opt_str_field, parse_jsonl, str_field, ItemRecord, ParseOptions, Parsed, RecordError, Source};
use crate::error::Result;
use crate::labels::{AnnotationCounts, NliLabel};

/// Parses the MNLI dev release format. Votes are tallied from the five
/// `annotator_labels`; `gold_label` is kept verbatim.
pub fn parse_mnli_jsonl<R: BufRead>(reader: R, options: ParseOptions) -> Result<Parsed<ItemRecord>> {
    parse_jsonl(reader, options, parse_record)
}

fn parse_record(value: &Value) -> Result<ItemRecord, RecordError> {
    let uid = str_field(value, "pairID", None)?;
    if uid.is_empty() {
        return Err(RecordError::new(None, "empty pairID"));
    }
    let uid_ref = Some(uid);
    let labels = value
        .get("annotator_labels")
        .ok_or_else(|| RecordError::new(uid_ref, "missing field annotator_labels"))?
        .as_array()
        .ok_or_else(|| RecordError::new(uid_ref, "annotator_labels is not a list"))?;
    let mut counts = AnnotationCounts::default();
    for label in labels {
        let name = label
            .as_str()
            .ok_or_else(|| RecordError::new(uid_ref, "annotator label is not a string"))?;
        let label = NliLabel::from_name(name)
            .ok_or_else(|| RecordError::new(uid_ref, format!("unknown NLI label '{name}'")))?;
        counts.add_vote(label);
    }
    if labels.len() != 5 {
        return Err(RecordError::new(
            uid_ref,
            format!("expected 5 annotator_labels, found {}", labels.len()),
        ));
    }
    check_total(&counts, Source::Mnli5, uid)?;
    Ok(ItemRecord {
        uid: uid.to_string(),
        premise: str_field(value, "sentence1", uid_ref)?.to_string(),
        hypothesis: str_field(value, "sentence2", uid_ref)?.to_string(),
        genre: opt_str_field(value, "genre"),
        counts,
        source: Source::Mnli5,
        original_gold: opt_str_field(value, "gold_label"),
    })
}

/// Serializes an item back into the MNLI fields the parser reads. The order
/// of `annotator_labels` is canonical (E, then N, then C).
pub fn to_mnli_json(item: &ItemRecord) -> Value {
    let labels: Vec<&str> = NliLabel::ALL
        .into_iter()
        .flat_map(|l| std::iter::repeat_n(l.name(), item.counts.get(l) as usize))
        .collect();
    let mut value = json!({
        "pairID": item.uid,
        "sentence1": item.premise,
        "sentence2": item.hypothesis,
        "annotator_labels": labels,
    });
    if let Some(gold) = &item.original_gold {
        value["gold_label"] = json!(gold);
    }
    if let Some(genre) = &item.genre {
        value["genre"] = json!(genre);
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(labels: &[&str], gold: &str) -> String {
        json!({
            "pairID": "p1",
            "sentence1": "A man sleeps.",
            "sentence2": "Someone rests.",
            "annotator_labels": labels,
            "gold_label": gold,
            "genre": "fiction",
        })
        .to_string()
    }

    #[test]
    fn tallies_annotator_labels() {
        let input = line(&["entailment", "neutral", "entailment", "entailment", "neutral"], "entailment");
        let parsed = parse_mnli_jsonl(input.as_bytes(), ParseOptions::strict()).unwrap();
        let item = &parsed.records[0];
        assert_eq!(item.counts, AnnotationCounts::new(3, 2, 0));
        assert_eq!(item.source, Source::Mnli5);
        assert_eq!(item.genre.as_deref(), Some("fiction"));
    }

    #[test]
    fn no_majority_gold_is_preserved() {
        let input = line(&["entailment", "neutral", "contradiction", "entailment", "neutral"], "-");
        let parsed = parse_mnli_jsonl(input.as_bytes(), ParseOptions::strict()).unwrap();
        let item = &parsed.records[0];
        assert_eq!(item.counts, AnnotationCounts::new(2, 2, 1));
        assert_eq!(item.original_gold.as_deref(), Some("-"));
    }

    #[test]
    fn unknown_label_named() {
        let input = line(&["entailment", "maybe", "entailment", "entailment", "neutral"], "-");
        let err = parse_mnli_jsonl(input.as_bytes(), ParseOptions::strict()).unwrap_err();
        assert!(err.to_string().contains("unknown NLI label 'maybe'"), "{err}");
    }

    #[test]
    fn wrong_annotation_count() {
        let input = line(&["entailment", "entailment", "entailment", "neutral"], "entailment");
        let parsed = parse_mnli_jsonl(input.as_bytes(), ParseOptions::default()).unwrap();
        assert!(parsed.records.is_empty());
        assert!(parsed.diagnostics[0].message.contains("expected 5"));
    }
}
