use std::io::BufRead;

use serde_json::{json, Value};

use super::{check_total, opt_str_field, parse_jsonl, str_field, ItemRecord, ParseOptions, Parsed, RecordError, Source};
use crate::error::Result;
use crate::labels::{counts_to_distribution, entropy_in, majority, AnnotationCounts, EntropyBase, NliLabel};

/// Parses the ChaosNLI release format (one JSON object per line).
///
/// Only `uid`, `label_counter`, `example.premise` and `example.hypothesis`
/// are read. The release's derived fields (`label_dist`, `majority_label`,
/// `entropy`) are cross-checked against recomputation in strict mode.
pub fn parse_chaosnli_jsonl<R: BufRead>(reader: R, options: ParseOptions) -> Result<Parsed<ItemRecord>> {
    parse_jsonl(reader, options, |value| {
        let item = parse_record(value)?;
        if options.strict {
            cross_check(value, &item)?;
        }
        Ok(item)
    })
}

fn parse_record(value: &Value) -> Result<ItemRecord, RecordError> {
    let uid = str_field(value, "uid", None)?;
    if uid.is_empty() {
        return Err(RecordError::new(None, "empty uid"));
    }
    let uid_ref = Some(uid);
    let counter = value
        .get("label_counter")
        .ok_or_else(|| RecordError::new(uid_ref, "missing field label_counter"))?
        .as_object()
        .ok_or_else(|| RecordError::new(uid_ref, "label_counter is not an object"))?;
    let mut votes_by_label = [0u32; 3];
    for (key, votes) in counter {
        let label = NliLabel::from_code(key)
            .ok_or_else(|| RecordError::new(uid_ref, format!("unknown label_counter key {key:?}")))?;
        let votes = votes
            .as_u64()
            .and_then(|v| u32::try_from(v).ok())
            .ok_or_else(|| RecordError::new(uid_ref, format!("label_counter[{key:?}] is not a non-negative integer")))?;
        votes_by_label[label.index()] = votes;
    }
    let counts = AnnotationCounts::from(votes_by_label);
    check_total(&counts, Source::Chaos100, uid)?;
    let premise = str_field(value, "example.premise", uid_ref)?;
    let hypothesis = str_field(value, "example.hypothesis", uid_ref)?;
    let genre = opt_str_field(value, "example.genre").or_else(|| opt_str_field(value, "genre"));
    Ok(ItemRecord {
        uid: uid.to_string(),
        premise: premise.to_string(),
        hypothesis: hypothesis.to_string(),
        genre,
        counts,
        source: Source::Chaos100,
        original_gold: None,
    })
}

fn cross_check(value: &Value, item: &ItemRecord) -> Result<(), RecordError> {
    let uid = Some(item.uid.as_str());
    let dist = counts_to_distribution(&item.counts).map_err(|e| RecordError::new(uid, e.to_string()))?;
    if let Some(released) = value.get("label_dist").and_then(Value::as_array) {
        let released: Vec<f64> = released.iter().filter_map(Value::as_f64).collect();
        let matches = released.len() == 3
            && released
                .iter()
                .zip(dist.as_array())
                .all(|(r, p)| (r - p).abs() <= 1e-6);
        if !matches {
            return Err(RecordError::new(
                uid,
                format!("label_dist {released:?} disagrees with label_counter {}", item.counts),
            ));
        }
    }
    if let Some(released) = value.get("majority_label").and_then(Value::as_str) {
        let m = majority(&item.counts);
        if !m.tie && released != m.label.code() {
            return Err(RecordError::new(
                uid,
                format!("majority_label {released:?} disagrees with label_counter {}", item.counts),
            ));
        }
    }
    if let Some(released) = value.get("entropy").and_then(Value::as_f64) {
        // the release does not document its log base; accept bits or nats
        let bits = entropy_in(&dist, EntropyBase::Bits);
        let nats = entropy_in(&dist, EntropyBase::Nats);
        if (released - bits).abs() > 1e-4 && (released - nats).abs() > 1e-4 {
            return Err(RecordError::new(
                uid,
                format!("entropy {released} disagrees with label_counter {}", item.counts),
            ));
        }
    }
    Ok(())
}

/// Serializes an item back into the fields the ChaosNLI parser reads.
pub fn to_chaosnli_json(item: &ItemRecord) -> Value {
    let mut counter = serde_json::Map::new();
    for label in NliLabel::ALL {
        let votes = item.counts.get(label);
        if votes > 0 {
            counter.insert(label.code().to_string(), json!(votes));
        }
    }
    let mut example = json!({
        "uid": item.uid,
        "premise": item.premise,
        "hypothesis": item.hypothesis,
    });
    if let Some(genre) = &item.genre {
        example["genre"] = json!(genre);
    }
    json!({
        "uid": item.uid,
        "label_counter": counter,
        "example": example,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::ingest::Severity;

    fn line(uid: &str, counter: &str) -> String {
        format!(r#"{{"uid":"{uid}","label_counter":{counter},"example":{{"premise":"P","hypothesis":"H"}}}}"#)
    }

    #[test]
    fn minimal_record() {
        let input = line("x1", r#"{"e":82,"n":17,"c":1}"#);
        let parsed = parse_chaosnli_jsonl(input.as_bytes(), ParseOptions::default()).unwrap();
        assert!(parsed.diagnostics.is_empty());
        let item = &parsed.records[0];
        assert_eq!(item.counts, AnnotationCounts::new(82, 17, 1));
        assert_eq!(item.source, Source::Chaos100);
        assert_eq!(item.premise, "P");
    }

    #[test]
    fn missing_keys_count_as_zero() {
        let input = line("x1", r#"{"n":100}"#);
        let parsed = parse_chaosnli_jsonl(input.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(parsed.records[0].counts, AnnotationCounts::new(0, 100, 0));
    }

    #[test]
    fn missing_label_counter_is_diagnosed() {
        let input = format!(
            "{}\n{}\n",
            line("ok", r#"{"e":100}"#),
            r#"{"uid":"bad","example":{"premise":"P","hypothesis":"H"}}"#
        );
        let parsed = parse_chaosnli_jsonl(input.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        let diag = &parsed.diagnostics[0];
        assert_eq!(diag.line, 2);
        assert_eq!(diag.uid.as_deref(), Some("bad"));
        assert_eq!(diag.severity, Severity::Warning);
        assert!(diag.message.contains("missing field label_counter"), "{}", diag.message);
        assert!(diag.to_string().contains("line 2"));
    }

    #[test]
    fn wrong_total_is_rejected() {
        let input = line("x9", r#"{"e":50,"n":49}"#);
        let err = parse_chaosnli_jsonl(input.as_bytes(), ParseOptions::strict()).unwrap_err();
        match err {
            Error::Parse { line, uid, message } => {
                assert_eq!(line, 1);
                assert_eq!(uid.as_deref(), Some("x9"));
                assert_eq!(message, "counts sum 99 ≠ 100");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_uid() {
        let input = format!("{}\n{}\n", line("a", r#"{"e":100}"#), line("a", r#"{"c":100}"#));
        let parsed = parse_chaosnli_jsonl(input.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert!(parsed.diagnostics[0].message.contains("duplicate uid"));
        assert!(parse_chaosnli_jsonl(input.as_bytes(), ParseOptions::strict()).is_err());
    }

    #[test]
    fn malformed_json_and_blank_lines() {
        let input = format!("\n{{not json\n{}\n", line("a", r#"{"e":100}"#));
        let parsed = parse_chaosnli_jsonl(input.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.diagnostics.len(), 1);
        assert_eq!(parsed.diagnostics[0].line, 2);
    }

    #[test]
    fn strict_cross_checks_release_fields() {
        let good = r#"{"uid":"a","label_counter":{"e":50,"n":50},"majority_label":"e","label_dist":[0.5,0.5,0.0],"entropy":1.0,"example":{"premise":"P","hypothesis":"H"}}"#;
        assert!(parse_chaosnli_jsonl(good.as_bytes(), ParseOptions::strict()).is_ok());
        let drift = r#"{"uid":"a","label_counter":{"e":60,"n":40},"label_dist":[0.5,0.5,0.0],"example":{"premise":"P","hypothesis":"H"}}"#;
        assert!(parse_chaosnli_jsonl(drift.as_bytes(), ParseOptions::strict()).is_err());
        // tolerant mode ignores the redundant fields entirely
        let parsed = parse_chaosnli_jsonl(drift.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        let wrong_majority = r#"{"uid":"a","label_counter":{"e":60,"n":40},"majority_label":"n","example":{"premise":"P","hypothesis":"H"}}"#;
        assert!(parse_chaosnli_jsonl(wrong_majority.as_bytes(), ParseOptions::strict()).is_err());
    }
}
