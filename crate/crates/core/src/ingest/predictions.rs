use std::io::BufRead;

use serde::Serialize;
use serde_json::{json, Value};

use super::{parse_jsonl, str_field, HasUid, ParseOptions, Parsed, RecordError};
use crate::error::{Error, Result};
use crate::labels::{
    distribution_to_multilabel, multilabel_to_fourway, sigmoid_probs_to_multilabel, ConversionConfig, FourWayLabel,
    LabelDistribution, LabelSet,
};

const PROB_SUM_TOLERANCE: f64 = 1e-6;

/// What a model emitted for one item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionPayload {
    /// A softmax distribution over E, N, C (`probs`).
    Distribution(LabelDistribution),
    /// Independent per-label probabilities (`label_probs`).
    PerLabelProbs([f64; 3]),
    /// A multilabel prediction (`labels`).
    LabelSet(LabelSet),
    /// A 4-way prediction (`label`).
    FourWay(FourWayLabel),
}

impl PredictionPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            PredictionPayload::Distribution(_) => "probs",
            PredictionPayload::PerLabelProbs(_) => "label_probs",
            PredictionPayload::LabelSet(_) => "labels",
            PredictionPayload::FourWay(_) => "label",
        }
    }

    /// Multilabel reading of the payload: distributions are thresholded at
    /// `dist_threshold`, per-label probabilities at `sigmoid_threshold`. A
    /// 4-way label converts only when it is not Complicated, since
    /// Complicated does not say which labels are present.
    pub fn to_multilabel(&self, cfg: &ConversionConfig) -> Result<LabelSet> {
        Ok(match self {
            PredictionPayload::Distribution(d) => distribution_to_multilabel(d, cfg),
            PredictionPayload::PerLabelProbs(p) => sigmoid_probs_to_multilabel(p, cfg),
            PredictionPayload::LabelSet(s) => *s,
            PredictionPayload::FourWay(l) => match l.nli() {
                Some(label) => LabelSet::singleton(label),
                None => {
                    return Err(Error::InvalidInput(
                        "a 4-way Complicated prediction has no multilabel reading; \
                         supply probs, label_probs or labels to score against multilabel gold"
                            .to_string(),
                    ))
                }
            },
        })
    }

    /// 4-way reading: the multilabel reading, then Complicated when it has
    /// more than one label.
    pub fn to_fourway(&self, cfg: &ConversionConfig) -> Result<FourWayLabel> {
        match self {
            PredictionPayload::FourWay(l) => Ok(*l),
            other => multilabel_to_fourway(other.to_multilabel(cfg)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub uid: String,
    pub payload: PredictionPayload,
}

impl HasUid for PredictionRecord {
    fn uid(&self) -> &str {
        &self.uid
    }
}

impl PredictionRecord {
    /// The JSONL line form read by [`parse_predictions`].
    pub fn to_json(&self) -> Value {
        let mut value = json!({ "uid": self.uid });
        let payload = match &self.payload {
            PredictionPayload::Distribution(d) => json!(d.as_array()),
            PredictionPayload::PerLabelProbs(p) => json!(p),
            PredictionPayload::LabelSet(s) => json!(s.to_string()),
            PredictionPayload::FourWay(l) => json!(l.as_str()),
        };
        value[self.payload.kind()] = payload;
        value
    }
}

/// Parses prediction JSONL: `uid` plus exactly one of `probs`, `label_probs`,
/// `labels` or `label`.
pub fn parse_predictions<R: BufRead>(reader: R, options: ParseOptions) -> Result<Parsed<PredictionRecord>> {
    parse_jsonl(reader, options, parse_record)
}

fn parse_record(value: &Value) -> Result<PredictionRecord, RecordError> {
    let uid = str_field(value, "uid", None)?;
    if uid.is_empty() {
        return Err(RecordError::new(None, "empty uid"));
    }
    let uid_ref = Some(uid);
    let present: Vec<&str> = ["probs", "label_probs", "labels", "label"]
        .into_iter()
        .filter(|k| value.get(*k).is_some_and(|v| !v.is_null()))
        .collect();
    let payload = match present.as_slice() {
        [] => return Err(RecordError::new(uid_ref, "no payload (expected probs, label_probs, labels or label)")),
        [key] => *key,
        keys => return Err(RecordError::new(uid_ref, format!("multiple payloads: {}", keys.join(", ")))),
    };
    let payload = match payload {
        "probs" => {
            let probs = triple(value, "probs", uid_ref)?;
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                return Err(RecordError::new(uid_ref, format!("probs sum to {sum}, expected 1")));
            }
            if probs.iter().any(|p| *p < 0.0) {
                return Err(RecordError::new(uid_ref, "negative probability in probs"));
            }
            // renormalize so the stored distribution meets the tighter invariant
            let probs = probs.map(|p| p / sum);
            PredictionPayload::Distribution(
                LabelDistribution::new(probs).map_err(|e| RecordError::new(uid_ref, e.to_string()))?,
            )
        }
        "label_probs" => {
            let probs = triple(value, "label_probs", uid_ref)?;
            if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(RecordError::new(uid_ref, "label_probs must lie in [0,1]"));
            }
            PredictionPayload::PerLabelProbs(probs)
        }
        "labels" => {
            let text = str_field(value, "labels", uid_ref)?;
            PredictionPayload::LabelSet(text.parse().map_err(|e| RecordError::new(uid_ref, format!("{e}")))?)
        }
        _ => {
            let text = str_field(value, "label", uid_ref)?;
            PredictionPayload::FourWay(text.parse().map_err(|e| RecordError::new(uid_ref, format!("{e}")))?)
        }
    };
    Ok(PredictionRecord {
        uid: uid.to_string(),
        payload,
    })
}

fn triple(value: &Value, key: &str, uid: Option<&str>) -> Result<[f64; 3], RecordError> {
    let values = value[key]
        .as_array()
        .ok_or_else(|| RecordError::new(uid, format!("{key} is not a list")))?;
    let numbers: Vec<f64> = values.iter().filter_map(Value::as_f64).collect();
    match numbers.as_slice() {
        [a, b, c] if values.len() == 3 && numbers.iter().all(|x| x.is_finite()) => Ok([*a, *b, *c]),
        _ => Err(RecordError::new(uid, format!("{key} must hold exactly 3 numbers"))),
    }
}
