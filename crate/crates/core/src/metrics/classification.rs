use serde::Serialize;

use crate::error::{Error, Result};
use crate::labels::{FourWayLabel, LabelSet, NliLabel};

/// Precision, recall and F1 for one class, as percentages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScores {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold items of this class.
    pub support: usize,
    pub predicted: usize,
    /// Precision was 0/0 and set to 0.
    pub zero_division: bool,
}

impl ClassScores {
    pub fn from_counts(label: impl Into<String>, tp: usize, predicted: usize, support: usize) -> Self {
        let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassScores {
            label: label.into(),
            precision: 100.0 * precision,
            recall: 100.0 * recall,
            f1: 100.0 * f1,
            support,
            predicted,
            zero_division: predicted == 0,
        }
    }
}

fn macro_mean(scores: &[ClassScores], field: fn(&ClassScores) -> f64) -> f64 {
    scores.iter().map(field).sum::<f64>() / scores.len() as f64
}

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

/// Counts indexed by (gold, predicted) 4-way label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix4 {
    pub counts: [[usize; 4]; 4],
}

impl ConfusionMatrix4 {
    pub fn get(&self, gold: FourWayLabel, pred: FourWayLabel) -> usize {
        self.counts[gold.index()][pred.index()]
    }

    pub fn gold_total(&self, gold: FourWayLabel) -> usize {
        self.counts[gold.index()].iter().sum()
    }

    pub fn predicted_total(&self, pred: FourWayLabel) -> usize {
        self.counts.iter().map(|row| row[pred.index()]).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..4).map(|i| self.counts[i][i]).sum()
    }

    /// Rows E, N, C, Complicated, All; last column is the gold total.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold,E,N,C,Complicated,All\n");
        for gold in FourWayLabel::ALL {
            let row = &self.counts[gold.index()];
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                gold.as_str(),
                row[0],
                row[1],
                row[2],
                row[3],
                self.gold_total(gold)
            ));
        }
        let cols: Vec<String> = FourWayLabel::ALL.iter().map(|p| self.predicted_total(*p).to_string()).collect();
        out.push_str(&format!("All,{},{}\n", cols.join(","), self.total()));
        out
    }
}

pub fn confusion(gold: &[FourWayLabel], pred: &[FourWayLabel]) -> Result<ConfusionMatrix4> {
    check_lengths(gold.len(), pred.len())?;
    let mut matrix = ConfusionMatrix4::default();
    for (g, p) in gold.iter().zip(pred) {
        matrix.counts[g.index()][p.index()] += 1;
    }
    Ok(matrix)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourWayReport {
    pub n: usize,
    pub accuracy: f64,
    /// E, N, C, Complicated.
    pub per_class: Vec<ClassScores>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix4,
}

impl FourWayReport {
    pub fn from_confusion(confusion: ConfusionMatrix4) -> Self {
        let per_class: Vec<ClassScores> = FourWayLabel::ALL
            .iter()
            .map(|&l| {
                ClassScores::from_counts(
                    l.as_str(),
                    confusion.get(l, l),
                    confusion.predicted_total(l),
                    confusion.gold_total(l),
                )
            })
            .collect();
        let n = confusion.total();
        FourWayReport {
            n,
            accuracy: if n == 0 { 0.0 } else { 100.0 * confusion.trace() as f64 / n as f64 },
            macro_precision: macro_mean(&per_class, |s| s.precision),
            macro_recall: macro_mean(&per_class, |s| s.recall),
            macro_f1: macro_mean(&per_class, |s| s.f1),
            per_class,
            confusion,
        }
    }

    pub fn class(&self, label: FourWayLabel) -> &ClassScores {
        &self.per_class[label.index()]
    }

    /// Named rows in the order of the 4-way results report.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("Accuracy", self.accuracy),
            ("Macro Precision", self.macro_precision),
            ("Macro Recall", self.macro_recall),
            ("Macro F1", self.macro_f1),
            ("Complicated F1", self.class(FourWayLabel::Complicated).f1),
            ("E F1", self.class(FourWayLabel::Entailment).f1),
            ("N F1", self.class(FourWayLabel::Neutral).f1),
            ("C F1", self.class(FourWayLabel::Contradiction).f1),
        ]
    }
}

pub fn fourway_report(gold: &[FourWayLabel], pred: &[FourWayLabel]) -> Result<FourWayReport> {
    Ok(FourWayReport::from_confusion(confusion(gold, pred)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MultilabelOptions {
    /// Also score the 7 label combinations as a single-label task.
    pub combination_macro: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultilabelReport {
    pub n: usize,
    /// Exact-match accuracy.
    pub accuracy: f64,
    /// E, N, C, each scored as a binary task.
    pub per_label: Vec<ClassScores>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Exact-match accuracy over items with 1, 2 and 3 gold labels; `None`
    /// when no such item exists.
    pub accuracy_by_gold_size: [Option<f64>; 3],
    pub count_by_gold_size: [usize; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combination_scores: Option<Vec<ClassScores>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combination_macro_f1: Option<f64>,
}

impl MultilabelReport {
    /// Named rows in the order of the multilabel results report.
    /// Empty partitions are omitted.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        let mut rows = vec![
            ("Accuracy", self.accuracy),
            ("Macro Precision", self.macro_precision),
            ("Macro Recall", self.macro_recall),
            ("Macro F1", self.macro_f1),
        ];
        let names = ["1 Label Accuracy", "2 Labels Accuracy", "3 Labels Accuracy"];
        for (name, acc) in names.into_iter().zip(self.accuracy_by_gold_size) {
            if let Some(acc) = acc {
                rows.push((name, acc));
            }
        }
        rows
    }
}

pub fn multilabel_report(gold: &[LabelSet], pred: &[LabelSet], options: MultilabelOptions) -> Result<MultilabelReport> {
    check_lengths(gold.len(), pred.len())?;
    if let Some(i) = gold.iter().chain(pred).position(|s| s.is_empty()) {
        let which = if i < gold.len() { "gold" } else { "predicted" };
        return Err(Error::InvalidInput(format!("empty {which} label set at position {}", i % gold.len().max(1))));
    }
    let per_label: Vec<ClassScores> = NliLabel::ALL
        .iter()
        .map(|&l| {
            let tp = gold.iter().zip(pred).filter(|(g, p)| g.contains(l) && p.contains(l)).count();
            let predicted = pred.iter().filter(|p| p.contains(l)).count();
            let support = gold.iter().filter(|g| g.contains(l)).count();
            ClassScores::from_counts(l.letter().to_string(), tp, predicted, support)
        })
        .collect();

    let mut hits = [0usize; 3];
    let mut sizes = [0usize; 3];
    for (g, p) in gold.iter().zip(pred) {
        sizes[g.len() - 1] += 1;
        if g == p {
            hits[g.len() - 1] += 1;
        }
    }
    let n = gold.len();
    let accuracy_by_gold_size =
        std::array::from_fn(|k| (sizes[k] > 0).then(|| 100.0 * hits[k] as f64 / sizes[k] as f64));

    let combination_scores = options.combination_macro.then(|| {
        LabelSet::COMBINATIONS
            .iter()
            .map(|&c| {
                let tp = gold.iter().zip(pred).filter(|(g, p)| **g == c && **p == c).count();
                let predicted = pred.iter().filter(|p| **p == c).count();
                let support = gold.iter().filter(|g| **g == c).count();
                ClassScores::from_counts(c.to_string(), tp, predicted, support)
            })
            .collect::<Vec<_>>()
    });
    Ok(MultilabelReport {
        n,
        accuracy: if n == 0 { 0.0 } else { 100.0 * hits.iter().sum::<usize>() as f64 / n as f64 },
        macro_precision: macro_mean(&per_label, |s| s.precision),
        macro_recall: macro_mean(&per_label, |s| s.recall),
        macro_f1: macro_mean(&per_label, |s| s.f1),
        per_label,
        accuracy_by_gold_size,
        count_by_gold_size: sizes,
        combination_macro_f1: combination_scores.as_ref().map(|s| macro_mean(s, |c| c.f1)),
        combination_scores,
    })
}

/// Counts indexed by (4-way prediction, multilabel combination prediction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ContingencyMatrix {
    /// Columns follow [`LabelSet::COMBINATIONS`].
    pub counts: [[usize; 7]; 4],
}

impl ContingencyMatrix {
    pub fn get(&self, fourway: FourWayLabel, multilabel: LabelSet) -> usize {
        multilabel.combination_index().map_or(0, |c| self.counts[fourway.index()][c])
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("fourway,E,N,C,EN,NC,EC,ENC\n");
        for l in FourWayLabel::ALL {
            let cells: Vec<String> = self.counts[l.index()].iter().map(usize::to_string).collect();
            out.push_str(&format!("{},{}\n", l.as_str(), cells.join(",")));
        }
        out
    }
}

pub fn contingency(pred4: &[FourWayLabel], pred_ml: &[LabelSet]) -> Result<ContingencyMatrix> {
    check_lengths(pred4.len(), pred_ml.len())?;
    let mut matrix = ContingencyMatrix::default();
    for (f, m) in pred4.iter().zip(pred_ml) {
        let c = m
            .combination_index()
            .ok_or_else(|| Error::InvalidInput("empty multilabel prediction".to_string()))?;
        matrix.counts[f.index()][c] += 1;
    }
    Ok(matrix)
}

/// Writes `metric,<name>...` rows for one or more reports side by side,
/// rounded to 2 decimals. Row order follows the first column; a metric
/// missing from a column is left blank.
pub fn rows_to_csv(columns: &[(&str, Vec<(&'static str, f64)>)]) -> String {
    let mut out = String::from("metric");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let mut names: Vec<&str> = Vec::new();
    for (_, rows) in columns {
        for (metric, _) in rows {
            if !names.contains(metric) {
                names.push(metric);
            }
        }
    }
    for metric in names {
        out.push_str(metric);
        for (_, rows) in columns {
            out.push(',');
            if let Some((_, v)) = rows.iter().find(|(m, _)| *m == metric) {
                out.push_str(&format!("{v:.2}"));
            }
        }
        out.push('\n');
    }
    out
}

/// Unweighted mean of several runs' rows, matched by name.
pub fn mean_rows(runs: &[Vec<(&'static str, f64)>]) -> Vec<(&'static str, f64)> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    first
        .iter()
        .filter_map(|(name, _)| {
            let values: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.iter().find(|(m, _)| m == name).map(|(_, v)| *v))
                .collect();
            (values.len() == runs.len()).then(|| (*name, values.iter().sum::<f64>() / values.len() as f64))
        })
        .collect()
}
