use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use clap::{Args, ValueEnum};
use nli_disagree::agreement::{
    aggregate_by_intersection, apply_reconciliations, category_combination_frequencies, convergence_stats,
    krippendorff_alpha, masi_distance, nominal_distance, scatter_data, Adjudication, ConvergenceConfig,
    PredictedItem, StdKind,
};
use nli_disagree::ingest::{
    join_by_uid, parse_predictions, parse_taxonomy_annotations, CategorySet, ItemRecord, ParseOptions,
    PredictionRecord, TaxonomyAnnotation,
};
use nli_disagree::labels::{counts_to_distribution, entropy_in, majority, EntropyBase, FourWayLabel, NliLabel};
use nli_disagree::metrics::entropy_by_group;
use serde_json::json;

use crate::io::{self, ItemFormat, Outputs};
use crate::{ConversionArgs, OutArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Distance {
    Masi,
    Nominal,
}

#[derive(Args)]
pub struct AgreeArgs {
    /// Taxonomy annotation CSV (item_uid,annotator_id,categories).
    taxonomy: PathBuf,
    #[arg(long, value_enum, default_value = "masi")]
    distance: Distance,
    #[arg(long)]
    strict: bool,
    /// Write agreement.json and a manifest here instead of printing.
    #[command(flatten)]
    out: OutArgs,
}

fn read_taxonomy(path: &Path, strict: bool) -> Result<Vec<TaxonomyAnnotation>> {
    let parsed = parse_taxonomy_annotations(io::open(path)?, ParseOptions { strict })
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok(io::report_diagnostics(path, parsed))
}

pub fn agree(args: AgreeArgs) -> Result<u8> {
    let annotations = read_taxonomy(&args.taxonomy, args.strict)?;
    let rows: Vec<(&str, &str, CategorySet)> = annotations
        .iter()
        .map(|a| (a.item_uid.as_str(), a.annotator_id.as_str(), a.categories))
        .collect();
    let report = match args.distance {
        Distance::Masi => krippendorff_alpha(&rows, |a, b| masi_distance(*a, *b))?,
        Distance::Nominal => krippendorff_alpha(&rows, nominal_distance)?,
    };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match args.out.out {
        Some(dir) => {
            let mut outputs = Outputs::new(dir);
            outputs.write("agreement.json", &text)?;
            let distance = format!("{:?}", args.distance).to_lowercase();
            outputs.finish("agree", json!({ "distance": distance }), &[args.taxonomy], None)?;
        }
        None => print!("{text}"),
    }
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Report {
    Combinations,
    Convergence,
    Entropy,
    Scatter,
    Stacked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StdArg {
    Sample,
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaseArg {
    Bits,
    Nats,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_enum)]
    report: Report,
    /// Taxonomy annotation CSV.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Taxonomy CSV with one reconciled row per disputed item.
    #[arg(long)]
    reconciliations: Option<PathBuf>,
    /// ChaosNLI JSONL with vote counts.
    #[arg(long, num_args = 1..)]
    chaos: Vec<PathBuf>,
    /// Predictions read as 4-way labels (entropy, scatter).
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Predictions read as label sets (scatter).
    #[arg(long)]
    predictions_ml: Option<PathBuf>,
    /// Inclusive majority vote count for convergence.
    #[arg(long, default_value_t = 80)]
    threshold: u32,
    #[arg(long, value_enum, default_value = "sample")]
    std: StdArg,
    #[arg(long, value_enum, default_value = "bits")]
    entropy_base: BaseArg,
    #[command(flatten)]
    conversion: ConversionArgs,
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    out: OutArgs,
}

impl AnalyzeArgs {
    fn report_name(&self) -> String {
        format!("{:?}", self.report).to_lowercase()
    }

    fn need<'a>(&self, value: &'a Option<PathBuf>, flag: &str, what: &str) -> Result<&'a PathBuf> {
        value.as_ref().ok_or_else(|| anyhow!("the {} report needs --{flag} ({what})", self.report_name()))
    }

    fn need_chaos(&self) -> Result<Vec<ItemRecord>> {
        if self.chaos.is_empty() {
            bail!("the {} report needs --chaos (ChaosNLI JSONL with vote counts)", self.report_name());
        }
        let mut items = Vec::new();
        for path in &self.chaos {
            items.extend(io::read_items(path, ItemFormat::Chaos, ParseOptions { strict: self.strict })?);
        }
        Ok(items)
    }

    /// Adjudicated category sets; disputed items without a reconciliation
    /// are left out with a note.
    fn adjudicated(&self, notes: &mut Vec<String>) -> Result<Vec<Adjudication>> {
        let path = self.need(&self.taxonomy, "taxonomy", "taxonomy annotation CSV")?;
        let mut adjudications = aggregate_by_intersection(&read_taxonomy(path, self.strict)?);
        let overrides: HashMap<String, CategorySet> = match &self.reconciliations {
            Some(p) => read_taxonomy(p, self.strict)?.into_iter().map(|a| (a.item_uid, a.categories)).collect(),
            None => HashMap::new(),
        };
        let pending = apply_reconciliations(&mut adjudications, &overrides);
        if !pending.is_empty() {
            notes.push(format!(
                "{} items need reconciliation and were left out: {}",
                pending.len(),
                pending.join(" ")
            ));
        }
        adjudications.retain(|a| !a.needs_reconciliation);
        Ok(adjudications)
    }

    fn read_predictions(&self, path: &Path) -> Result<Vec<PredictionRecord>> {
        let parsed = parse_predictions(io::open(path)?, ParseOptions { strict: self.strict })
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
        Ok(io::report_diagnostics(path, parsed))
    }
}

fn fmt2(x: f64) -> String {
    format!("{x:.2}")
}

pub fn analyze(args: AnalyzeArgs) -> Result<u8> {
    let conversion = args.conversion.config()?;
    let out_dir = io::out_dir(args.out.out.clone())?;
    let mut notes = Vec::new();
    let mut inputs: Vec<PathBuf> = args.chaos.clone();
    inputs.extend([&args.taxonomy, &args.reconciliations, &args.predictions, &args.predictions_ml].into_iter().flatten().cloned());

    let csv = match args.report {
        Report::Combinations => {
            let sets: Vec<CategorySet> = args.adjudicated(&mut notes)?.iter().map(|a| a.categories).collect();
            let mut out = String::from("combination,count,percentage\n");
            for row in category_combination_frequencies(&sets) {
                out.push_str(&format!("\"{}\",{},{}\n", row.label, row.count, fmt2(row.percentage)));
            }
            out
        }
        Report::Convergence => {
            let adjudicated = args.adjudicated(&mut notes)?;
            let items = args.need_chaos()?;
            let keyed = adjudicated_uids(&adjudicated);
            let join = join_by_uid(&keyed, &items)?;
            notes.push(join.report());
            let rows: Vec<(&ItemRecord, CategorySet)> = join.rows.iter().map(|(a, item)| (*item, a.1)).collect();
            let cfg = ConvergenceConfig {
                threshold: args.threshold,
                std: match args.std {
                    StdArg::Sample => StdKind::Sample,
                    StdArg::Population => StdKind::Population,
                },
            };
            let report = convergence_stats(&rows, &cfg)?;
            notes.extend(report.notes.iter().cloned());
            let mut out = String::from("category,converge_pct,total_items,mean_majority,std_majority\n");
            for r in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.category.display_name(),
                    fmt2(r.converge_pct),
                    r.total_items,
                    fmt2(r.mean_majority),
                    fmt2(r.std_majority)
                ));
            }
            out
        }
        Report::Entropy => {
            let items = args.need_chaos()?;
            let preds = args.read_predictions(args.need(&args.predictions, "predictions", "prediction JSONL")?)?;
            let join = join_by_uid(&items, &preds)?;
            notes.push(join.report());
            let base = match args.entropy_base {
                BaseArg::Bits => EntropyBase::Bits,
                BaseArg::Nats => EntropyBase::Nats,
            };
            let values = join
                .rows
                .iter()
                .map(|(item, pred)| {
                    let h = entropy_in(&counts_to_distribution(&item.counts)?, base);
                    Ok((pred.payload.to_fourway(&conversion)?, h))
                })
                .collect::<Result<Vec<(FourWayLabel, f64)>>>()?;
            entropy_by_group(&values)?.to_csv()
        }
        Report::Scatter => {
            let adjudicated = args.adjudicated(&mut notes)?;
            let items = args.need_chaos()?;
            let p4 = args.read_predictions(args.need(&args.predictions, "predictions", "4-way prediction JSONL")?)?;
            let pml = args.read_predictions(args.need(
                &args.predictions_ml,
                "predictions-ml",
                "multilabel prediction JSONL",
            )?)?;
            let uids = adjudicated_uids(&adjudicated);
            let with_items = join_by_uid(&uids, &items)?;
            let p4_by_uid: HashMap<&str, &PredictionRecord> = p4.iter().map(|p| (p.uid.as_str(), p)).collect();
            let pml_by_uid: HashMap<&str, &PredictionRecord> = pml.iter().map(|p| (p.uid.as_str(), p)).collect();
            let mut joined = Vec::new();
            let mut missing = 0;
            for (keyed, item) in &with_items.rows {
                match (p4_by_uid.get(keyed.0.as_str()), pml_by_uid.get(keyed.0.as_str())) {
                    (Some(a), Some(b)) => joined.push(PredictedItem {
                        counts: item.counts,
                        categories: keyed.1,
                        fourway: a.payload.to_fourway(&conversion)?,
                        multilabel: b.payload.to_multilabel(&conversion)?,
                    }),
                    _ => missing += 1,
                }
            }
            notes.push(format!("{} items joined, {missing} categorized items lack a prediction", joined.len()));
            let (rows, extra) = scatter_data(&joined, args.threshold);
            notes.extend(extra);
            let mut out = String::from("category,n_items,converge_pct,pct_complicated,pct_multilabel\n");
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.category.display_name(),
                    r.n_items,
                    fmt2(r.converge_pct),
                    fmt2(r.pct_complicated),
                    fmt2(r.pct_multilabel)
                ));
            }
            out
        }
        Report::Stacked => stacked_csv(&args.need_chaos()?),
    };
    for n in &notes {
        eprintln!("note: {n}");
    }
    let name = format!("{:?}", args.report).to_lowercase();
    let mut outputs = Outputs::new(out_dir);
    outputs.write(&format!("{name}.csv"), &csv)?;
    let config = json!({
        "report": name,
        "threshold": args.threshold,
        "std": format!("{:?}", args.std).to_lowercase(),
        "entropy_base": format!("{:?}", args.entropy_base).to_lowercase(),
        "conversion": conversion,
        "notes": notes,
    });
    outputs.finish("analyze", config, &inputs, None)?;
    Ok(0)
}

/// `(uid, categories)` pairs keyed by uid for joining.
struct Keyed(String, CategorySet);

impl nli_disagree::ingest::HasUid for Keyed {
    fn uid(&self) -> &str {
        &self.0
    }
}

fn adjudicated_uids(adjudicated: &[Adjudication]) -> Vec<Keyed> {
    adjudicated.iter().map(|a| Keyed(a.item_uid.clone(), a.categories)).collect()
}

/// One row per item: votes sorted high to low, ordered by majority label,
/// then majority size (descending), then uid.
fn stacked_csv(items: &[ItemRecord]) -> String {
    let mut rows: Vec<(NliLabel, u32, &ItemRecord)> = items
        .iter()
        .map(|i| {
            let m = majority(&i.counts);
            (m.label, m.votes, i)
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then_with(|| a.2.uid.cmp(&b.2.uid)));
    let mut out = String::from("position,uid,first,second,third,first_label,second_label,third_label\n");
    for (pos, (_, _, item)) in rows.iter().enumerate() {
        let mut ranked: Vec<(u32, NliLabel)> = NliLabel::ALL.iter().map(|&l| (item.counts.get(l), l)).collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            pos + 1,
            item.uid,
            ranked[0].0,
            ranked[1].0,
            ranked[2].0,
            ranked[0].1.letter(),
            ranked[1].1.letter(),
            ranked[2].1.letter()
        ));
    }
    out
}
