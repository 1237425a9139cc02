use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use nli_disagree::baseline::{
    extract_features, history_csv, predict_one, train as train_model, Example, Head, ModelFile, TrainConfig,
};
use nli_disagree::ingest::{join_by_uid, parse_predictions, ItemRecord, ParseOptions, PredictionRecord};
use nli_disagree::labels::{FourWayLabel, LabelSet};
use nli_disagree::metrics::{contingency, fourway_report, multilabel_report, rows_to_csv, MultilabelOptions};
use serde_json::json;

use crate::io::{self, ItemFormat, Outputs};
use crate::{ConversionArgs, OutArgs};

fn parse_head(s: &str) -> Result<Head, String> {
    s.parse().map_err(|e: nli_disagree::Error| e.to_string())
}

#[derive(Args)]
pub struct TrainArgs {
    /// Labeled training JSONL.
    #[arg(long)]
    train: PathBuf,
    /// Labeled dev JSONL used for model selection.
    #[arg(long)]
    dev: PathBuf,
    /// softmax4, sigmoid3 or mixup-softmax3.
    #[arg(long, value_parser = parse_head, required_unless_present = "config")]
    head: Option<Head>,
    /// Full training config as JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    plateau: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    mixup_alpha: Option<f64>,
    /// Fixed MixUp lambda instead of Beta draws.
    #[arg(long)]
    mixup_lambda: Option<f64>,
    /// Train the KL head on plain soft labels.
    #[arg(long)]
    no_mixup: bool,
    #[arg(long)]
    hash_dim: Option<usize>,
    #[arg(long)]
    no_cross_features: bool,
    #[arg(long)]
    dist_threshold: Option<f64>,
    #[arg(long)]
    sigmoid_threshold: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

impl TrainArgs {
    fn config(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg: TrainConfig = serde_json::from_str(&io::read_text(path)?)
                    .with_context(|| format!("training config {}", path.display()))?;
                if let Some(head) = self.head {
                    if head != cfg.head {
                        bail!("--head {head} contradicts head {} in {}", cfg.head, path.display());
                    }
                }
                cfg
            }
            None => TrainConfig::for_head(self.head.expect("clap requires --head without --config")),
        };
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag {
                    $field = v;
                }
            };
        }
        set!(self.seed, cfg.seed);
        set!(self.lr, cfg.initial_lr);
        set!(self.lr_decay, cfg.lr_decay_factor);
        set!(self.plateau, cfg.plateau_epochs_for_decay);
        set!(self.patience, cfg.early_stop_patience);
        set!(self.max_epochs, cfg.max_epochs);
        set!(self.batch_size, cfg.batch_size);
        set!(self.mixup_alpha, cfg.mixup_alpha);
        set!(self.hash_dim, cfg.features.hash_dim);
        set!(self.dist_threshold, cfg.conversion.dist_threshold);
        set!(self.sigmoid_threshold, cfg.conversion.sigmoid_threshold);
        if self.mixup_lambda.is_some() {
            cfg.mixup_lambda = self.mixup_lambda;
        }
        if self.no_mixup {
            cfg.mixup_enabled = false;
        }
        if self.no_cross_features {
            cfg.features.cross_features = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn examples(path: &Path, cfg: &TrainConfig) -> Result<Vec<Example>> {
    io::read_labeled(path)?
        .iter()
        .map(|item| Example::from_labeled(item, &cfg.features).with_context(|| format!("uid {}", item.item.uid)))
        .collect()
}

pub fn train(args: TrainArgs) -> Result<u8> {
    let cfg = args.config()?;
    let out_dir = io::out_dir(args.out.out.clone())?;
    let train_set = examples(&args.train, &cfg)?;
    let dev = examples(&args.dev, &cfg)?;
    let outcome = train_model(&train_set, &dev, &cfg)?;
    let best = &outcome.history[outcome.best_epoch - 1];
    eprintln!(
        "{}: best dev macro F1 {:.2} at epoch {} of {}",
        cfg.head,
        best.dev_f1,
        outcome.best_epoch,
        outcome.history.len()
    );
    let mut outputs = Outputs::new(out_dir);
    outputs.write("model.json", &(ModelFile::new(cfg, &outcome).to_json() + "\n"))?;
    outputs.write("history.csv", &history_csv(&outcome.history))?;
    let config = json!({ "train": cfg, "config_sha256": cfg.digest(), "best_epoch": outcome.best_epoch });
    outputs.finish("train", config, &[args.train, args.dev], Some(cfg.seed))?;
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ItemsFormat {
    Labeled,
    Chaos,
    Mnli,
}

#[derive(Args)]
pub struct PredictArgs {
    /// model.json written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Items to predict.
    #[arg(long)]
    items: PathBuf,
    #[arg(long, value_enum, default_value = "labeled")]
    format: ItemsFormat,
    #[command(flatten)]
    out: OutArgs,
}

pub fn predict(args: PredictArgs) -> Result<u8> {
    let out_dir = io::out_dir(args.out.out.clone())?;
    let file = ModelFile::from_json(&io::read_text(&args.model)?)
        .with_context(|| format!("model {}", args.model.display()))?;
    let items: Vec<ItemRecord> = match args.format {
        ItemsFormat::Labeled => io::read_labeled(&args.items)?.into_iter().map(|l| l.item).collect(),
        ItemsFormat::Chaos => io::read_items(&args.items, ItemFormat::Chaos, ParseOptions::default())?,
        ItemsFormat::Mnli => io::read_items(&args.items, ItemFormat::Mnli, ParseOptions::default())?,
    };
    let records = items
        .iter()
        .map(|item| {
            let x = extract_features(&item.premise, &item.hypothesis, &file.model.features)
                .with_context(|| format!("uid {}", item.uid))?;
            Ok(PredictionRecord {
                uid: item.uid.clone(),
                payload: predict_one(&file.model, &x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut outputs = Outputs::new(out_dir);
    outputs.write("predictions.jsonl", &io::jsonl(&records, PredictionRecord::to_json))?;
    let config = json!({ "head": file.model.head, "config_sha256": file.config_sha256 });
    outputs.finish("predict", config, &[args.model, args.items], None)?;
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    /// 4-way always; multilabel when every payload has a multilabel reading.
    Auto,
    Fourway,
    Multilabel,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Labeled gold JSONL.
    #[arg(long, required_unless_present = "compare")]
    gold: Option<PathBuf>,
    /// Prediction JSONL.
    #[arg(long, required_unless_present = "compare")]
    predictions: Option<PathBuf>,
    /// Contingency of a 4-way and a multilabel prediction file.
    #[arg(long, num_args = 2, value_names = ["PRED4", "PRED_ML"], conflicts_with_all = ["gold", "predictions"])]
    compare: Option<Vec<PathBuf>>,
    #[arg(long, value_enum, default_value = "auto")]
    scheme: Scheme,
    /// Also report macro F1 over the seven label combinations.
    #[arg(long)]
    combination_macro: bool,
    #[command(flatten)]
    conversion: ConversionArgs,
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    out: OutArgs,
}

fn read_predictions(path: &Path, strict: bool) -> Result<Vec<PredictionRecord>> {
    let parsed = parse_predictions(io::open(path)?, ParseOptions { strict })
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok(io::report_diagnostics(path, parsed))
}

pub fn eval(args: EvalArgs) -> Result<u8> {
    let conversion = args.conversion.config()?;
    let out_dir = io::out_dir(args.out.out.clone())?;
    let mut outputs = Outputs::new(out_dir);

    if let Some(paths) = &args.compare {
        let p4 = read_predictions(&paths[0], args.strict)?;
        let pml = read_predictions(&paths[1], args.strict)?;
        let join = join_by_uid(&p4, &pml)?;
        eprintln!("note: {}", join.report());
        let fourway = join
            .rows
            .iter()
            .map(|(a, _)| a.payload.to_fourway(&conversion))
            .collect::<nli_disagree::Result<Vec<FourWayLabel>>>()
            .context("reading the first file as 4-way labels")?;
        let multilabel = join
            .rows
            .iter()
            .map(|(_, b)| b.payload.to_multilabel(&conversion))
            .collect::<nli_disagree::Result<Vec<LabelSet>>>()
            .context("reading the second file as label sets")?;
        outputs.write("contingency.csv", &contingency(&fourway, &multilabel)?.to_csv())?;
        outputs.finish("eval", json!({ "compare": true, "conversion": conversion }), paths, None)?;
        return Ok(0);
    }

    let (gold_path, pred_path) = match (&args.gold, &args.predictions) {
        (Some(g), Some(p)) => (g.clone(), p.clone()),
        _ => bail!("eval needs --gold and --predictions, or --compare"),
    };
    let gold = io::read_labeled(&gold_path)?;
    let preds = read_predictions(&pred_path, args.strict)?;
    let join = join_by_uid(&gold, &preds)?;
    if let Some(uid) = join.unmatched_left.first() {
        bail!("{} gold items have no prediction (first: {uid})", join.unmatched_left.len());
    }
    if !join.unmatched_right.is_empty() {
        eprintln!("note: {} predictions have no gold item and were ignored", join.unmatched_right.len());
    }
    let kinds: std::collections::BTreeSet<&str> = join.rows.iter().map(|(_, p)| p.payload.kind()).collect();
    let mut notes = vec![format!("payload kinds: {}", kinds.into_iter().collect::<Vec<_>>().join(", "))];
    let mut summary = json!({ "n": join.rows.len() });

    if args.scheme != Scheme::Multilabel {
        let gold4: Vec<FourWayLabel> = join.rows.iter().map(|(g, _)| g.fourway).collect();
        let pred4 = join
            .rows
            .iter()
            .map(|(_, p)| p.payload.to_fourway(&conversion))
            .collect::<nli_disagree::Result<Vec<_>>>()?;
        let report = fourway_report(&gold4, &pred4)?;
        outputs.write("fourway.csv", &rows_to_csv(&[("value", report.rows())]))?;
        outputs.write("confusion.csv", &report.confusion.to_csv())?;
        summary["fourway"] = serde_json::to_value(&report)?;
    }
    if args.scheme != Scheme::Fourway {
        let pred_ml = join
            .rows
            .iter()
            .map(|(_, p)| p.payload.to_multilabel(&conversion))
            .collect::<nli_disagree::Result<Vec<_>>>();
        match pred_ml {
            Ok(pred_ml) => {
                let gold_ml: Vec<LabelSet> = join.rows.iter().map(|(g, _)| g.multilabel).collect();
                let options = MultilabelOptions { combination_macro: args.combination_macro };
                let report = multilabel_report(&gold_ml, &pred_ml, options)?;
                outputs.write("multilabel.csv", &rows_to_csv(&[("value", report.rows())]))?;
                summary["multilabel"] = serde_json::to_value(&report)?;
            }
            Err(err) if args.scheme == Scheme::Auto => {
                notes.push(format!("multilabel scores skipped: {err}"));
            }
            Err(err) => {
                return Err(anyhow!(err).context(
                    "conversion chain: probs -> labels at dist_threshold, label_probs -> labels above \
                     sigmoid_threshold, labels as given, 4-way label -> singleton (Complicated has no reading)",
                ))
            }
        }
    }
    for n in &notes {
        eprintln!("note: {n}");
    }
    summary["notes"] = json!(notes);
    outputs.write("eval.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    let scheme = format!("{:?}", args.scheme).to_lowercase();
    let config = json!({ "scheme": scheme, "conversion": conversion, "combination_macro": args.combination_macro });
    outputs.finish("eval", config, &[gold_path, pred_path], None)?;
    Ok(0)
}
