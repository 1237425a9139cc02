use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use nli_disagree::baseline::synthetic::separable_items;
use nli_disagree::ingest::{
    parse_chaosnli_jsonl, parse_mnli_jsonl, parse_predictions, parse_taxonomy_annotations, ItemRecord, ParseOptions,
    Parsed,
};
use nli_disagree::relabel::{
    auto_balance_target, downsample_balance, relabel_dataset, stratified_split, CountTable, RelabelPolicy, SplitPart,
    SplitSizes, SplitSpec, Stratify,
};
use serde_json::json;

use crate::io::{self, ItemFormat, Outputs};
use crate::OutArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Chaos,
    Mnli,
    Taxonomy,
    Predictions,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long, value_enum)]
    format: FileFormat,
    /// Fail on the first problem instead of skipping bad records.
    #[arg(long)]
    strict: bool,
}

struct Tally {
    records: usize,
    errors: usize,
    warnings: usize,
}

fn tally<T>(path: &std::path::Path, parsed: Parsed<T>) -> Tally {
    let (errors, warnings) = (parsed.error_count(), parsed.warning_count());
    let records = io::report_diagnostics(path, parsed).len();
    Tally { records, errors, warnings }
}

pub fn validate(args: ValidateArgs) -> Result<u8> {
    let options = ParseOptions { strict: args.strict };
    let mut failed = false;
    for path in &args.paths {
        let reader = io::open(path)?;
        let parsed = match args.format {
            FileFormat::Chaos => parse_chaosnli_jsonl(reader, options).map(|p| tally(path, p)),
            FileFormat::Mnli => parse_mnli_jsonl(reader, options).map(|p| tally(path, p)),
            FileFormat::Taxonomy => parse_taxonomy_annotations(reader, options).map(|p| tally(path, p)),
            FileFormat::Predictions => parse_predictions(reader, options).map(|p| tally(path, p)),
        };
        match parsed {
            Ok(t) => {
                println!("{}: {} records, {} errors, {} warnings", path.display(), t.records, t.errors, t.warnings);
                failed |= t.errors > 0;
            }
            Err(nli_disagree::Error::Io(msg)) => bail!(std::io::Error::other(format!("{}: {msg}", path.display()))),
            Err(err) => {
                eprintln!("{}: {err}", path.display());
                println!("{}: invalid", path.display());
                failed = true;
            }
        }
    }
    Ok(u8::from(failed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceTarget {
    Auto,
    None,
    Count(usize),
}

fn parse_balance(s: &str) -> Result<BalanceTarget, String> {
    match s {
        "auto" => Ok(BalanceTarget::Auto),
        "none" => Ok(BalanceTarget::None),
        n => n
            .parse()
            .map(BalanceTarget::Count)
            .map_err(|_| format!("expected auto, none or a count, got {n:?}")),
    }
}

#[derive(Args)]
pub struct RelabelArgs {
    /// ChaosNLI JSONL files (100 votes per item).
    #[arg(long, num_args = 1..)]
    chaos: Vec<PathBuf>,
    /// MNLI dev JSONL files (5 votes per item).
    #[arg(long, num_args = 1..)]
    mnli: Vec<PathBuf>,
    /// JSON file with relabeling thresholds; flags below override it.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    chaos_single_min_votes: Option<u32>,
    #[arg(long)]
    chaos_disagree_max_votes: Option<u32>,
    #[arg(long)]
    chaos_multilabel_min_votes: Option<u32>,
    #[arg(long)]
    mnli_unanimous: Option<u32>,
    #[arg(long)]
    mnli_complicated_min_votes: Option<u32>,
    #[arg(long)]
    mnli_multilabel_min_votes: Option<u32>,
    /// Per-class size after downsampling MNLI single-label items (auto,
    /// none or a count). Applies only when MNLI files are given.
    #[arg(long, default_value = "auto", value_parser = parse_balance)]
    balance_target: BalanceTarget,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep MNLI items whose uid also appears in the ChaosNLI input; their
    /// uids get an `mnli:` prefix.
    #[arg(long)]
    keep_overlap: bool,
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    out: OutArgs,
}

impl RelabelArgs {
    fn policy(&self) -> Result<RelabelPolicy> {
        let mut policy = match &self.policy {
            Some(path) => serde_json::from_str(&io::read_text(path)?)
                .with_context(|| format!("policy file {}", path.display()))?,
            None => RelabelPolicy::default(),
        };
        let overrides = [
            (self.chaos_single_min_votes, &mut policy.chaos_single_min_votes),
            (self.chaos_disagree_max_votes, &mut policy.chaos_disagree_max_votes),
            (self.chaos_multilabel_min_votes, &mut policy.chaos_multilabel_min_votes),
            (self.mnli_unanimous, &mut policy.mnli_unanimous),
            (self.mnli_complicated_min_votes, &mut policy.mnli_complicated_min_votes),
            (self.mnli_multilabel_min_votes, &mut policy.mnli_multilabel_min_votes),
        ];
        for (flag, field) in overrides {
            if let Some(v) = flag {
                *field = v;
            }
        }
        policy.validate()?;
        Ok(policy)
    }
}

pub fn relabel(args: RelabelArgs) -> Result<u8> {
    if args.chaos.is_empty() && args.mnli.is_empty() {
        bail!("relabel needs at least one --chaos or --mnli file");
    }
    let policy = args.policy()?;
    let out_dir = io::out_dir(args.out.out.clone())?;
    let options = ParseOptions { strict: args.strict };
    let mut chaos: Vec<ItemRecord> = Vec::new();
    for path in &args.chaos {
        chaos.extend(io::read_items(path, ItemFormat::Chaos, options)?);
    }
    let mut mnli: Vec<ItemRecord> = Vec::new();
    for path in &args.mnli {
        mnli.extend(io::read_items(path, ItemFormat::Mnli, options)?);
    }

    let chaos_uids: HashSet<&str> = chaos.iter().map(|i| i.uid.as_str()).collect();
    let overlap = mnli.iter().filter(|i| chaos_uids.contains(i.uid.as_str())).count();
    if args.keep_overlap {
        for item in mnli.iter_mut().filter(|i| chaos_uids.contains(i.uid.as_str())) {
            item.uid = format!("mnli:{}", item.uid);
        }
    } else {
        mnli.retain(|i| !chaos_uids.contains(i.uid.as_str()));
    }
    if overlap > 0 {
        let action = if args.keep_overlap { "kept with prefixed uids" } else { "excluded" };
        eprintln!("{overlap} MNLI items also in the ChaosNLI input were {action}");
    }

    let chaos_set = relabel_dataset(&chaos, &policy)?;
    let mnli_set = relabel_dataset(&mnli, &policy)?;
    let mut labeled = chaos_set.labeled.clone();
    labeled.extend(mnli_set.labeled.iter().cloned());

    let mut counts = String::from(CountTable::CSV_HEADER);
    counts.push('\n');
    if !chaos.is_empty() {
        counts.push_str(&chaos_set.counts.csv_row("chaos"));
        counts.push('\n');
    }
    let mut target = None;
    if !mnli.is_empty() {
        counts.push_str(&CountTable::of(&labeled).csv_row("combined_unbalanced"));
        counts.push('\n');
        target = match args.balance_target {
            BalanceTarget::Auto => Some(auto_balance_target(&labeled)),
            BalanceTarget::Count(n) => Some(n),
            BalanceTarget::None => None,
        };
        if let Some(t) = target {
            labeled = downsample_balance(&labeled, t, args.seed)?;
        }
        counts.push_str(&CountTable::of(&labeled).csv_row("combined"));
        counts.push('\n');
    }

    let mut discards: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for set in [&chaos_set, &mnli_set] {
        for ((source, reason), n) in &set.discards {
            *discards.entry((source.as_str(), reason.as_str())).or_default() += n;
        }
    }
    let mut discard_csv = String::from("source,reason,count\n");
    for ((source, reason), n) in &discards {
        discard_csv.push_str(&format!("{source},{reason},{n}\n"));
    }
    if !args.keep_overlap && overlap > 0 {
        discard_csv.push_str(&format!("mnli,chaos-overlap,{overlap}\n"));
    }

    let mut outputs = Outputs::new(out_dir);
    outputs.write("labeled.jsonl", &io::labeled_jsonl(&labeled))?;
    outputs.write("counts.csv", &counts)?;
    outputs.write("discards.csv", &discard_csv)?;
    eprint!("{counts}");
    let inputs: Vec<PathBuf> = args.chaos.iter().chain(&args.mnli).cloned().collect();
    let config = json!({
        "policy": policy,
        "sources": {
            "chaos": args.chaos.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "mnli": args.mnli.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        },
        "balance_target": target,
        "keep_overlap": args.keep_overlap,
        "overlapping_mnli_items": overlap,
        "strict": args.strict,
    });
    outputs.finish("relabel", config, &inputs, Some(args.seed))?;
    Ok(0)
}

fn three<T: std::str::FromStr>(s: &str) -> Result<[T; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, c] => {
            let p = |x: &str| x.parse::<T>().map_err(|_| format!("cannot parse {x:?}"));
            Ok([p(a)?, p(b)?, p(c)?])
        }
        _ => Err(format!("expected three comma-separated values, got {s:?}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StratifyArg {
    Combination,
    Fourway,
}

#[derive(Args)]
pub struct SplitArgs {
    /// Labeled JSONL written by `relabel`.
    labeled: PathBuf,
    /// Exact train,dev,test sizes.
    #[arg(long, value_parser = three::<usize>, conflicts_with = "ratios", required_unless_present = "ratios")]
    sizes: Option<[usize; 3]>,
    /// Train,dev,test fractions summing to 1.
    #[arg(long, value_parser = three::<f64>)]
    ratios: Option<[f64; 3]>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "combination")]
    stratify: StratifyArg,
    #[command(flatten)]
    out: OutArgs,
}

pub fn split(args: SplitArgs) -> Result<u8> {
    let out_dir = io::out_dir(args.out.out.clone())?;
    let items = io::read_labeled(&args.labeled)?;
    let sizes = match (args.sizes, args.ratios) {
        (Some(c), _) => SplitSizes::Counts(c),
        (None, Some(r)) => SplitSizes::Ratios(r),
        (None, None) => bail!("pass --sizes or --ratios"),
    };
    let spec = SplitSpec {
        sizes,
        seed: args.seed,
        stratify_by: match args.stratify {
            StratifyArg::Combination => Stratify::Combination,
            StratifyArg::Fourway => Stratify::FourWay,
        },
    };
    let result = stratified_split(&items, &spec)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let mut outputs = Outputs::new(out_dir);
    for part in SplitPart::ALL {
        outputs.write(&format!("{part}.jsonl"), &io::labeled_jsonl(result.part(part)))?;
    }
    let config = json!({ "spec": spec, "warnings": result.warnings });
    outputs.finish("split", config, &[args.labeled], Some(args.seed))?;
    Ok(0)
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

pub fn synth(args: SynthArgs) -> Result<u8> {
    let out_dir = io::out_dir(args.out.out.clone())?;
    let items = separable_items(args.n, args.seed)?;
    let mut outputs = Outputs::new(out_dir);
    outputs.write("labeled.jsonl", &io::labeled_jsonl(&items))?;
    outputs.finish("synth", json!({ "n": args.n, "kind": "separable" }), &[], Some(args.seed))?;
    Ok(0)
}
