use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::{SecondsFormat, Utc};
use nli_disagree::ingest::{parse_chaosnli_jsonl, parse_mnli_jsonl, ItemRecord, ParseOptions, Parsed};
use nli_disagree::relabel::LabeledItem;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Name of the manifest written into every output directory.
pub const MANIFEST: &str = "manifest.json";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn open(path: &Path) -> Result<BufReader<fs::File>> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write in {}", dir.display()))?;
    tmp.write_all(contents).with_context(|| format!("cannot write {}", path.display()))?;
    tmp.persist(path).map_err(|e| e.error).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn jsonl<T, F: Fn(&T) -> Value>(records: &[T], to_json: F) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&to_json(r).to_string());
        out.push('\n');
    }
    out
}

pub fn labeled_jsonl(items: &[LabeledItem]) -> String {
    jsonl(items, |i| serde_json::to_value(i).expect("labeled item serializes"))
}

pub fn read_labeled(path: &Path) -> Result<Vec<LabeledItem>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            LabeledItem::from_json_line(line).map_err(|e| anyhow!("{}: line {}: {e}", path.display(), i + 1))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ItemFormat {
    Chaos,
    Mnli,
}

/// Parses one raw item file, printing diagnostics to stderr.
pub fn read_items(path: &Path, format: ItemFormat, options: ParseOptions) -> Result<Vec<ItemRecord>> {
    let reader = open(path)?;
    let parsed = match format {
        ItemFormat::Chaos => parse_chaosnli_jsonl(reader, options),
        ItemFormat::Mnli => parse_mnli_jsonl(reader, options),
    }
    .with_context(|| format!("in {}", path.display()))?;
    Ok(report_diagnostics(path, parsed))
}

pub fn report_diagnostics<T>(path: &Path, parsed: Parsed<T>) -> Vec<T> {
    for d in &parsed.diagnostics {
        eprintln!("{}: {d}", path.display());
    }
    parsed.records
}

/// `--out`, else the environment default, else an error.
pub fn out_dir(flag: Option<PathBuf>) -> Result<PathBuf> {
    match flag {
        Some(p) => Ok(p),
        None => bail!("no output directory: pass --out or set NLI_DISAGREE_OUT"),
    }
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub generator: &'static str,
    pub timestamp: String,
}

/// Collects outputs of one command and writes them with a manifest.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<FileDigest>,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Self {
        Outputs { dir, written: Vec::new() }
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        write_atomic(&self.dir.join(name), contents.as_bytes())?;
        self.written.push(FileDigest {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        });
        Ok(())
    }

    pub fn finish(self, command: &str, config: Value, inputs: &[PathBuf], seed: Option<u64>) -> Result<()> {
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            command: command.to_string(),
            config,
            inputs,
            outputs: self.written,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            generator: nli_disagree::rng::GENERATOR,
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        write_atomic(&self.dir.join(MANIFEST), text.as_bytes())
    }
}
