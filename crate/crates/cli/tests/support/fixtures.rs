//! Synthetic inputs and a thin wrapper around the built binary.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nli_disagree::ingest::{to_chaosnli_json, to_mnli_json, ItemRecord, Source};
use nli_disagree::labels::AnnotationCounts;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_nli-disagree"))
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("NLI_DISAGREE_OUT")
        .output()
        .expect("binary runs")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

pub fn item(uid: &str, source: Source, votes: [u32; 3]) -> ItemRecord {
    ItemRecord {
        uid: uid.to_string(),
        premise: format!("premise of {uid}"),
        hypothesis: format!("hypothesis of {uid}"),
        genre: None,
        counts: AnnotationCounts::new(votes[0], votes[1], votes[2]),
        source,
        original_gold: None,
    }
}

/// Repeats each vote pattern `n` times as items named `{prefix}{i}`.
pub fn items(prefix: &str, source: Source, groups: &[([u32; 3], usize)]) -> Vec<ItemRecord> {
    let mut out = Vec::new();
    for (votes, n) in groups {
        for _ in 0..*n {
            out.push(item(&format!("{prefix}{}", out.len()), source, *votes));
        }
    }
    out
}

/// 1,599 ChaosNLI items whose relabeled counts are E=195, N=57, C=37,
/// EN=291, NC=205, EC=32, ENC=76, with the other 706 in the gray zone.
pub fn chaos_reference() -> Vec<ItemRecord> {
    items(
        "c",
        Source::Chaos100,
        &[
            ([90, 6, 4], 195),
            ([3, 85, 12], 57),
            ([1, 18, 81], 37),
            ([55, 40, 5], 291),
            ([2, 50, 48], 205),
            ([45, 10, 45], 32),
            ([40, 30, 30], 76),
            ([70, 20, 10], 400),
            ([10, 60, 30], 306),
        ],
    )
}

/// MNLI dev stand-in: multilabel items that bring EN/NC/EC to 1117/775/163,
/// plenty of unanimous singles, and items no rule covers.
pub fn mnli_pool() -> Vec<ItemRecord> {
    items(
        "m",
        Source::Mnli5,
        &[
            ([5, 0, 0], 1500),
            ([0, 5, 0], 1400),
            ([0, 0, 5], 1300),
            ([3, 2, 0], 826),
            ([0, 2, 3], 570),
            ([2, 0, 3], 131),
            ([4, 1, 0], 300),
            ([3, 1, 1], 200),
        ],
    )
}

pub fn write_chaos(path: &Path, items: &[ItemRecord]) {
    let text: String = items.iter().map(|i| to_chaosnli_json(i).to_string() + "\n").collect();
    fs::write(path, text).unwrap();
}

pub fn write_mnli(path: &Path, items: &[ItemRecord]) {
    let text: String = items.iter().map(|i| to_mnli_json(i).to_string() + "\n").collect();
    fs::write(path, text).unwrap();
}

/// The data row of a count table CSV, parsed.
pub fn count_row(csv: &str, dataset: &str) -> Option<Vec<usize>> {
    csv.lines()
        .find(|l| l.split(',').next() == Some(dataset))
        .map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect())
}
