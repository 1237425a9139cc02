use std::collections::BTreeSet;
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of dense features.
pub const DENSE_DIM: usize = 7;

/// Names of the dense features, in order.
pub const DENSE_NAMES: [&str; DENSE_DIM] = [
    "overlap_jaccard",
    "hypothesis_only_fraction",
    "premise_only_fraction",
    "length_ratio",
    "negation_mismatch",
    "hypothesis_is_question",
    "bias",
];

const NEGATIONS: [&str; 11] = [
    "not", "no", "never", "nobody", "nothing", "none", "neither", "nor", "nowhere", "cannot", "t",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Size of the hashed feature space.
    pub hash_dim: usize,
    /// Add hashed premise-token x hypothesis-token pairs.
    pub cross_features: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            hash_dim: 1 << 15,
            cross_features: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hash_dim == 0 || self.hash_dim > u32::MAX as usize {
            return Err(Error::Config(format!("hash_dim must lie in 1..=2^32-1, got {}", self.hash_dim)));
        }
        Ok(())
    }

    /// Total input width: dense block followed by the hashed block.
    pub fn dim(&self) -> usize {
        DENSE_DIM + self.hash_dim
    }
}

/// Dense block plus sparse hashed entries (sorted, unique indices into the
/// hashed block).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub dense: [f64; DENSE_DIM],
    pub sparse: Vec<(u32, f64)>,
}

impl FeatureVector {
    /// `lambda * a + (1 - lambda) * b`, entrywise.
    pub fn mix(a: &FeatureVector, b: &FeatureVector, lambda: f64) -> FeatureVector {
        let dense = std::array::from_fn(|i| lambda * a.dense[i] + (1.0 - lambda) * b.dense[i]);
        let mut sparse = Vec::with_capacity(a.sparse.len() + b.sparse.len());
        let (mut i, mut j) = (0, 0);
        while i < a.sparse.len() || j < b.sparse.len() {
            let ia = a.sparse.get(i).map_or(u32::MAX, |e| e.0);
            let ib = b.sparse.get(j).map_or(u32::MAX, |e| e.0);
            let (idx, va, vb) = if ia < ib {
                i += 1;
                (ia, a.sparse[i - 1].1, 0.0)
            } else if ib < ia {
                j += 1;
                (ib, 0.0, b.sparse[j - 1].1)
            } else {
                i += 1;
                j += 1;
                (ia, a.sparse[i - 1].1, b.sparse[j - 1].1)
            };
            sparse.push((idx, lambda * va + (1.0 - lambda) * vb));
        }
        FeatureVector { dense, sparse }
    }
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn hash_index(parts: &[&str], dim: usize) -> u32 {
    let mut hasher = FnvHasher::default();
    for part in parts {
        hasher.write(part.as_bytes());
        hasher.write_u8(0x1f);
    }
    (hasher.finish() % dim as u64) as u32
}

/// Features of a premise/hypothesis pair. The premise may be empty.
pub fn extract_features(premise: &str, hypothesis: &str, config: &FeatureConfig) -> Result<FeatureVector> {
    config.validate()?;
    let hyp_tokens = tokenize(hypothesis);
    if hyp_tokens.is_empty() {
        return Err(Error::InvalidInput("hypothesis has no tokens".to_string()));
    }
    let prem_tokens = tokenize(premise);
    let hyp: BTreeSet<&str> = hyp_tokens.iter().map(String::as_str).collect();
    let prem: BTreeSet<&str> = prem_tokens.iter().map(String::as_str).collect();

    let shared = hyp.intersection(&prem).count() as f64;
    let union = hyp.union(&prem).count() as f64;
    let hyp_only = (hyp.len() as f64 - shared) / hyp.len() as f64;
    let prem_only = if prem.is_empty() { 0.0 } else { (prem.len() as f64 - shared) / prem.len() as f64 };
    let length_ratio = if prem_tokens.is_empty() {
        4.0
    } else {
        (hyp_tokens.len() as f64 / prem_tokens.len() as f64).min(4.0)
    };
    let negated = |set: &BTreeSet<&str>| NEGATIONS.iter().any(|n| set.contains(n));
    let dense = [
        shared / union,
        hyp_only,
        prem_only,
        length_ratio,
        f64::from(u8::from(negated(&hyp) != negated(&prem))),
        f64::from(u8::from(hypothesis.trim_end().ends_with('?'))),
        1.0,
    ];

    let dim = config.hash_dim;
    let mut entries: Vec<(u32, f64)> = Vec::new();
    let mut add_block = |indices: Vec<u32>| {
        if indices.is_empty() {
            return;
        }
        let scale = 1.0 / (indices.len() as f64).sqrt();
        entries.extend(indices.into_iter().map(|i| (i, scale)));
    };
    add_block(hyp.iter().map(|t| hash_index(&["h", t], dim)).collect());
    add_block(prem.iter().map(|t| hash_index(&["p", t], dim)).collect());
    if config.cross_features {
        add_block(
            prem.iter()
                .flat_map(|p| hyp.iter().map(move |h| hash_index(&["x", p, h], dim)))
                .collect(),
        );
    }
    // collisions add up
    entries.sort_by_key(|e| e.0);
    let mut sparse: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
    for (idx, v) in entries {
        match sparse.last_mut() {
            Some(last) if last.0 == idx => last.1 += v,
            _ => sparse.push((idx, v)),
        }
    }
    Ok(FeatureVector { dense, sparse })
}
