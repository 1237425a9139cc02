use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::LabeledItem;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Dev,
    Test,
}

impl SplitPart {
    pub const ALL: [SplitPart; 3] = [SplitPart::Train, SplitPart::Dev, SplitPart::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitPart::Train => "train",
            SplitPart::Dev => "dev",
            SplitPart::Test => "test",
        }
    }
}

impl fmt::Display for SplitPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSizes {
    /// Exact train/dev/test sizes; must sum to the number of items.
    Counts([usize; 3]),
    /// Fractions summing to 1, rounded by largest remainder.
    Ratios([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratify {
    /// One stratum per multilabel combination (7 strata).
    #[default]
    Combination,
    /// One stratum per 4-way label.
    FourWay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub sizes: SplitSizes,
    pub seed: u64,
    #[serde(default)]
    pub stratify_by: Stratify,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Vec<LabeledItem>,
    pub dev: Vec<LabeledItem>,
    pub test: Vec<LabeledItem>,
    pub warnings: Vec<String>,
}

impl SplitResult {
    pub fn part(&self, part: SplitPart) -> &[LabeledItem] {
        match part {
            SplitPart::Train => &self.train,
            SplitPart::Dev => &self.dev,
            SplitPart::Test => &self.test,
        }
    }
}

/// Converts fractions to sizes summing to `n` by largest remainder
/// (ties go to the earlier part).
pub fn split_sizes_from_ratios(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Config(format!("split ratios {ratios:?} must be nonnegative and sum to 1")));
    }
    let exact = ratios.map(|r| r / sum * n as f64);
    let mut sizes = exact.map(|x| x.floor() as usize);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let missing = n - sizes.iter().sum::<usize>();
    for &k in order.iter().take(missing) {
        sizes[k] += 1;
    }
    Ok(sizes)
}

/// Splits items into train/dev/test with each stratum spread across parts
/// in proportion to the part sizes. Every (stratum, part) cell gets the
/// floor or ceiling of its proportional quota and the part sizes are exact.
/// Items are shuffled within each stratum; each part keeps input order.
pub fn stratified_split(items: &[LabeledItem], spec: &SplitSpec) -> Result<SplitResult> {
    let n = items.len();
    let sizes = match spec.sizes {
        SplitSizes::Counts(c) => {
            if c.iter().sum::<usize>() != n {
                return Err(Error::Config(format!(
                    "split sizes {c:?} sum to {}, but there are {n} items",
                    c.iter().sum::<usize>()
                )));
            }
            c
        }
        SplitSizes::Ratios(r) => split_sizes_from_ratios(n, r)?,
    };

    let mut strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (idx, item) in items.iter().enumerate() {
        let key = match spec.stratify_by {
            Stratify::Combination => item
                .multilabel
                .combination_index()
                .ok_or_else(|| Error::InvalidInput(format!("uid {}: empty multilabel", item.item.uid)))?,
            Stratify::FourWay => item.fourway.index(),
        };
        strata.entry(key).or_default().push(idx);
    }

    let mut warnings = Vec::new();
    let row_sizes: Vec<usize> = strata.values().map(Vec::len).collect();
    let cells = controlled_round(&row_sizes, sizes);
    let mut assignment = vec![SplitPart::Train; n];
    for ((key, members), cell) in strata.iter().zip(&cells) {
        if members.len() < 3 {
            warnings.push(format!(
                "stratum {} has only {} item(s); it cannot appear in every part",
                stratum_name(spec.stratify_by, *key),
                members.len()
            ));
        }
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng::stream(spec.seed, *key as u64));
        let mut rest = shuffled.as_slice();
        for (part, &count) in SplitPart::ALL.iter().zip(cell) {
            let (taken, tail) = rest.split_at(count);
            for &idx in taken {
                assignment[idx] = *part;
            }
            rest = tail;
        }
    }

    let mut result = SplitResult {
        train: Vec::with_capacity(sizes[0]),
        dev: Vec::with_capacity(sizes[1]),
        test: Vec::with_capacity(sizes[2]),
        warnings,
    };
    for (item, part) in items.iter().zip(assignment) {
        let mut item = item.clone();
        item.split = Some(part);
        match part {
            SplitPart::Train => result.train.push(item),
            SplitPart::Dev => result.dev.push(item),
            SplitPart::Test => result.test.push(item),
        }
    }
    Ok(result)
}

fn stratum_name(stratify: Stratify, key: usize) -> String {
    match stratify {
        Stratify::Combination => crate::labels::LabelSet::COMBINATIONS[key].to_string(),
        Stratify::FourWay => crate::labels::FourWayLabel::ALL[key].to_string(),
    }
}

/// Integer table with the given row sums and column sums in which every
/// cell is the floor or ceiling of `row * col / total`.
///
/// Floors are taken first. The remaining units go to cells with the largest
/// fractional parts while both the row and the column still need them, and
/// a max-flow pass repairs whatever that greedy pass leaves unplaced. The
/// fractional quotas themselves are a feasible flow, so a complete integral
/// one always exists.
pub(crate) fn controlled_round(rows: &[usize], cols: [usize; 3]) -> Vec<[usize; 3]> {
    let total: usize = rows.iter().sum();
    debug_assert_eq!(total, cols.iter().sum::<usize>());
    if total == 0 {
        return vec![[0; 3]; rows.len()];
    }
    let mut table: Vec<[usize; 3]> = rows.iter().map(|&r| cols.map(|c| r * c / total)).collect();
    let remainder = |s: usize, k: usize| rows[s] * cols[k] % total;

    let s_count = rows.len();
    let source = 0;
    let sink = s_count + 4;
    let col_node = |k: usize| s_count + 1 + k;
    let mut cap = vec![vec![0i64; sink + 1]; sink + 1];
    for s in 0..s_count {
        cap[source][s + 1] = (rows[s] - table[s].iter().sum::<usize>()) as i64;
        for k in 0..3 {
            if remainder(s, k) > 0 {
                cap[s + 1][col_node(k)] = 1;
            }
        }
    }
    for k in 0..3 {
        cap[col_node(k)][sink] = (cols[k] - table.iter().map(|row| row[k]).sum::<usize>()) as i64;
    }
    let mut flow = vec![vec![0i64; sink + 1]; sink + 1];
    let push = |flow: &mut Vec<Vec<i64>>, u: usize, v: usize| {
        flow[u][v] += 1;
        flow[v][u] -= 1;
    };

    let mut candidates: Vec<(usize, usize)> = (0..s_count)
        .flat_map(|s| (0..3).map(move |k| (s, k)))
        .filter(|&(s, k)| remainder(s, k) > 0)
        .collect();
    candidates.sort_by_key(|c| std::cmp::Reverse(remainder(c.0, c.1)));
    for (s, k) in candidates {
        let row_open = flow[source][s + 1] < cap[source][s + 1];
        let col_open = flow[col_node(k)][sink] < cap[col_node(k)][sink];
        if row_open && col_open {
            push(&mut flow, source, s + 1);
            push(&mut flow, s + 1, col_node(k));
            push(&mut flow, col_node(k), sink);
        }
    }

    // augmenting paths on the residual graph
    loop {
        let mut parent = vec![usize::MAX; sink + 1];
        parent[source] = source;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for v in 0..=sink {
                if parent[v] == usize::MAX && cap[u][v] - flow[u][v] > 0 {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            break;
        }
        let mut v = sink;
        while v != source {
            let u = parent[v];
            push(&mut flow, u, v);
            v = u;
        }
    }

    for (s, row) in table.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            *cell += flow[s + 1][col_node(k)].max(0) as usize;
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Source;
    use crate::relabel::tests::item;
    use crate::relabel::SchemeLabels;
    use proptest::prelude::*;

    fn check_table(rows: &[usize], cols: [usize; 3], table: &[[usize; 3]]) -> std::result::Result<(), String> {
        let total: usize = rows.iter().sum();
        for (s, row) in table.iter().enumerate() {
            if row.iter().sum::<usize>() != rows[s] {
                return Err(format!("row {s} sums to {:?}", row));
            }
            for k in 0..3 {
                let lo = rows[s] * cols[k] / total;
                let hi = lo + usize::from(!(rows[s] * cols[k]).is_multiple_of(total));
                if row[k] < lo || row[k] > hi {
                    return Err(format!("cell ({s},{k}) = {} outside [{lo},{hi}]", row[k]));
                }
            }
        }
        for k in 0..3 {
            if table.iter().map(|r| r[k]).sum::<usize>() != cols[k] {
                return Err(format!("column {k} mismatch"));
            }
        }
        Ok(())
    }

    #[test]
    fn rounding_small_strata() {
        let rows = [1, 1, 1, 2, 1, 1, 2];
        let cols = [5, 2, 2];
        let table = controlled_round(&rows, cols);
        check_table(&rows, cols, &table).unwrap();
    }

    proptest! {
        #[test]
        fn rounding_respects_margins(rows in prop::collection::vec(0usize..40, 1..8), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let total: usize = rows.iter().sum();
            prop_assume!(total > 0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let cols = split_sizes_from_ratios(total, [lo, hi - lo, 1.0 - hi]).unwrap();
            let table = controlled_round(&rows, cols);
            prop_assert_eq!(check_table(&rows, cols, &table), Ok(()));
        }
    }

    fn dataset() -> Vec<LabeledItem> {
        let mut items = Vec::new();
        for (c, set) in ["E", "N", "C", "EN", "NC", "EC", "ENC"].iter().enumerate() {
            for i in 0..(5 + 7 * c) {
                items.push(LabeledItem::new(
                    item(&format!("{set}{i}"), Source::Chaos100, [34, 33, 33]),
                    SchemeLabels::from_multilabel(set.parse().unwrap()).unwrap(),
                ));
            }
        }
        items
    }

    #[test]
    fn exact_sizes_and_disjoint_parts() {
        let items = dataset();
        let n = items.len();
        let spec = SplitSpec {
            sizes: SplitSizes::Ratios([0.7, 0.1, 0.2]),
            seed: 42,
            stratify_by: Stratify::Combination,
        };
        let out = stratified_split(&items, &spec).unwrap();
        let sizes = split_sizes_from_ratios(n, [0.7, 0.1, 0.2]).unwrap();
        assert_eq!([out.train.len(), out.dev.len(), out.test.len()], sizes);
        let mut uids: Vec<&str> = SplitPart::ALL
            .iter()
            .flat_map(|p| out.part(*p).iter().map(|i| i.item.uid.as_str()))
            .collect();
        uids.sort_unstable();
        uids.dedup();
        assert_eq!(uids.len(), n);
        assert!(out.warnings.is_empty());
        assert!(out.test.iter().all(|i| i.split == Some(SplitPart::Test)));

        let again = stratified_split(&items, &spec).unwrap();
        assert_eq!(out, again);
        let other = stratified_split(&items, &SplitSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(out.test, other.test);
    }

    #[test]
    fn tiny_stratum_warns() {
        let mut items = dataset();
        items.retain(|i| i.multilabel.to_string() != "EC" || i.item.uid == "EC0");
        let spec = SplitSpec {
            sizes: SplitSizes::Ratios([0.5, 0.25, 0.25]),
            seed: 1,
            stratify_by: Stratify::Combination,
        };
        let out = stratified_split(&items, &spec).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("EC"), "{}", out.warnings[0]);
    }

    #[test]
    fn rejects_bad_sizes() {
        let items = dataset();
        let spec = SplitSpec {
            sizes: SplitSizes::Counts([1, 1, 1]),
            seed: 0,
            stratify_by: Stratify::FourWay,
        };
        assert!(stratified_split(&items, &spec).is_err());
        assert!(split_sizes_from_ratios(10, [0.5, 0.5, 0.5]).is_err());
        assert_eq!(split_sizes_from_ratios(10, [0.7, 0.1, 0.2]).unwrap(), [7, 1, 2]);
    }
}
