use std::collections::BTreeMap;

use serde::Serialize;

use super::mann_whitney::{mann_whitney_two_sided, MannWhitney};
use crate::error::Result;
use crate::labels::FourWayLabel;

/// Five-number summary plus mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation quantile of sorted data (the `(n-1)p` rule).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `None` for an empty sample.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Summary {
        count: sorted.len(),
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyGroups {
    pub groups: Vec<(FourWayLabel, Summary)>,
    /// The Complicated group tested against each other group present.
    pub complicated_vs: Vec<(FourWayLabel, MannWhitney)>,
}

impl EntropyGroups {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,count,min,q1,median,q3,max,mean,u_vs_complicated,p_vs_complicated\n");
        for (label, s) in &self.groups {
            let test = self.complicated_vs.iter().find(|(l, _)| l == label).map(|(_, t)| t);
            let (u, p) = test.map_or((String::new(), String::new()), |t| (t.u.to_string(), format!("{:.6e}", t.p_value)));
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{u},{p}\n",
                label.as_str(),
                s.count,
                s.min,
                s.q1,
                s.median,
                s.q3,
                s.max,
                s.mean
            ));
        }
        out
    }
}

/// Entropy summaries per predicted 4-way label, with Mann-Whitney tests of
/// Complicated against each other label. Empty groups are left out.
pub fn entropy_by_group(items: &[(FourWayLabel, f64)]) -> Result<EntropyGroups> {
    let mut by_label: BTreeMap<FourWayLabel, Vec<f64>> = BTreeMap::new();
    for (label, entropy) in items {
        by_label.entry(*label).or_default().push(*entropy);
    }
    let groups = by_label
        .iter()
        .filter_map(|(l, v)| summarize(v).map(|s| (*l, s)))
        .collect();
    let mut complicated_vs = Vec::new();
    if let Some(complicated) = by_label.get(&FourWayLabel::Complicated) {
        for (label, values) in &by_label {
            if *label != FourWayLabel::Complicated {
                complicated_vs.push((*label, mann_whitney_two_sided(complicated, values)?));
            }
        }
    }
    Ok(EntropyGroups { groups, complicated_vs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use FourWayLabel::*;

    #[test]
    fn quantiles() {
        let s = summarize(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (0.0, 0.25, 0.5, 0.75, 1.0));
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3, s.mean), (1.75, 2.5, 3.25, 2.5));
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn groups() {
        let items: Vec<(FourWayLabel, f64)> = [(Entailment, 0.0); 3].into_iter().chain([(Complicated, 1.0); 3]).collect();
        let g = entropy_by_group(&items).unwrap();
        assert_eq!(g.groups.len(), 2);
        assert_eq!(g.complicated_vs.len(), 1);
        // 2 of the C(6,3) = 20 splits are as extreme
        assert!((g.complicated_vs[0].1.p_value - 0.1).abs() < 1e-12);
        assert!(g.to_csv().starts_with("group,count"));

        let flat: Vec<(FourWayLabel, f64)> = FourWayLabel::ALL.iter().map(|l| (*l, 0.7)).collect();
        let g = entropy_by_group(&flat).unwrap();
        assert!(g.complicated_vs.iter().all(|(_, t)| t.p_value == 1.0));
        assert!(g.groups.iter().all(|(_, s)| s.q1 == s.q3));
    }
}
