//! Label algebra: the three NLI labels, the 4-way scheme with its extra
//! `Complicated` class, multilabel sets, vote counts and the conversions
//! between distributions, multilabels and 4-way labels.
//!
//! Every vector in this crate is laid out in the canonical order
//! Entailment, Neutral, Contradiction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a [`LabelDistribution`].
pub const DISTRIBUTION_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

impl NliLabel {
    pub const ALL: [NliLabel; 3] = [NliLabel::Entailment, NliLabel::Neutral, NliLabel::Contradiction];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Lowercase code used by the ChaosNLI release ("e", "n", "c").
    pub fn code(self) -> &'static str {
        match self {
            NliLabel::Entailment => "e",
            NliLabel::Neutral => "n",
            NliLabel::Contradiction => "c",
        }
    }

    /// Uppercase letter used in multilabel strings.
    pub fn letter(self) -> char {
        match self {
            NliLabel::Entailment => 'E',
            NliLabel::Neutral => 'N',
            NliLabel::Contradiction => 'C',
        }
    }

    /// Full lowercase name as in the MNLI release.
    pub fn name(self) -> &'static str {
        match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Neutral => "neutral",
            NliLabel::Contradiction => "contradiction",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "e" => Some(NliLabel::Entailment),
            "n" => Some(NliLabel::Neutral),
            "c" => Some(NliLabel::Contradiction),
            _ => None,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "entailment" => Some(NliLabel::Entailment),
            "neutral" => Some(NliLabel::Neutral),
            "contradiction" => Some(NliLabel::Contradiction),
            _ => None,
        }
    }

    pub fn from_letter(letter: char) -> Option<Self> {
        match letter {
            'E' => Some(NliLabel::Entailment),
            'N' => Some(NliLabel::Neutral),
            'C' => Some(NliLabel::Contradiction),
            _ => None,
        }
    }
}

impl fmt::Display for NliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl TryFrom<String> for NliLabel {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        let mut chars = value.chars();
        match (chars.next().and_then(NliLabel::from_letter), chars.next()) {
            (Some(label), None) => Ok(label),
            _ => Err(Error::InvalidInput(format!("unknown NLI label {value:?}"))),
        }
    }
}

impl From<NliLabel> for String {
    fn from(label: NliLabel) -> Self {
        label.letter().to_string()
    }
}

/// Label of the 4-way scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FourWayLabel {
    Entailment,
    Neutral,
    Contradiction,
    Complicated,
}

impl FourWayLabel {
    pub const ALL: [FourWayLabel; 4] = [
        FourWayLabel::Entailment,
        FourWayLabel::Neutral,
        FourWayLabel::Contradiction,
        FourWayLabel::Complicated,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FourWayLabel::Entailment => "E",
            FourWayLabel::Neutral => "N",
            FourWayLabel::Contradiction => "C",
            FourWayLabel::Complicated => "Complicated",
        }
    }

    /// The NLI label this class stands for, `None` for `Complicated`.
    pub fn nli(self) -> Option<NliLabel> {
        match self {
            FourWayLabel::Entailment => Some(NliLabel::Entailment),
            FourWayLabel::Neutral => Some(NliLabel::Neutral),
            FourWayLabel::Contradiction => Some(NliLabel::Contradiction),
            FourWayLabel::Complicated => None,
        }
    }
}

impl From<NliLabel> for FourWayLabel {
    fn from(label: NliLabel) -> Self {
        match label {
            NliLabel::Entailment => FourWayLabel::Entailment,
            NliLabel::Neutral => FourWayLabel::Neutral,
            NliLabel::Contradiction => FourWayLabel::Contradiction,
        }
    }
}

impl fmt::Display for FourWayLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FourWayLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "E" => Ok(FourWayLabel::Entailment),
            "N" => Ok(FourWayLabel::Neutral),
            "C" => Ok(FourWayLabel::Contradiction),
            "Complicated" => Ok(FourWayLabel::Complicated),
            other => Err(Error::InvalidInput(format!(
                "unknown 4-way label {other:?} (expected E, N, C or Complicated)"
            ))),
        }
    }
}

impl TryFrom<String> for FourWayLabel {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<FourWayLabel> for String {
    fn from(label: FourWayLabel) -> Self {
        label.as_str().to_string()
    }
}

/// A subset of {E, N, C}, stored as a bitmask in canonical order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LabelSet(u8);

impl LabelSet {
    /// The seven nonempty combinations in reporting order: E, N, C, EN, NC, EC, ENC.
    pub const COMBINATIONS: [LabelSet; 7] = [
        LabelSet(0b001),
        LabelSet(0b010),
        LabelSet(0b100),
        LabelSet(0b011),
        LabelSet(0b110),
        LabelSet(0b101),
        LabelSet(0b111),
    ];

    pub const fn empty() -> Self {
        LabelSet(0)
    }

    pub fn singleton(label: NliLabel) -> Self {
        LabelSet(1 << label.index())
    }

    pub fn insert(&mut self, label: NliLabel) {
        self.0 |= 1 << label.index();
    }

    pub fn contains(self, label: NliLabel) -> bool {
        self.0 & (1 << label.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = NliLabel> {
        NliLabel::ALL.into_iter().filter(move |l| self.contains(*l))
    }

    /// Position in [`LabelSet::COMBINATIONS`]; `None` for the empty set.
    pub fn combination_index(self) -> Option<usize> {
        Self::COMBINATIONS.iter().position(|c| *c == self)
    }

    /// The unique member of a singleton set.
    pub fn single(self) -> Option<NliLabel> {
        if self.len() == 1 {
            self.iter().next()
        } else {
            None
        }
    }

    pub fn is_subset(self, other: LabelSet) -> bool {
        self.0 & !other.0 == 0
    }
}

impl FromIterator<NliLabel> for LabelSet {
    fn from_iter<I: IntoIterator<Item = NliLabel>>(iter: I) -> Self {
        let mut set = LabelSet::empty();
        for label in iter {
            set.insert(label);
        }
        set
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for label in self.iter() {
            write!(f, "{}", label.letter())?;
        }
        Ok(())
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl FromStr for LabelSet {
    type Err = Error;

    /// Parses strings such as `"EN"` or `"CE"`; membership is order-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let mut set = LabelSet::empty();
        for ch in s.chars() {
            let label = NliLabel::from_letter(ch)
                .ok_or_else(|| Error::InvalidInput(format!("unknown label letter {ch:?} in {s:?}")))?;
            if set.contains(label) {
                return Err(Error::InvalidInput(format!("repeated label {ch:?} in {s:?}")));
            }
            set.insert(label);
        }
        if set.is_empty() {
            return Err(Error::InvalidInput("empty label set".into()));
        }
        Ok(set)
    }
}

impl TryFrom<String> for LabelSet {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<LabelSet> for String {
    fn from(set: LabelSet) -> Self {
        set.to_string()
    }
}

/// Vote counts over E, N, C for one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[u32; 3]", into = "[u32; 3]")]
pub struct AnnotationCounts {
    votes: [u32; 3],
}

impl AnnotationCounts {
    pub fn new(entailment: u32, neutral: u32, contradiction: u32) -> Self {
        AnnotationCounts {
            votes: [entailment, neutral, contradiction],
        }
    }

    pub fn get(&self, label: NliLabel) -> u32 {
        self.votes[label.index()]
    }

    pub fn as_array(&self) -> [u32; 3] {
        self.votes
    }

    pub fn total(&self) -> u32 {
        self.votes.iter().sum()
    }

    pub fn add_vote(&mut self, label: NliLabel) {
        self.votes[label.index()] += 1;
    }
}

impl From<[u32; 3]> for AnnotationCounts {
    fn from(votes: [u32; 3]) -> Self {
        AnnotationCounts { votes }
    }
}

impl From<AnnotationCounts> for [u32; 3] {
    fn from(counts: AnnotationCounts) -> Self {
        counts.votes
    }
}

impl fmt::Display for AnnotationCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [e, n, c] = self.votes;
        write!(f, "[{e},{n},{c}]")
    }
}

/// A probability distribution over E, N, C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct LabelDistribution([f64; 3]);

impl TryFrom<[f64; 3]> for LabelDistribution {
    type Error = Error;

    fn try_from(probs: [f64; 3]) -> Result<Self> {
        LabelDistribution::new(probs)
    }
}

impl From<LabelDistribution> for [f64; 3] {
    fn from(dist: LabelDistribution) -> Self {
        dist.0
    }
}

impl LabelDistribution {
    pub fn new(probs: [f64; 3]) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidInput(format!("probabilities {probs:?} not in [0,1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!("probabilities {probs:?} sum to {sum}")));
        }
        Ok(LabelDistribution(probs))
    }

    pub fn get(&self, label: NliLabel) -> f64 {
        self.0[label.index()]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn point_mass(label: NliLabel) -> Self {
        let mut probs = [0.0; 3];
        probs[label.index()] = 1.0;
        LabelDistribution(probs)
    }
}

/// How to resolve a sigmoid multilabel in which no label clears the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptySetFallback {
    /// Singleton of the most probable label, ties broken E < N < C.
    #[default]
    Argmax,
    /// Every label tied at the maximum probability.
    ArgmaxWithTies,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionConfig {
    /// Inclusive lower bound for a label to be present in a distribution.
    pub dist_threshold: f64,
    /// Strict lower bound for an independent sigmoid probability.
    pub sigmoid_threshold: f64,
    pub empty_set_fallback: EmptySetFallback,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        ConversionConfig {
            dist_threshold: 0.2,
            sigmoid_threshold: 0.5,
            empty_set_fallback: EmptySetFallback::Argmax,
        }
    }
}

impl ConversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dist_threshold > 0.0 && self.dist_threshold <= 1.0 / 3.0) {
            return Err(Error::Config(format!(
                "dist_threshold must lie in (0, 1/3], got {}",
                self.dist_threshold
            )));
        }
        if !(self.sigmoid_threshold > 0.0 && self.sigmoid_threshold < 1.0) {
            return Err(Error::Config(format!(
                "sigmoid_threshold must lie in (0, 1), got {}",
                self.sigmoid_threshold
            )));
        }
        Ok(())
    }
}

pub fn counts_to_distribution(counts: &AnnotationCounts) -> Result<LabelDistribution> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::InvalidInput("annotation counts sum to zero".into()));
    }
    let total = f64::from(total);
    let votes = counts.as_array();
    Ok(LabelDistribution([
        f64::from(votes[0]) / total,
        f64::from(votes[1]) / total,
        f64::from(votes[2]) / total,
    ]))
}

/// Labels whose probability is at least `cfg.dist_threshold`.
pub fn distribution_to_multilabel(dist: &LabelDistribution, cfg: &ConversionConfig) -> LabelSet {
    let set: LabelSet = NliLabel::ALL
        .into_iter()
        .filter(|l| dist.get(*l) >= cfg.dist_threshold)
        .collect();
    if set.is_empty() {
        // only reachable through rounding when the threshold sits at exactly 1/3
        LabelSet::singleton(argmax(&dist.as_array()))
    } else {
        set
    }
}

pub fn multilabel_to_fourway(labels: LabelSet) -> Result<FourWayLabel> {
    match labels.len() {
        0 => Err(Error::InvalidInput("cannot convert an empty label set".into())),
        1 => Ok(labels.single().expect("singleton").into()),
        _ => Ok(FourWayLabel::Complicated),
    }
}

/// Labels whose independent probability is strictly above
/// `cfg.sigmoid_threshold`, falling back to `cfg.empty_set_fallback` when none is.
pub fn sigmoid_probs_to_multilabel(per_label_probs: &[f64; 3], cfg: &ConversionConfig) -> LabelSet {
    let set: LabelSet = NliLabel::ALL
        .into_iter()
        .filter(|l| per_label_probs[l.index()] > cfg.sigmoid_threshold)
        .collect();
    if !set.is_empty() {
        return set;
    }
    match cfg.empty_set_fallback {
        EmptySetFallback::Argmax => LabelSet::singleton(argmax(per_label_probs)),
        EmptySetFallback::ArgmaxWithTies => {
            let max = per_label_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            NliLabel::ALL
                .into_iter()
                .filter(|l| per_label_probs[l.index()] == max)
                .collect()
        }
    }
}

/// Index of the largest value; the first wins ties.
pub(crate) fn argmax(values: &[f64; 3]) -> NliLabel {
    let mut best = 0;
    for i in 1..3 {
        if values[i] > values[best] {
            best = i;
        }
    }
    NliLabel::ALL[best]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyBase {
    #[default]
    Bits,
    Nats,
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(dist: &LabelDistribution) -> f64 {
    entropy_in(dist, EntropyBase::Bits)
}

pub fn entropy_in(dist: &LabelDistribution, base: EntropyBase) -> f64 {
    let nats: f64 = dist
        .as_array()
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    let value = match base {
        EntropyBase::Bits => nats / std::f64::consts::LN_2,
        EntropyBase::Nats => nats,
    };
    value.max(0.0)
}

/// Result of a majority vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Majority {
    pub label: NliLabel,
    pub votes: u32,
    /// Another label has the same count; `label` is then the first in E < N < C.
    pub tie: bool,
}

pub fn majority(counts: &AnnotationCounts) -> Majority {
    let votes = counts.as_array();
    let mut best = 0;
    for i in 1..3 {
        if votes[i] > votes[best] {
            best = i;
        }
    }
    let tie = (0..3).any(|i| i != best && votes[i] == votes[best]);
    Majority {
        label: NliLabel::ALL[best],
        votes: votes[best],
        tie,
    }
}
