//! Open-loop induction: a bilevel search for each split (rule structure
//! above, coefficients below), recursive tree growth and pruning.

mod induce;
mod lower;
mod prune;
mod upper;

use serde::{Deserialize, Serialize};

use crate::optim::RgaConfig;
use crate::tree::{SplitRule, DEFAULT_MAX_TERMS, EXPONENT_SET, MAX_ABS_EXPONENT};
use crate::{NldtError, Result};

pub use induce::{induce_tree, InductionReport, LeafReason, NodeStat};
pub use lower::{exact_net_impurity, lower_solve, LowerSolution, TermMatrix};
pub use prune::{prune, DEFAULT_PRUNE_TOLERANCE};
pub use upper::{upper_search, UpperStats};

/// Which optimizer fits the coefficients of a fixed rule structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LowerMethod {
    Rga,
    Local,
}

impl std::str::FromStr for LowerMethod {
    type Err = NldtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rga" => Ok(LowerMethod::Rga),
            "local" => Ok(LowerMethod::Local),
            other => Err(NldtError::Config(format!("unknown lower optimizer '{other}' (rga|local)"))),
        }
    }
}

/// Structure-level GA settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpperConfig {
    pub pop_size: usize,
    pub max_gen: usize,
    pub stall_gens: usize,
    pub stall_tol: f64,
    pub p_crossover: f64,
    /// Probability of flipping the modulus flag in a mutated child.
    pub p_flip_modulus: f64,
}

impl Default for UpperConfig {
    fn default() -> Self {
        UpperConfig {
            pop_size: 40,
            max_gen: 100,
            stall_gens: 5,
            stall_tol: 1e-4,
            p_crossover: 0.9,
            p_flip_modulus: 0.1,
        }
    }
}

/// Derivative-based coefficient search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalConfig {
    /// Dipole-initialized restarts per solve.
    pub starts: usize,
    pub max_iter: usize,
    /// Initial width of the sigmoid replacing hard routing.
    pub smoothing: f64,
    /// Number of warm-started passes; each narrows the sigmoid by `shrink`.
    pub stages: usize,
    pub shrink: f64,
    /// Rows drawn for fitting the smoothed objective; 0 uses every row.
    /// The offset refit and the reported impurity always use every row.
    pub sample: usize,
}

impl Default for LocalConfig {
    fn default() -> Self {
        LocalConfig { starts: 1, max_iter: 12, smoothing: 0.1, stages: 3, shrink: 0.2, sample: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BilevelConfig {
    pub tau_i: f64,
    pub exponent_set: Vec<i32>,
    pub max_terms: usize,
    pub max_depth: usize,
    pub min_node_size: usize,
    pub upper: UpperConfig,
    pub lower: LowerMethod,
    pub lower_rga: RgaConfig,
    pub local: LocalConfig,
    pub seed: u64,
}

impl Default for BilevelConfig {
    fn default() -> Self {
        BilevelConfig {
            tau_i: 0.05,
            exponent_set: EXPONENT_SET.to_vec(),
            max_terms: DEFAULT_MAX_TERMS,
            max_depth: 6,
            min_node_size: 10,
            upper: UpperConfig::default(),
            lower: LowerMethod::Local,
            lower_rga: RgaConfig::default(),
            local: LocalConfig::default(),
            seed: 0,
        }
    }
}

impl BilevelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NldtError::Config(m));
        if !(self.tau_i > 0.0 && self.tau_i < 1.0) {
            return bad(format!("tau_i = {} must lie in (0, 1)", self.tau_i));
        }
        if self.upper.pop_size < 2 || self.lower_rga.pop_size < 2 {
            return bad("population sizes must be at least 2".into());
        }
        if self.max_terms == 0 {
            return bad("max_terms must be at least 1".into());
        }
        if !self.exponent_set.iter().any(|&b| b != 0) {
            return bad("exponent set has no nonzero value".into());
        }
        if let Some(b) = self.exponent_set.iter().find(|b| b.abs() > MAX_ABS_EXPONENT) {
            return bad(format!("exponent {b} exceeds {MAX_ABS_EXPONENT} in magnitude"));
        }
        if self.local.starts == 0
            || self.local.smoothing <= 0.0
            || !(self.local.shrink > 0.0 && self.local.shrink <= 1.0)
        {
            return bad("local optimizer needs at least one start and a positive smoothing".into());
        }
        Ok(())
    }

    pub(crate) fn nonzero_exponents(&self) -> Vec<i32> {
        let mut v: Vec<i32> = self.exponent_set.iter().copied().filter(|&b| b != 0).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Best split found for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub rule: SplitRule,
    /// Net impurity of the split.
    pub f_l: f64,
    /// Nonzero exponents in the rule.
    pub f_u: usize,
    /// Whether the net impurity is within `tau_i`.
    pub feasible: bool,
}

/// Gini impurity of a class histogram.
pub fn gini(counts: &[u64]) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(NldtError::EmptyNode);
    }
    let n = n as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

/// Size-weighted Gini of the two children; an empty side contributes 0.
pub fn weighted_gini(left: &[u64], right: &[u64]) -> f64 {
    let nl: u64 = left.iter().sum();
    let nr: u64 = right.iter().sum();
    let n = (nl + nr) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let part = |c: &[u64], k: u64| if k == 0 { 0.0 } else { k as f64 / n * gini(c).unwrap_or(0.0) };
    part(left, nl) + part(right, nr)
}

/// Normalized rows and labels reaching one node.
#[derive(Debug, Clone)]
pub struct NodeData {
    d: usize,
    n_classes: usize,
    xh: Vec<f64>,
    labels: Vec<usize>,
}

impl NodeData {
    /// `xh` holds `labels.len()` normalized rows of width `d`.
    pub fn new(d: usize, n_classes: usize, xh: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if d == 0 || xh.len() != labels.len() * d {
            return Err(NldtError::DimensionMismatch { expected: labels.len() * d.max(1), got: xh.len() });
        }
        if let Some(&a) = labels.iter().find(|&&a| a >= n_classes) {
            return Err(NldtError::InvalidAction { action: a, n_actions: n_classes });
        }
        Ok(NodeData { d, n_classes, xh, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        NodeData::new(d, n_classes, rows.concat(), labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.xh[i * self.d..(i + 1) * self.d]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.n_classes];
        for &a in &self.labels {
            c[a] += 1;
        }
        c
    }

    pub fn gini(&self) -> Result<f64> {
        gini(&self.class_counts())
    }

    fn subset(&self, idx: &[usize]) -> NodeData {
        let mut xh = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            xh.extend_from_slice(self.row(i));
        }
        NodeData { d: self.d, n_classes: self.n_classes, xh, labels: idx.iter().map(|&i| self.labels[i]).collect() }
    }

    /// Rows routed left and right by `rule`.
    pub fn partition(&self, rule: &SplitRule) -> Result<(NodeData, NodeData)> {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for i in 0..self.len() {
            if rule.goes_left(self.row(i))? {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        Ok((self.subset(&left), self.subset(&right)))
    }
}

/// Net impurity of `rule` on the node; a one-sided split scores the
/// node's own Gini.
pub fn net_impurity(rule: &SplitRule, node: &NodeData) -> Result<f64> {
    let mut left = vec![0u64; node.n_classes];
    let mut right = vec![0u64; node.n_classes];
    for i in 0..node.len() {
        if rule.goes_left(node.row(i))? {
            left[node.labels[i]] += 1;
        } else {
            right[node.labels[i]] += 1;
        }
    }
    Ok(weighted_gini(&left, &right))
}
