//! Recursive tree growth.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{upper_search, BilevelConfig, NodeData};
use crate::data::{compute_bounds, LabeledDataset};
use crate::par;
use crate::rng::derive_seed;
use crate::tree::{Nldt, NldtNode};
use crate::{NldtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafReason {
    Pure,
    MaxDepth,
    TooSmall,
    NoImprovement,
}

/// Per-node record of an induction run. `id` numbers nodes as a heap:
/// the root is 1 and node `i` has children `2i` and `2i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStat {
    pub id: u64,
    pub depth: usize,
    pub n: usize,
    pub gini: f64,
    pub f_u: Option<usize>,
    pub f_l: Option<f64>,
    pub feasible: Option<bool>,
    pub lower_solves: usize,
    pub wall_ms: f64,
    pub leaf: Option<LeafReason>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InductionReport {
    pub nodes: Vec<NodeStat>,
    pub wall_ms: f64,
}

impl InductionReport {
    /// Wall times of nodes that ran a structure search.
    pub fn split_times_ms(&self) -> Vec<f64> {
        self.nodes.iter().filter(|s| s.f_u.is_some()).map(|s| s.wall_ms).collect()
    }
}

/// Grows a tree on `train`, normalized with bounds computed from it.
pub fn induce_tree(train: &LabeledDataset, cfg: &BilevelConfig) -> Result<(Nldt, InductionReport)> {
    cfg.validate()?;
    let counts = train.class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(NldtError::Dataset("induction needs at least two classes".into()));
    }
    let bounds = compute_bounds(train)?;
    let mut xh = Vec::with_capacity(train.len() * train.dim());
    for row in train.rows() {
        xh.extend(bounds.normalize(row)?);
    }
    let node = NodeData::new(train.dim(), train.n_actions(), xh, train.actions().to_vec())?;
    let start = Instant::now();
    let (root, mut nodes) = grow(node, 0, 1, cfg)?;
    nodes.sort_by_key(|s| s.id);
    let tree = Nldt::new(root, bounds, train.n_actions())?;
    Ok((tree, InductionReport { nodes, wall_ms: start.elapsed().as_secs_f64() * 1e3 }))
}

fn grow(node: NodeData, depth: usize, id: u64, cfg: &BilevelConfig) -> Result<(NldtNode, Vec<NodeStat>)> {
    let start = Instant::now();
    let counts = node.class_counts();
    let gini = node.gini()?;
    let mut stat = NodeStat {
        id,
        depth,
        n: node.len(),
        gini,
        f_u: None,
        f_l: None,
        feasible: None,
        lower_solves: 0,
        wall_ms: 0.0,
        leaf: None,
    };
    let stop = if gini <= cfg.tau_i {
        Some(LeafReason::Pure)
    } else if depth >= cfg.max_depth {
        Some(LeafReason::MaxDepth)
    } else if node.len() < cfg.min_node_size {
        Some(LeafReason::TooSmall)
    } else {
        None
    };
    if let Some(reason) = stop {
        stat.leaf = Some(reason);
        stat.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        return Ok((NldtNode::leaf(counts), vec![stat]));
    }

    let (cand, ustats) = upper_search(&node, cfg, derive_seed(cfg.seed, id))?;
    stat.f_u = Some(cand.f_u);
    stat.f_l = Some(cand.f_l);
    stat.feasible = Some(cand.feasible);
    stat.lower_solves = ustats.lower_solves;
    let (left, right) = node.partition(&cand.rule)?;
    stat.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    if cand.f_l >= gini - 1e-12 || left.is_empty() || right.is_empty() {
        stat.leaf = Some(LeafReason::NoImprovement);
        return Ok((NldtNode::leaf(counts), vec![stat]));
    }
    drop(node);
    let (l, r) = par::join(|| grow(left, depth + 1, 2 * id, cfg), || grow(right, depth + 1, 2 * id + 1, cfg));
    let (l, mut ls) = l?;
    let (r, rs) = r?;
    ls.push(stat);
    ls.extend(rs);
    Ok((NldtNode::conditional(cand.rule, l, r, counts), ls))
}
