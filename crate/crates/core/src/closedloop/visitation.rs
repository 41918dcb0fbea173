use serde::{Deserialize, Serialize};

use crate::envs::EnvKind;
use crate::rng::derive_seed;
use crate::tree::{FlatNode, Nldt, NldtNode};
use crate::{NldtError, Result};

/// Per-node closed-loop traffic, indexed in pre-order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitationProfile {
    pub n_samples: usize,
    pub visits: Vec<u64>,
    /// Actions emitted at each node; only leaves are nonzero.
    pub emissions: Vec<Vec<u64>>,
}

impl VisitationProfile {
    /// Checks that the profile matches `tree` and that every conditional
    /// node's traffic equals its children's.
    pub fn check(&self, tree: &Nldt) -> Result<()> {
        let flat = tree.flat();
        if self.visits.len() != flat.len() || self.emissions.len() != flat.len() {
            return Err(NldtError::ProfileMismatch(format!(
                "profile covers {} nodes, tree has {}",
                self.visits.len(),
                flat.len()
            )));
        }
        for (i, node) in flat.iter().enumerate() {
            if self.emissions[i].len() != tree.n_actions() {
                return Err(NldtError::ProfileMismatch(format!(
                    "node {i} has {} action counters",
                    self.emissions[i].len()
                )));
            }
            if let FlatNode::Conditional { left, right, .. } = node {
                if self.visits[i] != self.visits[*left] + self.visits[*right] {
                    return Err(NldtError::ProfileMismatch(format!("visits at node {i} do not match its children")));
                }
            }
        }
        Ok(())
    }
}

/// Runs `tree` in closed loop until `n_samples` states were routed,
/// counting every node on each routing path.
pub fn collect_visitation(tree: &Nldt, kind: EnvKind, n_samples: usize, seed: u64) -> Result<VisitationProfile> {
    if n_samples == 0 {
        return Err(NldtError::Config("n_samples must be at least 1".into()));
    }
    let flat = tree.flat();
    let mut visits = vec![0u64; flat.len()];
    let mut emissions = vec![vec![0u64; tree.n_actions()]; flat.len()];
    let mut env = kind.build();
    let mut recorded = 0;
    let mut episode = 0u64;
    while recorded < n_samples {
        let mut state = env.reset(derive_seed(seed, episode));
        episode += 1;
        loop {
            let xh = tree.bounds().normalize(&state)?;
            let mut i = 0;
            let action = loop {
                visits[i] += 1;
                match flat[i] {
                    FlatNode::Leaf { action } => break action,
                    FlatNode::Conditional { rule, left, right } => {
                        i = if rule.goes_left(&xh)? { left } else { right };
                    }
                }
            };
            emissions[i][action] += 1;
            recorded += 1;
            if recorded == n_samples {
                break;
            }
            let step = env.step(action)?;
            if step.done {
                break;
            }
            state = step.state;
        }
    }
    Ok(VisitationProfile { n_samples, visits, emissions })
}

/// Drops branches the profile never reached and relabels leaves from
/// their closed-loop emissions (training counts when a leaf emitted
/// nothing).
pub fn reengineer(tree: &Nldt, profile: &VisitationProfile) -> Result<Nldt> {
    profile.check(tree)?;
    let mut index = 0;
    let root = rebuild(tree.root(), &mut index, profile);
    tree.with_root(root)
}

/// Rebuilds the subtree whose pre-order index is `*index`, advancing
/// `*index` past it.
fn rebuild(node: &NldtNode, index: &mut usize, profile: &VisitationProfile) -> NldtNode {
    let me = *index;
    *index += 1;
    match node {
        NldtNode::Leaf { .. } => {
            let emitted = &profile.emissions[me];
            if emitted.iter().any(|&c| c > 0) {
                NldtNode::leaf(emitted.clone())
            } else {
                node.clone()
            }
        }
        NldtNode::Conditional { rule, left, right, counts } => {
            let left_visits = profile.visits[*index];
            let l = rebuild(left, index, profile);
            let right_visits = profile.visits[*index];
            let r = rebuild(right, index, profile);
            match (left_visits, right_visits) {
                (0, v) if v > 0 => r,
                (v, 0) if v > 0 => l,
                _ => NldtNode::conditional(rule.clone(), l, r, counts.clone()),
            }
        }
    }
}
