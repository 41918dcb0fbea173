use super::{NormalizationBounds, SplitRule};
use crate::{NldtError, Result};

/// Index of the largest count; ties go to the lowest action id.
pub fn majority_action(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub enum NldtNode {
    Conditional {
        rule: SplitRule,
        left: Box<NldtNode>,
        right: Box<NldtNode>,
        /// Training points per action that reached this node.
        counts: Vec<u64>,
    },
    Leaf {
        action: usize,
        counts: Vec<u64>,
    },
}

impl NldtNode {
    /// Leaf labeled with the majority of `counts`.
    pub fn leaf(counts: Vec<u64>) -> Self {
        NldtNode::Leaf { action: majority_action(&counts), counts }
    }

    pub fn conditional(rule: SplitRule, left: NldtNode, right: NldtNode, counts: Vec<u64>) -> Self {
        NldtNode::Conditional { rule, left: Box::new(left), right: Box::new(right), counts }
    }

    pub fn counts(&self) -> &[u64] {
        match self {
            NldtNode::Conditional { counts, .. } | NldtNode::Leaf { counts, .. } => counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, NldtNode::Leaf { .. })
    }

    /// Number of conditional levels below (and including) this node.
    pub fn depth(&self) -> usize {
        match self {
            NldtNode::Leaf { .. } => 0,
            NldtNode::Conditional { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            NldtNode::Leaf { .. } => 1,
            NldtNode::Conditional { left, right, .. } => 1 + left.size() + right.size(),
        }
    }

    /// Converts this node to a majority leaf of its stored counts.
    pub fn to_majority_leaf(&self) -> NldtNode {
        NldtNode::leaf(self.counts().to_vec())
    }

    fn visit_preorder<'a>(&'a self, out: &mut Vec<&'a NldtNode>) {
        out.push(self);
        if let NldtNode::Conditional { left, right, .. } = self {
            left.visit_preorder(out);
            right.visit_preorder(out);
        }
    }

    fn truncate(&self, remaining: usize) -> NldtNode {
        match self {
            NldtNode::Leaf { .. } => self.clone(),
            NldtNode::Conditional { .. } if remaining == 0 => self.to_majority_leaf(),
            NldtNode::Conditional { rule, left, right, counts } => NldtNode::conditional(
                rule.clone(),
                left.truncate(remaining - 1),
                right.truncate(remaining - 1),
                counts.clone(),
            ),
        }
    }
}

/// A node of the pre-order flattened tree. Child fields are pre-order
/// indices.
#[derive(Debug, Clone, Copy)]
pub enum FlatNode<'a> {
    Conditional { rule: &'a SplitRule, left: usize, right: usize },
    Leaf { action: usize },
}

/// A binary nonlinear decision tree together with the normalization bounds
/// its rules were fit under.
#[derive(Debug, Clone, PartialEq)]
pub struct Nldt {
    root: NldtNode,
    bounds: NormalizationBounds,
    n_actions: usize,
    depth: usize,
}

impl Nldt {
    pub fn new(root: NldtNode, bounds: NormalizationBounds, n_actions: usize) -> Result<Self> {
        if n_actions == 0 {
            return Err(NldtError::InvalidTree("n_actions must be positive".into()));
        }
        let d = bounds.dim();
        let mut nodes = Vec::new();
        root.visit_preorder(&mut nodes);
        for node in nodes {
            match node {
                NldtNode::Conditional { rule, counts, .. } => {
                    if rule.dim() != d {
                        return Err(NldtError::InvalidTree(format!(
                            "rule dimension {} differs from state dimension {d}",
                            rule.dim()
                        )));
                    }
                    check_counts(counts, n_actions)?;
                }
                NldtNode::Leaf { action, counts } => {
                    if *action >= n_actions {
                        return Err(NldtError::InvalidTree(format!("leaf action {action} outside 0..{n_actions}")));
                    }
                    check_counts(counts, n_actions)?;
                    if counts.iter().any(|&c| c > 0) && majority_action(counts) != *action {
                        return Err(NldtError::InvalidTree(format!(
                            "leaf action {action} is not the majority of its counts {counts:?}"
                        )));
                    }
                }
            }
        }
        let depth = root.depth();
        Ok(Self { root, bounds, n_actions, depth })
    }

    /// A tree with a single leaf.
    pub fn single_leaf(action: usize, bounds: NormalizationBounds, n_actions: usize) -> Result<Self> {
        Self::new(NldtNode::Leaf { action, counts: vec![0; n_actions] }, bounds, n_actions)
    }

    pub fn root(&self) -> &NldtNode {
        &self.root
    }

    pub fn bounds(&self) -> &NormalizationBounds {
        &self.bounds
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn into_root(self) -> NldtNode {
        self.root
    }

    pub fn nodes_preorder(&self) -> Vec<&NldtNode> {
        let mut out = Vec::new();
        self.root.visit_preorder(&mut out);
        out
    }

    /// Split rules in pre-order.
    pub fn rules(&self) -> Vec<&SplitRule> {
        self.nodes_preorder()
            .into_iter()
            .filter_map(|n| match n {
                NldtNode::Conditional { rule, .. } => Some(rule),
                NldtNode::Leaf { .. } => None,
            })
            .collect()
    }

    pub fn n_rules(&self) -> usize {
        self.rules().len()
    }

    /// Mean rule complexity, 0 for a single-leaf tree.
    pub fn mean_rule_length(&self) -> f64 {
        let rules = self.rules();
        if rules.is_empty() {
            return 0.0;
        }
        rules.iter().map(|r| r.complexity() as f64).sum::<f64>() / rules.len() as f64
    }

    pub fn flat(&self) -> Vec<FlatNode<'_>> {
        fn go<'a>(node: &'a NldtNode, out: &mut Vec<FlatNode<'a>>) -> usize {
            let idx = out.len();
            match node {
                NldtNode::Leaf { action, .. } => out.push(FlatNode::Leaf { action: *action }),
                NldtNode::Conditional { rule, left, right, .. } => {
                    out.push(FlatNode::Leaf { action: 0 });
                    let l = go(left, out);
                    let r = go(right, out);
                    out[idx] = FlatNode::Conditional { rule, left: l, right: r };
                }
            }
            idx
        }
        let mut out = Vec::new();
        go(&self.root, &mut out);
        out
    }

    /// Routes a normalized state to its leaf.
    pub fn predict_normalized(&self, xh: &[f64]) -> Result<usize> {
        let mut node = &self.root;
        loop {
            match node {
                NldtNode::Leaf { action, .. } => return Ok(*action),
                NldtNode::Conditional { rule, left, right, .. } => {
                    node = if rule.goes_left(xh)? { left } else { right };
                }
            }
        }
    }

    /// Predicts the action for a raw state.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let xh = self.bounds.normalize(x)?;
        self.predict_normalized(&xh)
    }

    /// Top `k` levels of the tree; truncated conditionals become majority
    /// leaves of their stored counts.
    pub fn depth_prefix(&self, k: usize) -> Nldt {
        let root = self.root.truncate(k);
        let depth = root.depth();
        Nldt { root, bounds: self.bounds.clone(), n_actions: self.n_actions, depth }
    }

    /// Same tree with a new root. The root must be compatible with the
    /// bounds and action count.
    pub fn with_root(&self, root: NldtNode) -> Result<Nldt> {
        Nldt::new(root, self.bounds.clone(), self.n_actions)
    }

    /// True when both trees have the same topology, exponent matrices and
    /// modulus flags.
    pub fn same_structure(&self, other: &Nldt) -> bool {
        fn go(a: &NldtNode, b: &NldtNode) -> bool {
            match (a, b) {
                (NldtNode::Leaf { .. }, NldtNode::Leaf { .. }) => true,
                (
                    NldtNode::Conditional { rule: ra, left: la, right: rra, .. },
                    NldtNode::Conditional { rule: rb, left: lb, right: rrb, .. },
                ) => ra.exponents() == rb.exponents() && ra.modulus() == rb.modulus() && go(la, lb) && go(rra, rrb),
                _ => false,
            }
        }
        self.dim() == other.dim() && go(&self.root, &other.root)
    }
}

fn check_counts(counts: &[u64], n_actions: usize) -> Result<()> {
    if counts.len() != n_actions {
        return Err(NldtError::InvalidTree(format!(
            "counts vector of length {} for {n_actions} actions",
            counts.len()
        )));
    }
    Ok(())
}
