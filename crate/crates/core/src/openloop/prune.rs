//! Accuracy-guarded bottom-up pruning.

use crate::data::LabeledDataset;
use crate::tree::{Nldt, NldtNode};
use crate::Result;

/// Allowed validation accuracy loss, in percentage points.
pub const DEFAULT_PRUNE_TOLERANCE: f64 = 0.25;

fn accuracy(tree: &Nldt, data: &LabeledDataset) -> Result<f64> {
    let mut hit = 0usize;
    for (row, &a) in data.rows().zip(data.actions()) {
        if tree.predict(row)? == a {
            hit += 1;
        }
    }
    Ok(100.0 * hit as f64 / data.len().max(1) as f64)
}

/// Paths (left = false) to conditional nodes in post-order, so children
/// come before parents.
fn conditional_paths(node: &NldtNode, path: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
    if let NldtNode::Conditional { left, right, .. } = node {
        path.push(false);
        conditional_paths(left, path, out);
        path.pop();
        path.push(true);
        conditional_paths(right, path, out);
        path.pop();
        out.push(path.clone());
    }
}

fn collapse_at(node: &NldtNode, path: &[bool]) -> NldtNode {
    match (path.split_first(), node) {
        (None, _) => node.to_majority_leaf(),
        (Some((&go_right, rest)), NldtNode::Conditional { rule, left, right, counts }) => {
            let (l, r) = if go_right {
                ((**left).clone(), collapse_at(right, rest))
            } else {
                (collapse_at(left, rest), (**right).clone())
            };
            NldtNode::conditional(rule.clone(), l, r, counts.clone())
        }
        (Some(_), leaf) => leaf.clone(),
    }
}

/// Replaces conditional nodes by majority leaves, deepest first, while
/// validation accuracy stays within `tolerance` percentage points of the
/// unpruned tree. Repeats until nothing changes.
pub fn prune(tree: &Nldt, validation: &LabeledDataset, tolerance: f64) -> Result<Nldt> {
    let reference = accuracy(tree, validation)?;
    let mut current = tree.clone();
    loop {
        let mut paths = Vec::new();
        conditional_paths(current.root(), &mut Vec::new(), &mut paths);
        let mut changed = false;
        for path in paths {
            let candidate = current.with_root(collapse_at(current.root(), &path))?;
            if accuracy(&candidate, validation)? >= reference - tolerance - 1e-9 {
                current = candidate;
                changed = true;
                break;
            }
        }
        if !changed {
            return Ok(current);
        }
    }
}
