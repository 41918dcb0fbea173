use serde::{Deserialize, Serialize};

use super::{Nldt, NldtNode};
use crate::{NldtError, Result};

/// All real coefficients of a tree: every rule's weights in pre-order,
/// followed by every rule's biases (`theta1`, then `theta2` when the rule
/// has a modulus) in pre-order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector(pub Vec<f64>);

impl CoefficientVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Nldt {
    /// Number of weights `n_w` and biases `n_theta`.
    pub fn coefficient_counts(&self) -> (usize, usize) {
        self.rules().iter().fold((0, 0), |(nw, nt), r| (nw + r.n_terms(), nt + 1 + usize::from(r.modulus())))
    }

    pub fn flatten(&self) -> CoefficientVector {
        let rules = self.rules();
        let mut v: Vec<f64> = rules.iter().flat_map(|r| r.weights().iter().copied()).collect();
        for r in &rules {
            v.push(r.theta1());
            if let Some(t2) = r.theta2() {
                v.push(t2);
            }
        }
        CoefficientVector(v)
    }

    /// Writes `coeffs` back into the rules, keeping topology, exponent
    /// matrices and modulus flags.
    pub fn inject(&self, coeffs: &CoefficientVector) -> Result<Nldt> {
        let (nw, nt) = self.coefficient_counts();
        if coeffs.len() != nw + nt {
            return Err(NldtError::CoefficientLength { expected: nw + nt, got: coeffs.len() });
        }
        let (weights, biases) = coeffs.0.split_at(nw);
        let mut w_cursor = 0;
        let mut b_cursor = 0;
        let root = rebuild(self.root(), weights, biases, &mut w_cursor, &mut b_cursor)?;
        self.with_root(root)
    }
}

fn rebuild(
    node: &NldtNode,
    weights: &[f64],
    biases: &[f64],
    w_cursor: &mut usize,
    b_cursor: &mut usize,
) -> Result<NldtNode> {
    match node {
        NldtNode::Leaf { .. } => Ok(node.clone()),
        NldtNode::Conditional { rule, left, right, counts } => {
            let p = rule.n_terms();
            let w = &weights[*w_cursor..*w_cursor + p];
            *w_cursor += p;
            let theta1 = biases[*b_cursor];
            *b_cursor += 1;
            let theta2 = if rule.modulus() {
                *b_cursor += 1;
                Some(biases[*b_cursor - 1])
            } else {
                None
            };
            let rule = rule.with_coefficients(w, theta1, theta2)?;
            let left = rebuild(left, weights, biases, w_cursor, b_cursor)?;
            let right = rebuild(right, weights, biases, w_cursor, b_cursor)?;
            Ok(NldtNode::conditional(rule, left, right, counts.clone()))
        }
    }
}
