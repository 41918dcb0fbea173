use serde::{Deserialize, Serialize};

use super::{Nldt, NldtNode, NormalizationBounds, SplitRule};
use crate::{NldtError, Result};

/// On-disk form of a tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeJson {
    pub n_actions: usize,
    pub d: usize,
    pub bounds: BoundsJson,
    pub root: NodeJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsJson {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeJson {
    Conditional {
        rule: RuleJson,
        left: Box<NodeJson>,
        right: Box<NodeJson>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        counts: Vec<u64>,
    },
    Leaf {
        action: usize,
        #[serde(default)]
        counts: Vec<u64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleJson {
    #[serde(rename = "B")]
    pub exponents: Vec<Vec<i32>>,
    pub w: Vec<f64>,
    pub theta1: f64,
    pub theta2: Option<f64>,
    pub m: u8,
}

impl From<&Nldt> for TreeJson {
    fn from(tree: &Nldt) -> Self {
        fn node(n: &NldtNode) -> NodeJson {
            match n {
                NldtNode::Leaf { action, counts } => NodeJson::Leaf { action: *action, counts: counts.clone() },
                NldtNode::Conditional { rule, left, right, counts } => NodeJson::Conditional {
                    rule: RuleJson {
                        exponents: rule.exponents().to_vec(),
                        w: rule.weights().to_vec(),
                        theta1: rule.theta1(),
                        theta2: rule.theta2(),
                        m: u8::from(rule.modulus()),
                    },
                    left: Box::new(node(left)),
                    right: Box::new(node(right)),
                    counts: counts.clone(),
                },
            }
        }
        TreeJson {
            n_actions: tree.n_actions(),
            d: tree.dim(),
            bounds: BoundsJson { min: tree.bounds().min().to_vec(), max: tree.bounds().max().to_vec() },
            root: node(tree.root()),
        }
    }
}

impl TryFrom<TreeJson> for Nldt {
    type Error = NldtError;

    fn try_from(t: TreeJson) -> Result<Self> {
        let n_actions = t.n_actions;
        let fill = |counts: Vec<u64>| if counts.is_empty() { vec![0; n_actions] } else { counts };
        fn node(n: NodeJson, fill: &dyn Fn(Vec<u64>) -> Vec<u64>) -> Result<NldtNode> {
            Ok(match n {
                NodeJson::Leaf { action, counts } => NldtNode::Leaf { action, counts: fill(counts) },
                NodeJson::Conditional { rule, left, right, counts } => {
                    let theta2 = match (rule.m, rule.theta2) {
                        (0, _) => None,
                        (1, Some(t2)) => Some(t2),
                        (1, None) => return Err(NldtError::InvalidRule("m = 1 requires theta2".into())),
                        (m, _) => return Err(NldtError::InvalidRule(format!("modulus flag {m} is not 0 or 1"))),
                    };
                    let rule = SplitRule::new(rule.exponents, rule.w, rule.theta1, theta2)?;
                    NldtNode::conditional(rule, node(*left, fill)?, node(*right, fill)?, fill(counts))
                }
            })
        }
        let bounds = NormalizationBounds::new(t.bounds.min, t.bounds.max)?;
        if bounds.dim() != t.d {
            return Err(NldtError::DimensionMismatch { expected: t.d, got: bounds.dim() });
        }
        Nldt::new(node(t.root, &fill)?, bounds, n_actions)
    }
}

pub fn to_json(tree: &Nldt) -> String {
    serde_json::to_string_pretty(&TreeJson::from(tree)).expect("tree serialization is infallible")
}

pub fn from_json(s: &str) -> Result<Nldt> {
    let raw: TreeJson = serde_json::from_str(s)?;
    Nldt::try_from(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_schema() {
        let s = r#"{
            "n_actions": 2, "d": 1,
            "bounds": {"min": [0.0], "max": [1.0]},
            "root": {
                "rule": {"B": [[1]], "w": [0.5], "theta1": -0.75, "theta2": null, "m": 0},
                "left": {"action": 0, "counts": [4, 1]},
                "right": {"action": 1}
            }
        }"#;
        let t = from_json(s).unwrap();
        assert_eq!(t.n_rules(), 1);
        assert_eq!(t.predict(&[0.1]).unwrap(), 0);
        assert_eq!(t.predict(&[0.9]).unwrap(), 1);
        assert_eq!(from_json(&to_json(&t)).unwrap(), t);
    }

    #[test]
    fn rejects_bad_modulus_flag() {
        let s = r#"{"n_actions": 2, "d": 1, "bounds": {"min": [0.0], "max": [1.0]},
            "root": {"rule": {"B": [[1]], "w": [0.5], "theta1": 0.1, "theta2": null, "m": 1},
                     "left": {"action": 0}, "right": {"action": 1}}}"#;
        assert!(from_json(s).is_err());
    }

    #[test]
    fn full_precision_survives() {
        let rule = SplitRule::new(vec![vec![1]], vec![0.123_456_789_012_345_67], -0.1 / 3.0, None).unwrap();
        let root = NldtNode::conditional(rule, NldtNode::leaf(vec![1, 0]), NldtNode::leaf(vec![0, 1]), vec![1, 1]);
        let t = Nldt::new(root, NormalizationBounds::new(vec![0.1], vec![0.7]).unwrap(), 2).unwrap();
        let back = from_json(&to_json(&t)).unwrap();
        assert_eq!(back.flatten(), t.flatten());
    }
}
