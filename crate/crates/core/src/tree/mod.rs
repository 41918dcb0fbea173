//! Tree domain types: normalization, power-law split rules, the tree
//! itself, coefficient flattening and persistence.

mod coeffs;
mod export;
mod json;
mod node;
mod normalize;
mod rule;

pub use coeffs::CoefficientVector;
pub use export::{export_csv_rules, export_text, rule_text, DEFAULT_DECIMALS};
pub use json::{from_json, to_json, TreeJson};
pub use node::{majority_action, FlatNode, Nldt, NldtNode};
pub use normalize::NormalizationBounds;
pub use rule::{SplitRule, DEFAULT_MAX_TERMS, EXPONENT_SET, MAX_ABS_EXPONENT};
