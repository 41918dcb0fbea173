//! Distillation of black-box discrete-action control policies into
//! nonlinear decision trees (NLDTs).
//!
//! The pipeline has two optimization stages:
//!
//! * [`openloop`] induces a tree from labeled state-action data. Each
//!   conditional node carries a power-law split rule found by a bilevel
//!   search: an upper-level GA over rule structure and a lower-level
//!   optimizer over the rule's weights and biases.
//! * [`closedloop`] keeps the tree topology fixed and re-optimizes all
//!   coefficients against episodic reward in an [`envs::Environment`].
//!
//! [`eval`] measures open-loop fidelity and closed-loop control quality.
//!
//! With the `parallel` feature (on by default) independent lower-level
//! solves, sibling node splits and episode rollouts run on the rayon pool.
//! Results do not depend on the number of worker threads.

pub mod closedloop;
pub mod data;
pub mod envs;
pub mod error;
pub mod eval;
pub mod openloop;
pub mod optim;
pub mod par;
pub mod rng;
pub mod tree;

pub use error::{NldtError, Result};
pub use tree::{CoefficientVector, Nldt, NldtNode, NormalizationBounds, SplitRule};
