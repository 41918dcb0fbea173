//! Open-loop accuracy, closed-loop statistics and plot data.

mod plot;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::envs::{rollout_summary, EnvKind, Policy};
use crate::par;
use crate::rng::derive_seed;
use crate::{Nldt, Result};

pub use plot::{collect_trace, emit_plot_data, render_svg, PlotKind, PlotSource, Trace};

/// Percentage of rows whose label the tree reproduces.
pub fn open_loop_accuracy(tree: &Nldt, ds: &LabeledDataset) -> Result<f64> {
    let mut hit = 0usize;
    for (row, &a) in ds.rows().zip(ds.actions()) {
        if tree.predict(row)? == a {
            hit += 1;
        }
    }
    Ok(100.0 * hit as f64 / ds.len() as f64)
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopStats {
    pub batches: usize,
    pub episodes: usize,
    pub seed: u64,
    /// Completion percentage across batches.
    pub completion: MeanStd,
    /// Mean episode reward across batches.
    pub reward: MeanStd,
    pub batch_completion: Vec<f64>,
    pub batch_reward: Vec<f64>,
}

/// Seed of episode `e` in batch `b`.
pub fn episode_seed(seed: u64, batch: usize, episode: usize) -> u64 {
    derive_seed(derive_seed(seed, batch as u64), episode as u64)
}

/// Runs `batches x episodes` seeded episodes and summarizes completion and
/// reward per batch.
pub fn closed_loop_stats(
    policy: &dyn Policy,
    kind: EnvKind,
    batches: usize,
    episodes: usize,
    seed: u64,
) -> Result<ClosedLoopStats> {
    let runs = par::map_indexed(batches * episodes, |k| {
        rollout_summary(kind.build().as_mut(), policy, episode_seed(seed, k / episodes, k % episodes))
    });
    let mut done = vec![0usize; batches];
    let mut reward = vec![0.0; batches];
    for (k, r) in runs.into_iter().enumerate() {
        let r = r?;
        done[k / episodes] += usize::from(r.success);
        reward[k / episodes] += r.total_reward;
    }
    let batch_completion: Vec<f64> = done.iter().map(|&d| 100.0 * d as f64 / episodes.max(1) as f64).collect();
    let batch_reward: Vec<f64> = reward.iter().map(|r| r / episodes.max(1) as f64).collect();
    Ok(ClosedLoopStats {
        batches,
        episodes,
        seed,
        completion: MeanStd::of(&batch_completion),
        reward: MeanStd::of(&batch_reward),
        batch_completion,
        batch_reward,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OpenLoopReport {
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub n_rules: usize,
    pub mean_rule_length: f64,
}

impl OpenLoopReport {
    pub fn for_tree(tree: &Nldt, train: Option<&LabeledDataset>, test: Option<&LabeledDataset>) -> Result<Self> {
        Ok(OpenLoopReport {
            train_accuracy: train.map(|d| open_loop_accuracy(tree, d)).transpose()?,
            test_accuracy: test.map(|d| open_loop_accuracy(tree, d)).transpose()?,
            n_rules: tree.n_rules(),
            mean_rule_length: tree.mean_rule_length(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub env: EnvKind,
    pub open_loop: OpenLoopReport,
    pub closed_loop: Option<ClosedLoopStats>,
    pub seeds: BTreeMap<String, u64>,
    pub wall_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
