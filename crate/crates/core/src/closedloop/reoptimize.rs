use std::cell::RefCell;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::envs::{rollout_summary, EnvKind};
use crate::optim::rga::{self, RgaConfig};
use crate::par;
use crate::rng::{derive_seed, task_rng};
use crate::tree::{CoefficientVector, Nldt};
use crate::{NldtError, Result};

/// How episode seeds change between generations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedPolicy {
    /// New common seeds every generation.
    Fresh,
    /// The same seeds in every generation.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClosedLoopConfig {
    /// Episodes averaged per fitness evaluation.
    pub episodes: usize,
    pub generations: usize,
    pub pop_size: usize,
    pub eta_c: f64,
    pub eta_m: f64,
    pub p_crossover: f64,
    /// Spread of the perturbed copies in the initial population.
    pub init_sigma: f64,
    pub seed_policy: SeedPolicy,
    pub seed: u64,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        ClosedLoopConfig {
            episodes: 20,
            generations: 30,
            pop_size: 40,
            eta_c: 15.0,
            eta_m: 20.0,
            p_crossover: 0.9,
            init_sigma: 0.1,
            seed_policy: SeedPolicy::Fresh,
            seed: 0,
        }
    }
}

impl ClosedLoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(NldtError::Config("episodes per evaluation must be at least 1".into()));
        }
        if self.pop_size < 2 {
            return Err(NldtError::Config("population size must be at least 2".into()));
        }
        if self.init_sigma < 0.0 {
            return Err(NldtError::Config("init_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Episode seeds shared by every individual of generation `gen`.
pub fn generation_seeds(cfg: &ClosedLoopConfig, gen: usize) -> Vec<u64> {
    let stream = match cfg.seed_policy {
        SeedPolicy::Fresh => gen as u64,
        SeedPolicy::Fixed => 0,
    };
    let base = derive_seed(cfg.seed, stream);
    (0..cfg.episodes as u64).map(|e| derive_seed(base, e)).collect()
}

/// Mean cumulative reward of `tree` over one episode per seed.
pub fn fitness_closed(tree: &Nldt, kind: EnvKind, seeds: &[u64]) -> Result<f64> {
    if seeds.is_empty() {
        return Err(NldtError::Config("no episode seeds".into()));
    }
    let rewards = par::map_slice(seeds, |&s| rollout_summary(kind.build().as_mut(), tree, s).map(|e| e.total_reward));
    let mut total = 0.0;
    for r in rewards {
        total += r?;
    }
    Ok(total / seeds.len() as f64)
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct ClosedLoopResult {
    pub tree: Nldt,
    pub curve: Vec<CurvePoint>,
}

/// Re-fits every weight and bias of `tree` against episodic reward with a
/// real-coded GA; topology, exponents and modulus flags stay fixed.
/// `on_generation` sees the incumbent after each generation.
pub fn reoptimize<F>(
    tree: &Nldt,
    kind: EnvKind,
    cfg: &ClosedLoopConfig,
    mut on_generation: F,
) -> Result<ClosedLoopResult>
where
    F: FnMut(&CurvePoint, &Nldt) -> Result<()>,
{
    cfg.validate()?;
    if tree.dim() != kind.state_dim() || tree.n_actions() != kind.n_actions() {
        return Err(NldtError::DimensionMismatch { expected: kind.state_dim(), got: tree.dim() });
    }
    let start = tree.flatten();
    let n = start.len();
    if n == 0 || cfg.generations == 0 {
        let seeds = generation_seeds(cfg, 0);
        let f = fitness_closed(tree, kind, &seeds)?;
        let point = CurvePoint { generation: 0, best: f, mean: f };
        on_generation(&point, tree)?;
        return Ok(ClosedLoopResult { tree: tree.clone(), curve: vec![point] });
    }

    let mut rng = task_rng(cfg.seed, u64::MAX);
    let noise = Normal::new(0.0, cfg.init_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut init = vec![start.0.clone()];
    while init.len() < cfg.pop_size {
        init.push(start.0.iter().map(|v| (v + noise.sample(&mut rng)).clamp(-1.0, 1.0)).collect());
    }
    let gcfg = RgaConfig {
        pop_size: cfg.pop_size,
        max_gen: cfg.generations,
        stall_gens: 0,
        eta_c: cfg.eta_c,
        eta_m: cfg.eta_m,
        p_crossover: cfg.p_crossover,
        p_mutation: None,
        n_elite: 1,
        ..RgaConfig::default()
    };
    let failure: RefCell<Option<NldtError>> = RefCell::new(None);
    let mut curve = Vec::new();
    let lo = vec![-1.0; n];
    let hi = vec![1.0; n];
    let result = rga::minimize(
        &gcfg,
        &lo,
        &hi,
        init,
        &mut rng,
        true,
        |gen, xs| match score_population(tree, kind, xs, &generation_seeds(cfg, gen)) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                vec![f64::INFINITY; xs.len()]
            }
        },
        |view| {
            if failure.borrow().is_some() {
                return;
            }
            let best = -view.fitness[view.best];
            let mean = -view.fitness.iter().sum::<f64>() / view.fitness.len() as f64;
            let point = CurvePoint { generation: view.generation, best, mean };
            curve.push(point);
            let step = tree
                .inject(&CoefficientVector(view.population[view.best].clone()))
                .and_then(|t| on_generation(&point, &t));
            if let Err(e) = step {
                failure.borrow_mut().get_or_insert(e);
            }
        },
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let best = tree.inject(&CoefficientVector(result.best_x))?;
    Ok(ClosedLoopResult { tree: best, curve })
}

/// Negated mean reward of each coefficient vector, all on `seeds`.
fn score_population(tree: &Nldt, kind: EnvKind, xs: &[Vec<f64>], seeds: &[u64]) -> Result<Vec<f64>> {
    let trees = xs.iter().map(|x| tree.inject(&CoefficientVector(x.clone()))).collect::<Result<Vec<_>>>()?;
    let m = seeds.len();
    let rewards = par::map_indexed(trees.len() * m, |k| {
        rollout_summary(kind.build().as_mut(), &trees[k / m], seeds[k % m]).map(|e| e.total_reward)
    });
    let mut out = vec![0.0; trees.len()];
    for (k, r) in rewards.into_iter().enumerate() {
        out[k / m] -= r? / m as f64;
    }
    Ok(out)
}
