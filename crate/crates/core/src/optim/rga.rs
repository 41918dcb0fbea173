//! Generic real-coded genetic algorithm (minimization) over a box.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::operators::{polynomial_mutation, sbx, tournament};

/// Real-coded GA settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RgaConfig {
    pub pop_size: usize,
    pub max_gen: usize,
    /// Generations without meaningful change before stopping; 0 disables.
    pub stall_gens: usize,
    /// Relative change below which a generation counts as stalled.
    pub stall_tol: f64,
    pub p_crossover: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    /// Per-variable mutation probability; `None` means 1/n.
    pub p_mutation: Option<f64>,
    pub n_elite: usize,
    /// Stop as soon as the best objective reaches this value.
    pub target: Option<f64>,
}

impl Default for RgaConfig {
    fn default() -> Self {
        RgaConfig {
            pop_size: 50,
            max_gen: 50,
            stall_gens: 5,
            stall_tol: 1e-4,
            p_crossover: 0.9,
            eta_c: 15.0,
            eta_m: 20.0,
            p_mutation: None,
            n_elite: 1,
            target: None,
        }
    }
}

/// Outcome of a GA run.
#[derive(Debug, Clone)]
pub struct GaResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Best and mean objective per generation, generation 0 included.
    pub best_curve: Vec<f64>,
    pub mean_curve: Vec<f64>,
    pub evaluations: usize,
}

impl GaResult {
    pub fn generations(&self) -> usize {
        self.best_curve.len().saturating_sub(1)
    }
}

/// Population snapshot handed to observers after each generation.
pub struct GenerationView<'a> {
    pub generation: usize,
    pub population: &'a [Vec<f64>],
    pub fitness: &'a [f64],
    pub best: usize,
}

/// Minimizes with elitist generational replacement.
///
/// `eval(gen, xs)` scores a batch. With `reevaluate_all` every member,
/// elites included, is rescored each generation (noisy objectives);
/// otherwise elites keep their score.
#[allow(clippy::too_many_arguments)]
pub fn minimize<R, E, O>(
    cfg: &RgaConfig,
    lo: &[f64],
    hi: &[f64],
    seeds: Vec<Vec<f64>>,
    rng: &mut R,
    reevaluate_all: bool,
    mut eval: E,
    mut observe: O,
) -> GaResult
where
    R: Rng + ?Sized,
    E: FnMut(usize, &[Vec<f64>]) -> Vec<f64>,
    O: FnMut(&GenerationView<'_>),
{
    let n = lo.len();
    let pop_size = cfg.pop_size.max(2);
    let p_mut = cfg.p_mutation.unwrap_or(if n == 0 { 0.0 } else { 1.0 / n as f64 });
    let n_elite = cfg.n_elite.min(pop_size - 1);

    let mut pop: Vec<Vec<f64>> = seeds.into_iter().take(pop_size).collect();
    while pop.len() < pop_size {
        pop.push((0..n).map(|i| rng.random_range(lo[i]..=hi[i])).collect());
    }
    let mut fit = eval(0, &pop);
    let mut evaluations = pop.len();
    let mut best_curve = Vec::new();
    let mut mean_curve = Vec::new();
    let mut best_i = argmin(&fit);
    best_curve.push(fit[best_i]);
    mean_curve.push(mean(&fit));
    observe(&GenerationView { generation: 0, population: &pop, fitness: &fit, best: best_i });
    let mut best_x = pop[best_i].clone();
    let mut best_f = fit[best_i];

    let mut stall = 0;
    for gen in 1..=cfg.max_gen {
        if cfg.target.is_some_and(|t| best_f <= t) {
            break;
        }
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]));
        let mut next: Vec<Vec<f64>> = order[..n_elite].iter().map(|&i| pop[i].clone()).collect();
        let mut next_fit: Vec<f64> = order[..n_elite].iter().map(|&i| fit[i]).collect();
        let mut children = Vec::with_capacity(pop_size - n_elite + 1);
        while children.len() < pop_size - n_elite {
            let a = tournament(pop.len(), rng, |i, j| fit[i].total_cmp(&fit[j]));
            let b = tournament(pop.len(), rng, |i, j| fit[i].total_cmp(&fit[j]));
            let (mut c1, mut c2) = if rng.random::<f64>() < cfg.p_crossover {
                sbx(&pop[a], &pop[b], lo, hi, cfg.eta_c, rng)
            } else {
                (pop[a].clone(), pop[b].clone())
            };
            polynomial_mutation(&mut c1, lo, hi, cfg.eta_m, p_mut, rng);
            polynomial_mutation(&mut c2, lo, hi, cfg.eta_m, p_mut, rng);
            children.push(c1);
            if children.len() < pop_size - n_elite {
                children.push(c2);
            }
        }
        if reevaluate_all {
            next.extend(children);
            next_fit = eval(gen, &next);
            evaluations += next.len();
        } else {
            let child_fit = eval(gen, &children);
            evaluations += children.len();
            next.extend(children);
            next_fit.extend(child_fit);
        }
        pop = next;
        fit = next_fit;
        best_i = argmin(&fit);
        let prev = *best_curve.last().unwrap();
        best_curve.push(fit[best_i]);
        mean_curve.push(mean(&fit));
        observe(&GenerationView { generation: gen, population: &pop, fitness: &fit, best: best_i });
        if reevaluate_all || fit[best_i] < best_f {
            best_f = fit[best_i];
            best_x = pop[best_i].clone();
        }
        if cfg.stall_gens > 0 {
            let change = (prev - fit[best_i]).abs();
            if change <= cfg.stall_tol * prev.abs().max(1e-12) {
                stall += 1;
                if stall >= cfg.stall_gens {
                    break;
                }
            } else {
                stall = 0;
            }
        }
    }
    GaResult { best_x, best_f, best_curve, mean_curve, evaluations }
}

fn argmin(v: &[f64]) -> usize {
    let mut b = 0;
    for i in 1..v.len() {
        if v[i].total_cmp(&v[b]).is_lt() {
            b = i;
        }
    }
    b
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}
