//! Structure search over exponent matrices and the modulus flag.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::lower::{solve_terms, LowerSolution, TermMatrix};
use super::{BilevelConfig, NodeData, SplitCandidate};
use crate::optim::operators::tournament;
use crate::par;
use crate::rng::{fnv1a, task_rng, TaskRng};
use crate::tree::SplitRule;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Genome {
    rows: Vec<Vec<i32>>,
    modulus: bool,
}

impl Genome {
    /// Active rows sorted; inactive (all-zero) rows dropped.
    fn key(&self) -> Genome {
        let mut rows: Vec<Vec<i32>> = self.rows.iter().filter(|r| r.iter().any(|&b| b != 0)).cloned().collect();
        rows.sort();
        rows.dedup();
        Genome { rows, modulus: self.modulus }
    }

    fn complexity(&self) -> usize {
        self.rows.iter().flatten().filter(|&&b| b != 0).count()
    }

    fn hash(&self) -> u64 {
        let mut bytes = vec![u8::from(self.modulus)];
        for r in &self.rows {
            bytes.extend(r.iter().map(|&b| b as u8));
            bytes.push(0xff);
        }
        fnv1a(bytes)
    }
}

#[derive(Debug, Clone)]
struct Scored {
    genome: Genome,
    f_u: usize,
    sol: LowerSolution,
    feasible: bool,
}

fn compare(a: &Scored, b: &Scored) -> Ordering {
    match (a.feasible, b.feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => a.f_u.cmp(&b.f_u).then(a.sol.f_l.total_cmp(&b.sol.f_l)),
        (false, false) => a.sol.f_l.total_cmp(&b.sol.f_l).then(a.f_u.cmp(&b.f_u)),
    }
    .then_with(|| a.genome.cmp(&b.genome))
}

fn stall_value(s: &Scored) -> f64 {
    if s.feasible {
        s.f_u as f64 + s.sol.f_l
    } else {
        1e3 + s.sol.f_l
    }
}

/// Search statistics of one node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpperStats {
    pub generations: usize,
    pub lower_solves: usize,
    pub cache_hits: usize,
    /// Best feasible complexity after each generation (None while no
    /// feasible structure is known).
    pub best_f_u: Vec<Option<usize>>,
}

struct Search<'a> {
    node: &'a NodeData,
    cfg: &'a BilevelConfig,
    node_seed: u64,
    cache: HashMap<Genome, Scored>,
    stats: UpperStats,
}

impl Search<'_> {
    fn evaluate(&mut self, genomes: &[Genome]) -> Result<Vec<Scored>> {
        let keys: Vec<Genome> = genomes.iter().map(Genome::key).collect();
        let mut fresh: Vec<Genome> = keys.iter().filter(|k| !self.cache.contains_key(*k)).cloned().collect();
        fresh.sort();
        fresh.dedup();
        self.stats.cache_hits += keys.len() - fresh.len();
        self.stats.lower_solves += fresh.len();
        let (node, cfg, seed) = (self.node, self.cfg, self.node_seed);
        let solved = par::map_slice(&fresh, |g| -> Result<Scored> {
            let tm = TermMatrix::new(&g.rows, node)?;
            let mut rng = task_rng(seed, g.hash());
            let sol = solve_terms(&tm, g.modulus, node, cfg, &mut rng);
            let feasible = sol.f_l <= cfg.tau_i;
            Ok(Scored { genome: g.clone(), f_u: g.complexity(), sol, feasible })
        });
        for s in solved {
            let s = s?;
            self.cache.insert(s.genome.clone(), s);
        }
        Ok(keys.iter().map(|k| self.cache[k].clone()).collect())
    }
}

fn random_row(d: usize, nonzero: &[i32], rng: &mut TaskRng) -> Vec<i32> {
    let mut row = vec![0; d];
    for v in row.iter_mut() {
        if rng.random::<f64>() < 1.0 / d as f64 {
            *v = *nonzero.choose(rng).unwrap();
        }
    }
    if row.iter().all(|&b| b == 0) {
        row[rng.random_range(0..d)] = *nonzero.choose(rng).unwrap();
    }
    row
}

fn repair(g: &mut Genome, nonzero: &[i32], rng: &mut TaskRng) {
    if g.rows.iter().flatten().all(|&b| b == 0) {
        let i = rng.random_range(0..g.rows.len());
        let j = rng.random_range(0..g.rows[i].len());
        g.rows[i][j] = *nonzero.choose(rng).unwrap();
    }
}

fn initial_population(d: usize, cfg: &BilevelConfig, nonzero: &[i32], rng: &mut TaskRng) -> Vec<Genome> {
    let p = cfg.max_terms;
    let pop = cfg.upper.pop_size;
    let mut out = Vec::with_capacity(pop);
    // one-variable linear structures first
    'seed: for modulus in [false, true] {
        for j in 0..d {
            if out.len() >= pop / 2 {
                break 'seed;
            }
            let mut rows = vec![vec![0; d]; p];
            rows[0][j] = 1;
            out.push(Genome { rows, modulus });
        }
    }
    while out.len() < pop {
        let active = rng.random_range(1..=p);
        let mut rows = vec![vec![0; d]; p];
        for r in rows.iter_mut().take(active) {
            *r = random_row(d, nonzero, rng);
        }
        out.push(Genome { rows, modulus: rng.random::<bool>() });
    }
    out
}

/// Child terms are a random subset of the parents' pooled terms.
fn crossover(a: &Genome, b: &Genome, p: usize, rng: &mut TaskRng) -> Genome {
    let mut pool: Vec<&Vec<i32>> = a.rows.iter().chain(&b.rows).filter(|r| r.iter().any(|&v| v != 0)).collect();
    pool.sort();
    pool.dedup();
    pool.shuffle(rng);
    let d = a.rows[0].len();
    let mut rows: Vec<Vec<i32>> = pool.iter().filter(|_| rng.random::<bool>()).take(p).map(|r| (*r).clone()).collect();
    if rows.is_empty() {
        if let Some(r) = pool.first() {
            rows.push((*r).clone());
        }
    }
    rows.resize(p, vec![0; d]);
    Genome { rows, modulus: if rng.random::<bool>() { a.modulus } else { b.modulus } }
}

fn mutate(g: &mut Genome, nonzero: &[i32], p_flip: f64, rng: &mut TaskRng) {
    let genes = g.rows.len() * g.rows[0].len();
    let rate = 1.0 / genes as f64;
    for row in g.rows.iter_mut() {
        for v in row.iter_mut() {
            if rng.random::<f64>() >= rate {
                continue;
            }
            *v = if *v != 0 && rng.random::<f64>() < 1.0 / 3.0 {
                0
            } else {
                let others: Vec<i32> = nonzero.iter().copied().filter(|b| b != v).collect();
                *others.choose(rng).unwrap_or(&nonzero[0])
            };
        }
    }
    if rng.random::<f64>() < p_flip {
        g.modulus = !g.modulus;
    }
}

/// Key rows padded back to `p` rows.
fn padded(key: &Genome, p: usize, d: usize) -> Genome {
    let mut rows = key.rows.clone();
    rows.resize(p, vec![0; d]);
    Genome { rows, modulus: key.modulus }
}

/// Finds the simplest split whose net impurity is within `tau_i`, or the
/// purest split when none qualifies (then `feasible` is false).
pub fn upper_search(node: &NodeData, cfg: &BilevelConfig, node_seed: u64) -> Result<(SplitCandidate, UpperStats)> {
    let d = node.dim();
    let p = cfg.max_terms;
    let nonzero = cfg.nonzero_exponents();
    let mut rng = task_rng(node_seed, u64::MAX);
    let mut search = Search { node, cfg, node_seed, cache: HashMap::new(), stats: UpperStats::default() };

    let init = initial_population(d, cfg, &nonzero, &mut rng);
    let mut pop = search.evaluate(&init)?;
    survive(&mut pop, cfg.upper.pop_size);
    search.stats.best_f_u.push(best_feasible(&pop));
    let mut stall = 0;
    for gen in 1..=cfg.upper.max_gen {
        search.stats.generations = gen;
        let mut children = Vec::with_capacity(cfg.upper.pop_size);
        while children.len() < cfg.upper.pop_size {
            let a = tournament(pop.len(), &mut rng, |i, j| compare(&pop[i], &pop[j]));
            let b = tournament(pop.len(), &mut rng, |i, j| compare(&pop[i], &pop[j]));
            let (ga, gb) = (padded(&pop[a].genome, p, d), padded(&pop[b].genome, p, d));
            let mut child =
                if rng.random::<f64>() < cfg.upper.p_crossover { crossover(&ga, &gb, p, &mut rng) } else { ga };
            mutate(&mut child, &nonzero, cfg.upper.p_flip_modulus, &mut rng);
            repair(&mut child, &nonzero, &mut rng);
            children.push(child);
        }
        let prev = stall_value(&pop[0]);
        let scored = search.evaluate(&children)?;
        pop.extend(scored);
        survive(&mut pop, cfg.upper.pop_size);
        search.stats.best_f_u.push(best_feasible(&pop));
        let now = stall_value(&pop[0]);
        if (prev - now).abs() <= cfg.upper.stall_tol * prev.abs().max(1e-12) {
            stall += 1;
            if cfg.upper.stall_gens > 0 && stall >= cfg.upper.stall_gens {
                break;
            }
        } else {
            stall = 0;
        }
        if pop[0].feasible && pop[0].f_u == 1 && pop[0].sol.f_l == 0.0 {
            break;
        }
    }
    let best = &pop[0];
    let rule = SplitRule::new(best.genome.rows.clone(), best.sol.weights.clone(), best.sol.theta1, best.sol.theta2)?;
    Ok((SplitCandidate { rule, f_l: best.sol.f_l, f_u: best.f_u, feasible: best.feasible }, search.stats))
}

/// Sort best-first, drop repeated structures, keep `n`.
fn survive(pop: &mut Vec<Scored>, n: usize) {
    pop.sort_by(compare);
    pop.dedup_by(|a, b| a.genome == b.genome);
    pop.truncate(n);
}

fn best_feasible(pop: &[Scored]) -> Option<usize> {
    pop.iter().filter(|s| s.feasible).map(|s| s.f_u).min()
}
