//! Coefficient search for a fixed rule structure.

use rand::Rng;

use super::{weighted_gini, BilevelConfig, LowerMethod, NodeData};
use crate::optim::{minimize_box, rga, BoxQnOptions};
use crate::rng::TaskRng;
use crate::{NldtError, Result};

/// Power-term values of every node row under one exponent matrix,
/// stored row-major (`n x p`).
#[derive(Debug, Clone)]
pub struct TermMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl TermMatrix {
    pub fn new(exponents: &[Vec<i32>], node: &NodeData) -> Result<Self> {
        let (n, p) = (node.len(), exponents.len());
        let mut values = Vec::with_capacity(n * p);
        for i in 0..n {
            let x = node.row(i);
            for row in exponents {
                let mut prod = 1.0;
                for (j, &b) in row.iter().enumerate() {
                    if b != 0 {
                        if b < 0 && x[j] == 0.0 {
                            return Err(NldtError::Domain { feature: j });
                        }
                        prod *= x[j].powi(b);
                    }
                }
                values.push(prod);
            }
        }
        Ok(TermMatrix { n, p, values })
    }

    pub fn n_terms(&self) -> usize {
        self.p
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    fn subset(&self, idx: &[usize]) -> TermMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        TermMatrix { n: idx.len(), p: self.p, values }
    }

    /// Inner value `sum_i w_i T_ki + theta1` of row `k`.
    fn inner(&self, k: usize, params: &[f64]) -> f64 {
        let mut g = params[self.p];
        for (t, w) in self.row(k).iter().zip(params) {
            g += t * w;
        }
        g
    }
}

/// Sample keys on each side of the sample cut that bound the full-data
/// refit window.
const WINDOW: usize = 8;

/// Coefficients found by a lower-level solve and their exact net impurity.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerSolution {
    pub weights: Vec<f64>,
    pub theta1: f64,
    pub theta2: Option<f64>,
    pub f_l: f64,
    pub evaluations: usize,
}

fn routed(f: f64) -> bool {
    f <= 0.0
}

/// Exact net impurity of parameters `[w.., theta1, (theta2)]`.
pub fn exact_net_impurity(tm: &TermMatrix, labels: &[usize], n_classes: usize, modulus: bool, params: &[f64]) -> f64 {
    let mut left = vec![0u64; n_classes];
    let mut right = vec![0u64; n_classes];
    let t2 = if modulus { params[tm.p + 1].abs() } else { 0.0 };
    for (k, &c) in labels.iter().enumerate() {
        let g = tm.inner(k, params);
        let f = if modulus { g.abs() - t2 } else { g };
        if routed(f) {
            left[c] += 1;
        } else {
            right[c] += 1;
        }
    }
    weighted_gini(&left, &right)
}

/// Net impurity with routing replaced by `sigmoid(-f / s)`; writes the
/// gradient into `grad`.
#[allow(clippy::too_many_arguments)]
fn smooth_net_impurity(
    tm: &TermMatrix,
    labels: &[usize],
    n_classes: usize,
    modulus: bool,
    s: f64,
    params: &[f64],
    grad: &mut [f64],
    scratch: &mut Vec<f64>,
) -> f64 {
    let p = tm.p;
    let n = tm.n as f64;
    let t2 = if modulus { params[p + 1].abs() } else { 0.0 };
    scratch.clear();
    let mut nl_c = vec![0.0; n_classes];
    let mut n_c = vec![0.0; n_classes];
    for (k, &c) in labels.iter().enumerate() {
        let g = tm.inner(k, params);
        let (f, sign) = if modulus { (g.abs() - t2, if g < 0.0 { -1.0 } else { 1.0 }) } else { (g, 1.0) };
        let prob = 1.0 / (1.0 + (f / s).exp());
        nl_c[c] += prob;
        n_c[c] += 1.0;
        scratch.push(prob * (1.0 - prob) * sign);
    }
    let nl: f64 = nl_c.iter().sum::<f64>().max(1e-12);
    let nr = (n - nl).max(1e-12);
    let nr_c: Vec<f64> = nl_c.iter().zip(&n_c).map(|(l, t)| t - l).collect();
    let a: f64 = nl_c.iter().map(|v| v * v).sum();
    let b: f64 = nr_c.iter().map(|v| v * v).sum();
    let value = 1.0 - (a / nl + b / nr) / n;
    // d value / d f for a point of class c, up to the factor dsig
    let coef: Vec<f64> = (0..n_classes)
        .map(|c| (2.0 * nl_c[c] / nl - a / (nl * nl) - 2.0 * nr_c[c] / nr + b / (nr * nr)) / (n * s))
        .collect();
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut band = 0.0;
    for (k, &c) in labels.iter().enumerate() {
        let u = scratch[k];
        let dg = coef[c] * u;
        for (gi, t) in grad[..p].iter_mut().zip(tm.row(k)) {
            *gi += dg * t;
        }
        grad[p] += dg;
        band += coef[c] * u.abs();
    }
    if modulus {
        grad[p + 1] = if params[p + 1] < 0.0 { band } else { -band };
    }
    value
}

/// Best cut `t >= t_lo` for routing `key <= t` left, by exact sweep
/// over the sorted keys. `base_left` and `base_right` are class counts
/// already fixed on either side of every cut considered.
fn best_cut(mut pairs: Vec<(f64, usize)>, mut left: Vec<u64>, base_right: &[u64], t_lo: f64) -> Option<(f64, f64)> {
    pairs.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
    let mut right = base_right.to_vec();
    for &(_, c) in &pairs {
        right[c] += 1;
    }
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |t: f64, left: &[u64], right: &[u64]| {
        let f = weighted_gini(left, right);
        if best.is_none_or(|(bf, _)| f < bf) {
            best = Some((f, t));
        }
    };
    for i in 0..pairs.len() {
        let (z, c) = pairs[i];
        left[c] += 1;
        right[c] -= 1;
        let Some(&(nz, _)) = pairs.get(i + 1) else { break };
        if nz == z {
            continue;
        }
        let t = 0.5 * (z + nz);
        if t >= t_lo {
            consider(t, &left, &right);
        }
    }
    best
}

/// Routing keys with the weights fixed: the inner value without the
/// offset (plain rules) or its magnitude (modulus rules).
fn cut_keys(tm: &TermMatrix, modulus: bool, params: &[f64]) -> Vec<f64> {
    (0..tm.n)
        .map(|k| {
            let g = tm.inner(k, params);
            if modulus {
                g.abs()
            } else {
                g - params[tm.p]
            }
        })
        .collect()
}

fn apply_cut(p: usize, modulus: bool, t: f64, params: &mut [f64]) {
    if modulus {
        params[p + 1] = t;
    } else {
        params[p] = -t;
    }
    let scale = params.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 1.0 {
        params.iter_mut().for_each(|v| *v /= scale);
    }
}

/// Exact refit of the offset (plain rules) or band half-width (modulus
/// rules) with the weight direction held fixed, then a positive rescale
/// back into the unit box. Returns the sorted keys' chosen cut.
fn refit_offset(tm: &TermMatrix, labels: &[usize], n_classes: usize, modulus: bool, params: &mut [f64]) -> Option<f64> {
    let keys = cut_keys(tm, modulus, params);
    let t_lo = if modulus { 0.0 } else { f64::NEG_INFINITY };
    let pairs = keys.into_iter().zip(labels.iter().copied()).collect();
    let (_, t) = best_cut(pairs, vec![0; n_classes], &vec![0; n_classes], t_lo)?;
    apply_cut(tm.p, modulus, t, params);
    Some(t)
}

/// Like [`refit_offset`] but only cuts inside `[lo, hi]` (in key units of
/// `params`) are examined; rows outside are counted once.
fn refit_offset_window(
    tm: &TermMatrix,
    labels: &[usize],
    n_classes: usize,
    modulus: bool,
    params: &mut [f64],
    lo: f64,
    hi: f64,
) {
    let keys = cut_keys(tm, modulus, params);
    let mut below = vec![0u64; n_classes];
    let mut above = vec![0u64; n_classes];
    let mut inside = Vec::new();
    for (&z, &c) in keys.iter().zip(labels) {
        if z < lo {
            below[c] += 1;
        } else if z > hi {
            above[c] += 1;
        } else {
            inside.push((z, c));
        }
    }
    let t_lo = if modulus { 0.0 } else { f64::NEG_INFINITY };
    if let Some((_, t)) = best_cut(inside, below, &above, t_lo) {
        apply_cut(tm.p, modulus, t, params);
    }
}

/// Hyperplane bisecting a random pair of opposite-class points in term
/// space, scaled into the unit box.
fn dipole_start(tm: &TermMatrix, labels: &[usize], modulus: bool, rng: &mut TaskRng) -> Vec<f64> {
    let n = tm.n;
    let p = tm.p;
    let mut pair = None;
    for _ in 0..64 {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if labels[a] != labels[b] && tm.row(a) != tm.row(b) {
            pair = Some((a, b));
            break;
        }
    }
    if pair.is_none() {
        let a = rng.random_range(0..n);
        pair = (0..n).find(|&b| labels[b] != labels[a] && tm.row(a) != tm.row(b)).map(|b| (a, b));
    }
    let mut x = vec![0.0; p + 1 + usize::from(modulus)];
    let Some((a, b)) = pair else {
        for v in x.iter_mut() {
            *v = rng.random_range(-1.0..=1.0);
        }
        return x;
    };
    let (ta, tb) = (tm.row(a), tm.row(b));
    let mut theta = 0.0;
    for i in 0..p {
        x[i] = ta[i] - tb[i];
        theta -= x[i] * 0.5 * (ta[i] + tb[i]);
    }
    x[p] = theta;
    let scale = x[..=p].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        x[..=p].iter_mut().for_each(|v| *v /= scale);
    }
    if modulus {
        let mut mags: Vec<f64> = (0..n).map(|k| tm.inner(k, &x).abs()).collect();
        let mid = mags.len() / 2;
        let (_, median, _) = mags.select_nth_unstable_by(mid, f64::total_cmp);
        x[p + 1] = median.min(1.0);
    }
    x
}

/// Minimizes the net impurity over `w in [-1,1]^p`, `theta in [-1,1]^(1+m)`
/// for a fixed exponent matrix.
pub fn lower_solve(
    exponents: &[Vec<i32>],
    modulus: bool,
    node: &NodeData,
    cfg: &BilevelConfig,
    rng: &mut TaskRng,
) -> Result<LowerSolution> {
    let tm = TermMatrix::new(exponents, node)?;
    Ok(solve_terms(&tm, modulus, node, cfg, rng))
}

pub(crate) fn solve_terms(
    tm: &TermMatrix,
    modulus: bool,
    node: &NodeData,
    cfg: &BilevelConfig,
    rng: &mut TaskRng,
) -> LowerSolution {
    let dim = tm.p + 1 + usize::from(modulus);
    let lo = vec![-1.0; dim];
    let hi = vec![1.0; dim];
    let labels = node.labels();
    let c = node.n_classes();
    let exact = |x: &[f64]| exact_net_impurity(tm, labels, c, modulus, x);

    let (best, f_l, evaluations) = match cfg.lower {
        LowerMethod::Rga => {
            let rcfg = rga::RgaConfig { target: Some(0.0), ..cfg.lower_rga.clone() };
            let r = rga::minimize(
                &rcfg,
                &lo,
                &hi,
                Vec::new(),
                rng,
                false,
                |_, xs| xs.iter().map(|x| exact(x)).collect(),
                |_| {},
            );
            (r.best_x, r.best_f, r.evaluations)
        }
        LowerMethod::Local => {
            let s = cfg.local.smoothing;
            let opts = BoxQnOptions { max_iter: cfg.local.max_iter, gtol: 1e-7, ftol: 1e-7, ..Default::default() };
            let sample = (cfg.local.sample > 0 && tm.n > cfg.local.sample).then(|| {
                let mut idx = rand::seq::index::sample(rng, tm.n, cfg.local.sample).into_vec();
                idx.sort_unstable();
                (tm.subset(&idx), idx.iter().map(|&i| labels[i]).collect::<Vec<_>>())
            });
            let (stm, slabels) = match &sample {
                Some((t, l)) => (t, l.as_slice()),
                None => (tm, labels),
            };
            let mut scratch = Vec::with_capacity(stm.n);
            let mut best: Option<(Vec<f64>, f64)> = None;
            let mut evaluations = 0;
            for _ in 0..cfg.local.starts {
                let x0 = dipole_start(stm, slabels, modulus, rng);
                let mut x = x0.clone();
                let mut width = s;
                for stage in 0..cfg.local.stages.max(1) {
                    if stage > 0 {
                        let _ = refit_offset(stm, slabels, c, modulus, &mut x);
                        width *= cfg.local.shrink;
                    }
                    let r = minimize_box(
                        |x, g| smooth_net_impurity(stm, slabels, c, modulus, width, x, g, &mut scratch),
                        &x,
                        &lo,
                        &hi,
                        opts,
                    );
                    evaluations += r.evaluations;
                    x = r.x;
                }
                let mut refit = x.clone();
                if let Some(t) = refit_offset(stm, slabels, c, modulus, &mut refit) {
                    if sample.is_some() {
                        // exact cut on every row, searched between the
                        // neighbouring sample keys around the sample cut
                        let mut keys = cut_keys(stm, modulus, &x);
                        keys.sort_unstable_by(f64::total_cmp);
                        let at = keys.partition_point(|&z| z <= t);
                        let lo = keys[at.saturating_sub(WINDOW)];
                        let hi = keys[(at + WINDOW).min(keys.len() - 1)];
                        let mut full = x.clone();
                        refit_offset_window(tm, labels, c, modulus, &mut full, lo, hi);
                        refit = full;
                    }
                }
                evaluations += 4;
                for x in [x0, x, refit] {
                    let f = exact(&x);
                    if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
                        best = Some((x, f));
                    }
                }
                if best.as_ref().is_some_and(|(_, f)| *f == 0.0) {
                    break;
                }
            }
            let (x, f) = best.expect("at least one start");
            (x, f, evaluations)
        }
    };
    LowerSolution {
        weights: best[..tm.p].to_vec(),
        theta1: best[tm.p],
        theta2: modulus.then(|| best[tm.p + 1]),
        f_l,
        evaluations,
    }
}
