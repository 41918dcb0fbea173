//! Oracles and fixtures shared by the property and acceptance suites.
#![allow(dead_code)]

use nldt::data::{compute_bounds, LabeledDataset};
use nldt::openloop::{gini, upper_search, weighted_gini, BilevelConfig, NodeData};
use nldt::rng::task_rng;
use nldt::tree::{CoefficientVector, Nldt, NldtNode, NormalizationBounds, SplitRule};
use rand::Rng;

/// The reference two-rule MountainCar tree. The second rule's
/// constant 1.39 lies outside the coefficient box, so the rule is divided
/// through by it; the split it draws is unchanged.
pub fn mountaincar_reference(bounds: NormalizationBounds) -> Nldt {
    let root_rule =
        SplitRule::new(vec![vec![-2, 0], vec![0, -1], vec![1, 1]], vec![-0.63, 0.28, -0.22], 0.96, Some(0.36)).unwrap();
    let inner_rule =
        SplitRule::new(vec![vec![2, 0], vec![0, 2]], vec![-0.28 / 1.39, -0.30 / 1.39], 1.0, Some(0.53 / 1.39)).unwrap();
    let leaf = |a: usize| {
        let mut c = vec![0; 3];
        c[a] = 1;
        NldtNode::leaf(c)
    };
    let inner = NldtNode::conditional(inner_rule, leaf(2), leaf(1), vec![0, 1, 1]);
    let root = NldtNode::conditional(root_rule, inner, leaf(0), vec![1, 1, 2]);
    Nldt::new(root, bounds, 3).unwrap()
}

pub fn mountaincar_reference_bounds() -> NormalizationBounds {
    NormalizationBounds::new(vec![-1.20, -0.06], vec![0.50, 0.06]).unwrap()
}

/// The reference single-rule CartPole tree with its reference bounds.
pub fn cartpole_reference() -> Nldt {
    let rule =
        SplitRule::new(vec![vec![1, 0, -2, 0], vec![0, 0, 0, -2]], vec![-0.18, -0.63], 0.67, Some(0.24)).unwrap();
    let root = NldtNode::conditional(rule, NldtNode::leaf(vec![1, 0]), NldtNode::leaf(vec![0, 1]), vec![1, 1]);
    let bounds = NormalizationBounds::new(vec![-0.91, -0.43, -0.05, -0.40], vec![1.37, 0.88, 0.10, 0.45]).unwrap();
    Nldt::new(root, bounds, 2).unwrap()
}

/// Probability that two labels drawn with replacement differ, by counting
/// ordered pairs of an expanded label list.
pub fn pair_disagreement(counts: &[u64]) -> f64 {
    let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(k, c as usize)).collect();
    let n = labels.len();
    let mut differ = 0usize;
    for a in &labels {
        for b in &labels {
            differ += usize::from(a != b);
        }
    }
    differ as f64 / (n * n) as f64
}

fn compositions(i: usize, left: u64, counts: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if i + 1 == counts.len() {
        counts[i] = left;
        out.push(counts.clone());
        return;
    }
    for k in 0..=left {
        counts[i] = k;
        compositions(i + 1, left - k, counts, out);
    }
}

pub fn check_gini_exhaustive() {
    let mut checked = 0;
    for c in 1..=3usize {
        for n in 1..=12u64 {
            let mut all = Vec::new();
            compositions(0, n, &mut vec![0; c], &mut all);
            for h in all {
                let g = gini(&h).unwrap();
                assert!((g - pair_disagreement(&h)).abs() < 1e-12, "{h:?}");
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 12 + 90 + 454);
    assert!(gini(&[0, 0]).is_err());
}

pub fn check_split_never_worse(cases: usize) {
    let mut rng = task_rng(21, 0);
    for _ in 0..cases {
        let c = rng.random_range(2..=4);
        let left: Vec<u64> = (0..c).map(|_| rng.random_range(0..30)).collect();
        let right: Vec<u64> = (0..c).map(|_| rng.random_range(0..30)).collect();
        let parent: Vec<u64> = left.iter().zip(&right).map(|(a, b)| a + b).collect();
        if parent.iter().sum::<u64>() == 0 {
            continue;
        }
        assert!(weighted_gini(&left, &right) <= gini(&parent).unwrap() + 1e-12, "{left:?} {right:?}");
    }
}

pub fn check_normalization_cases() {
    let b = NormalizationBounds::new(vec![-1.2, -0.07], vec![0.6, 0.07]).unwrap();
    assert_eq!(b.normalize(&[-1.2, -0.07]).unwrap(), vec![1.0, 1.0]);
    assert_eq!(b.normalize(&[0.6, 0.07]).unwrap(), vec![2.0, 2.0]);
    let mid = b.normalize(&[-0.3, 0.0]).unwrap();
    assert!((mid[0] - 1.5).abs() < 1e-12 && (mid[1] - 1.5).abs() < 1e-12);
    // no clamping outside the bounds
    assert!((b.normalize(&[1.5, 0.0]).unwrap()[0] - 2.5).abs() < 1e-12);
    assert!(b.normalize(&[0.0]).is_err());
    assert!(NormalizationBounds::new(vec![1.0], vec![1.0]).is_err());
    assert!(NormalizationBounds::new(vec![2.0], vec![1.0]).is_err());
    assert!(NormalizationBounds::new(vec![0.0], vec![f64::NAN]).is_err());
    let ds = LabeledDataset::new(vec![vec![3.0, 1.0], vec![3.0, 2.0]], vec![0, 1], 2).unwrap();
    assert!(compute_bounds(&ds).is_err());
}

fn random_rule(rng: &mut impl Rng, d: usize) -> SplitRule {
    let p = rng.random_range(1..=3);
    let exponents: Vec<Vec<i32>> = (0..p)
        .map(|_| loop {
            let row: Vec<i32> = (0..d).map(|_| rng.random_range(-3..=3)).collect();
            if row.iter().any(|&b| b != 0) {
                break row;
            }
        })
        .collect();
    let weights = (0..p).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let theta2 = rng.random_bool(0.5).then(|| rng.random_range(-1.0..=1.0));
    SplitRule::new(exponents, weights, rng.random_range(-1.0..=1.0), theta2).unwrap()
}

fn random_node(rng: &mut impl Rng, d: usize, c: usize, depth: usize) -> NldtNode {
    if depth == 0 || rng.random_bool(0.3) {
        return NldtNode::leaf((0..c).map(|_| rng.random_range(0..20)).collect());
    }
    let left = random_node(rng, d, c, depth - 1);
    let right = random_node(rng, d, c, depth - 1);
    let counts = left.counts().iter().zip(right.counts()).map(|(a, b)| a + b).collect();
    NldtNode::conditional(random_rule(rng, d), left, right, counts)
}

pub fn check_flatten_inject(n_trees: usize) {
    let mut rng = task_rng(11, 0);
    for _ in 0..n_trees {
        let d = rng.random_range(1..=5);
        let c = rng.random_range(2..=4);
        let depth = rng.random_range(0..=5);
        let root = random_node(&mut rng, d, c, depth);
        let tree = Nldt::new(root, NormalizationBounds::new(vec![0.0; d], vec![1.0; d]).unwrap(), c).unwrap();
        let v = tree.flatten();
        let (nw, nt) = tree.coefficient_counts();
        assert_eq!(v.len(), nw + nt);
        assert_eq!(tree.inject(&v).unwrap(), tree);

        let fresh = CoefficientVector((0..v.len()).map(|_| rng.random_range(-1.0..=1.0)).collect());
        let moved = tree.inject(&fresh).unwrap();
        assert_eq!(moved.flatten(), fresh);
        assert!(moved.same_structure(&tree));
        let mut long = fresh.0.clone();
        long.push(0.0);
        assert!(tree.inject(&CoefficientVector(long)).is_err());
    }
}

/// Smallest complexity over every single-term structure whose best grid
/// coefficients reach net impurity `tau`.
pub fn grid_min_feasible_complexity(node: &NodeData, tau: f64, steps: usize) -> Option<usize> {
    let grid: Vec<f64> = (0..=steps).map(|i| -1.0 + 2.0 * i as f64 / steps as f64).collect();
    let mut best: Option<usize> = None;
    for b0 in -3..=3 {
        for b1 in -3..=3 {
            if b0 == 0 && b1 == 0 {
                continue;
            }
            let complexity = usize::from(b0 != 0) + usize::from(b1 != 0);
            if best.is_some_and(|b| b <= complexity) {
                continue;
            }
            let terms: Vec<f64> = (0..node.len()).map(|i| node.row(i)[0].powi(b0) * node.row(i)[1].powi(b1)).collect();
            let split = |f: &dyn Fn(f64) -> f64| {
                let mut l = vec![0u64; node.n_classes()];
                let mut r = vec![0u64; node.n_classes()];
                for (t, &y) in terms.iter().zip(node.labels()) {
                    if f(*t) <= 0.0 {
                        l[y] += 1;
                    } else {
                        r[y] += 1;
                    }
                }
                weighted_gini(&l, &r)
            };
            let mut found = false;
            'search: for &w in &grid {
                for &t1 in &grid {
                    if split(&|t| w * t + t1) <= tau {
                        found = true;
                        break 'search;
                    }
                    for &t2 in &grid {
                        if split(&|t| (w * t + t1).abs() - t2.abs()) <= tau {
                            found = true;
                            break 'search;
                        }
                    }
                }
            }
            if found {
                best = Some(complexity);
            }
        }
    }
    best
}

pub fn check_tiny_bilevel() {
    let cfg = BilevelConfig { max_terms: 1, ..Default::default() };
    let mut rng = task_rng(5, 0);
    let mut kinds = Vec::new();
    for case in 0..6 {
        let n = rng.random_range(16..=30);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| vec![rng.random_range(1.0..2.0), rng.random_range(1.0..2.0)]).collect();
        let labels: Vec<usize> = match case % 3 {
            // one feature suffices
            0 => rows.iter().map(|r| usize::from(r[1] > 1.5)).collect(),
            // needs a product
            1 => rows.iter().map(|r| usize::from(r[0] * r[1] > 2.25)).collect(),
            // a band in a ratio
            _ => rows.iter().map(|r| usize::from((r[0] / r[1] - 1.0).abs() < 0.2)).collect(),
        };
        if labels.iter().all(|&y| y == labels[0]) {
            continue;
        }
        let node = NodeData::from_rows(&rows, labels, 2).unwrap();
        let oracle = grid_min_feasible_complexity(&node, cfg.tau_i, 40);
        let (cand, _) = upper_search(&node, &cfg, case as u64).unwrap();
        assert_eq!(cand.feasible, oracle.is_some(), "case {case}: {cand:?}");
        if let Some(fu) = oracle {
            assert_eq!(cand.f_u, fu, "case {case}: {cand:?}");
        }
        assert!(cand.f_l <= node.gini().unwrap() + 1e-12);
        kinds.push(oracle);
    }
    assert!(kinds.contains(&Some(1)) && kinds.contains(&Some(2)), "{kinds:?}");
}

/// Runs `f` on a single worker thread.
#[cfg(feature = "parallel")]
pub fn serially<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn serially<R>(f: impl FnOnce() -> R) -> R {
    f()
}

#[cfg(feature = "parallel")]
pub fn check_thread_independence() {
    use nldt::closedloop::{collect_visitation, reoptimize, ClosedLoopConfig};
    use nldt::data::generate_regular;
    use nldt::envs::{EnvKind, ScriptedOracle};
    use nldt::eval::closed_loop_stats;
    use nldt::openloop::induce_tree;

    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let kind = EnvKind::CartPole;
            let ds = generate_regular(kind.build().as_mut(), &ScriptedOracle::for_env(kind), 3000, 4).unwrap();
            let cfg = BilevelConfig { max_depth: 3, seed: 8, ..Default::default() };
            let (tree, report) = induce_tree(&ds, &cfg).unwrap();
            let stats: Vec<_> = report.nodes.iter().map(|s| (s.id, s.f_u, s.f_l, s.lower_solves)).collect();
            let ccfg = ClosedLoopConfig { generations: 2, pop_size: 8, episodes: 4, seed: 3, ..Default::default() };
            let star = reoptimize(&tree, kind, &ccfg, |_, _| Ok(())).unwrap();
            let eval = closed_loop_stats(&star.tree, kind, 3, 10, 1).unwrap();
            let visits = collect_visitation(&star.tree, kind, 2000, 2).unwrap();
            (tree, stats, star.tree, star.curve, eval, visits)
        })
    };
    assert_eq!(run(1), run(8));
}

#[cfg(not(feature = "parallel"))]
pub fn check_thread_independence() {}
