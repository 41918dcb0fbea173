//! Real-coded variation operators on box-bounded vectors.

use std::cmp::Ordering;

use rand::Rng;

const EPS: f64 = 1e-14;

/// Bounded simulated binary crossover. Each variable crosses with
/// probability 0.5; children stay inside `[lo, hi]`.
pub fn sbx<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    lo: &[f64],
    hi: &[f64],
    eta: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    for i in 0..a.len() {
        if rng.random::<f64>() > 0.5 || (a[i] - b[i]).abs() <= EPS {
            continue;
        }
        let (y1, y2) = if a[i] < b[i] { (a[i], b[i]) } else { (b[i], a[i]) };
        let span = y2 - y1;
        let u: f64 = rng.random();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (y1 - lo[i]) / span);
        let bq2 = spread(1.0 + 2.0 * (hi[i] - y2) / span);
        let mut v1 = (0.5 * ((y1 + y2) - bq1 * span)).clamp(lo[i], hi[i]);
        let mut v2 = (0.5 * ((y1 + y2) + bq2 * span)).clamp(lo[i], hi[i]);
        if rng.random::<bool>() {
            std::mem::swap(&mut v1, &mut v2);
        }
        c1[i] = v1;
        c2[i] = v2;
    }
    (c1, c2)
}

/// Bounded polynomial mutation applied per variable with probability
/// `rate`.
pub fn polynomial_mutation<R: Rng + ?Sized>(x: &mut [f64], lo: &[f64], hi: &[f64], eta: f64, rate: f64, rng: &mut R) {
    let mpow = 1.0 / (eta + 1.0);
    for i in 0..x.len() {
        if rng.random::<f64>() >= rate {
            continue;
        }
        let span = hi[i] - lo[i];
        if span <= 0.0 {
            continue;
        }
        let d1 = (x[i] - lo[i]) / span;
        let d2 = (hi[i] - x[i]) / span;
        let u: f64 = rng.random();
        let dq = if u < 0.5 {
            let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            val.powf(mpow) - 1.0
        } else {
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - val.powf(mpow)
        };
        x[i] = (x[i] + dq * span).clamp(lo[i], hi[i]);
    }
}

/// Binary tournament: index of the better of two random picks under
/// `better` (Less means the first argument wins).
pub fn tournament<R, F>(n: usize, rng: &mut R, mut cmp: F) -> usize
where
    R: Rng + ?Sized,
    F: FnMut(usize, usize) -> Ordering,
{
    let i = rng.random_range(0..n);
    let j = rng.random_range(0..n);
    if cmp(j, i) == Ordering::Less {
        j
    } else {
        i
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::task_rng;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn operators_respect_bounds(
            a in proptest::collection::vec(-1.0f64..=1.0, 5),
            b in proptest::collection::vec(-1.0f64..=1.0, 5),
            seed in any::<u64>(),
        ) {
            let lo = vec![-1.0; 5];
            let hi = vec![1.0; 5];
            let mut rng = task_rng(seed, 0);
            let (mut c1, c2) = sbx(&a, &b, &lo, &hi, 15.0, &mut rng);
            polynomial_mutation(&mut c1, &lo, &hi, 20.0, 1.0, &mut rng);
            for v in c1.iter().chain(&c2) {
                prop_assert!((-1.0..=1.0).contains(v));
            }
        }
    }

    #[test]
    fn sbx_of_identical_parents_is_identity() {
        let mut rng = task_rng(1, 1);
        let p = vec![0.3, -0.2];
        let (c1, c2) = sbx(&p, &p, &[-1.0; 2], &[1.0; 2], 15.0, &mut rng);
        assert_eq!(c1, p);
        assert_eq!(c2, p);
    }

    #[test]
    fn sbx_children_center_on_parents() {
        let mut rng = task_rng(2, 0);
        let (mut s, n) = (0.0, 20_000);
        for _ in 0..n {
            let (c1, c2) = sbx(&[-0.2], &[0.4], &[-1.0], &[1.0], 15.0, &mut rng);
            s += c1[0] + c2[0];
        }
        // mean of children pairs stays near the parents' mean
        assert!((s / (2 * n) as f64 - 0.1).abs() < 0.01);
    }

    #[test]
    fn tournament_prefers_better() {
        let fit = [5.0f64, 1.0, 3.0];
        let mut rng = task_rng(3, 0);
        let wins = (0..3000).filter(|_| tournament(3, &mut rng, |a, b| fit[a].total_cmp(&fit[b])) == 1).count();
        // P(index 1 wins) = 1 - (2/3)^2 = 5/9
        assert!((wins as f64 / 3000.0 - 5.0 / 9.0).abs() < 0.04, "{wins}");
    }
}
