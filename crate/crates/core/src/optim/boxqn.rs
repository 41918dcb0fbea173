//! Projected quasi-Newton (BFGS) minimization inside a box.

/// Stopping rules for [`minimize_box`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxQnOptions {
    pub max_iter: usize,
    /// Projected-gradient infinity norm treated as stationary.
    pub gtol: f64,
    /// Relative objective decrease treated as converged.
    pub ftol: f64,
    /// Largest coordinate move of a steepest-descent step.
    pub max_first_step: f64,
}

impl Default for BoxQnOptions {
    fn default() -> Self {
        BoxQnOptions { max_iter: 100, gtol: 1e-6, ftol: 1e-9, max_first_step: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct BoxQnResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Minimizes `fg(x, grad) -> f` over `lo <= x <= hi`.
///
/// Variables at a bound whose gradient pushes outward are frozen for the
/// step; the rest follow the inverse-Hessian direction with Armijo
/// backtracking along the projected path.
pub fn minimize_box<F>(mut fg: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: BoxQnOptions) -> BoxQnResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let clamp = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut evaluations = 1;
    let mut h = identity(n);
    let mut fresh = true;
    let mut iterations = 0;

    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut d = vec![0.0; n];
    while iterations < opts.max_iter {
        let free: Vec<bool> =
            (0..n).map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0))).collect();
        let pg = (0..n).filter(|&i| free[i]).map(|i| g[i].abs()).fold(0.0, f64::max);
        if pg <= opts.gtol {
            break;
        }
        iterations += 1;
        for i in 0..n {
            d[i] = if free[i] { -(0..n).filter(|&j| free[j]).map(|j| h[i][j] * g[j]).sum::<f64>() } else { 0.0 };
        }
        if fresh || dot(&d, &g) >= 0.0 {
            h = identity(n);
            fresh = true;
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
        }
        let mut t = 1.0;
        if fresh {
            // first steepest step moves at most `max_first_step` per coordinate
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dmax > opts.max_first_step {
                t = opts.max_first_step / dmax;
            }
        }
        let mut accepted = false;
        while t > 1e-10 {
            for i in 0..n {
                x_new[i] = x[i] + t * d[i];
            }
            clamp(&mut x_new);
            let f_try = fg(&x_new, &mut g_new);
            evaluations += 1;
            let decrease: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
            if f_try <= f + 1e-4 * decrease && f_try.is_finite() {
                let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
                if fresh {
                    let yy = dot(&y, &y);
                    let sy = dot(&s, &y);
                    if sy > 1e-12 && yy > 0.0 {
                        h = identity(n);
                        h.iter_mut().enumerate().for_each(|(i, r)| r[i] = sy / yy);
                    }
                    fresh = false;
                }
                bfgs_update(&mut h, &s, &y);
                let df = f - f_try;
                x.copy_from_slice(&x_new);
                g.copy_from_slice(&g_new);
                f = f_try;
                accepted = true;
                if df <= opts.ftol * f.abs().max(1.0) {
                    return BoxQnResult { x, f, iterations, evaluations };
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    BoxQnResult { x, f, iterations, evaluations }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64]) {
    let sy = dot(s, y);
    if sy <= 1e-12 {
        return;
    }
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
