use crate::{NldtError, Result};

/// Allowed exponents for a power-law term.
pub const EXPONENT_SET: [i32; 7] = [-3, -2, -1, 0, 1, 2, 3];
pub const MAX_ABS_EXPONENT: i32 = 3;
pub const DEFAULT_MAX_TERMS: usize = 3;

/// One nonlinear test on a normalized state:
///
/// ```text
/// g(x) = sum_i w_i * prod_j x_j^b_ij + theta1
/// f(x) = g(x)                  (no modulus)
/// f(x) = |g(x)| - |theta2|     (modulus)
/// ```
///
/// Points with `f <= 0` take the left branch.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRule {
    exponents: Vec<Vec<i32>>,
    weights: Vec<f64>,
    theta1: f64,
    theta2: Option<f64>,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&v) || v.is_nan() {
        return Err(NldtError::InvalidRule(format!("{name} = {v} lies outside [-1, 1]")));
    }
    Ok(())
}

impl SplitRule {
    pub fn new(exponents: Vec<Vec<i32>>, weights: Vec<f64>, theta1: f64, theta2: Option<f64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(NldtError::InvalidRule("a rule needs at least one term".into()));
        }
        if weights.len() != exponents.len() {
            return Err(NldtError::InvalidRule(format!("{} weights for {} terms", weights.len(), exponents.len())));
        }
        let d = exponents[0].len();
        if d == 0 {
            return Err(NldtError::InvalidRule("exponent rows are empty".into()));
        }
        for (i, row) in exponents.iter().enumerate() {
            if row.len() != d {
                return Err(NldtError::InvalidRule(format!("exponent row {i} has ragged length")));
            }
            if let Some(b) = row.iter().find(|b| b.abs() > MAX_ABS_EXPONENT) {
                return Err(NldtError::InvalidRule(format!("exponent {b} in row {i} is outside Z")));
            }
            if row.iter().all(|&b| b == 0) {
                return Err(NldtError::InvalidRule(format!("exponent row {i} is all zero")));
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            check_unit(&format!("w{i}"), w)?;
        }
        check_unit("theta1", theta1)?;
        if let Some(t2) = theta2 {
            check_unit("theta2", t2)?;
        }
        Ok(Self { exponents, weights, theta1, theta2 })
    }

    /// Number of terms `p`.
    pub fn n_terms(&self) -> usize {
        self.exponents.len()
    }

    /// State dimension `d`.
    pub fn dim(&self) -> usize {
        self.exponents[0].len()
    }

    pub fn exponents(&self) -> &[Vec<i32>] {
        &self.exponents
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> Option<f64> {
        self.theta2
    }

    pub fn modulus(&self) -> bool {
        self.theta2.is_some()
    }

    /// Number of real coefficients: `p + 1 + m`.
    pub fn n_coefficients(&self) -> usize {
        self.n_terms() + 1 + usize::from(self.modulus())
    }

    /// Rule complexity: the count of nonzero exponents.
    pub fn complexity(&self) -> usize {
        self.exponents.iter().flatten().filter(|&&b| b != 0).count()
    }

    /// Same structure (`B` and `m`) with new coefficients.
    pub fn with_coefficients(&self, weights: &[f64], theta1: f64, theta2: Option<f64>) -> Result<Self> {
        if self.modulus() != theta2.is_some() {
            return Err(NldtError::InvalidRule("modulus flag cannot change".into()));
        }
        Self::new(self.exponents.clone(), weights.to_vec(), theta1, theta2)
    }

    /// The `m = 0` rule with the same `B`, `w` and `theta1`.
    pub fn without_modulus(&self) -> Self {
        Self { theta2: None, ..self.clone() }
    }

    /// Evaluates `f` at a normalized state.
    pub fn eval(&self, xh: &[f64]) -> Result<f64> {
        if xh.len() != self.dim() {
            return Err(NldtError::DimensionMismatch { expected: self.dim(), got: xh.len() });
        }
        let mut g = self.theta1;
        for (row, w) in self.exponents.iter().zip(&self.weights) {
            g += w * power_term(row, xh)?;
        }
        Ok(match self.theta2 {
            None => g,
            Some(t2) => g.abs() - t2.abs(),
        })
    }

    /// True when the state routes to the left child.
    pub fn goes_left(&self, xh: &[f64]) -> Result<bool> {
        Ok(self.eval(xh)? <= 0.0)
    }
}

/// `prod_j x_j^b_j`. A zero feature under a negative exponent is a domain
/// error naming that feature.
pub fn power_term(row: &[i32], xh: &[f64]) -> Result<f64> {
    let mut prod = 1.0;
    for (j, (&b, &x)) in row.iter().zip(xh).enumerate() {
        if b == 0 {
            continue;
        }
        if b < 0 && x == 0.0 {
            return Err(NldtError::Domain { feature: j });
        }
        prod *= x.powi(b);
    }
    Ok(prod)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mountaincar_root() -> SplitRule {
        SplitRule::new(vec![vec![-2, 0], vec![0, -1], vec![1, 1]], vec![-0.63, 0.28, -0.22], 0.96, Some(0.36)).unwrap()
    }

    fn cartpole_rule() -> SplitRule {
        SplitRule::new(vec![vec![1, 0, -2, 0], vec![0, 0, 0, -2]], vec![-0.18, -0.63], 0.67, Some(0.24)).unwrap()
    }

    #[test]
    fn mountaincar_root_at_ones() {
        // |0.96 - 0.63 + 0.28 - 0.22| - 0.36 = 0.39 - 0.36
        let f = mountaincar_root().eval(&[1.0, 1.0]).unwrap();
        assert!((f - 0.03).abs() < 1e-12, "{f}");
    }

    #[test]
    fn cartpole_rule_at_ones() {
        // |-0.18 - 0.63 + 0.67| - 0.24 = 0.14 - 0.24
        let f = cartpole_rule().eval(&[1.0; 4]).unwrap();
        assert!((f + 0.10).abs() < 1e-12, "{f}");
        assert!(cartpole_rule().goes_left(&[1.0; 4]).unwrap());
    }

    #[test]
    fn constant_rule() {
        let r = SplitRule::new(vec![vec![1, 0]], vec![0.0], 0.5, None).unwrap();
        for x in [[1.0, 1.0], [1.7, 2.0], [3.0, 0.1]] {
            assert_eq!(r.eval(&x).unwrap(), 0.5);
        }
    }

    #[test]
    fn complexity_counts_nonzero_exponents() {
        let r = SplitRule::new(vec![vec![1, 0], vec![0, -2]], vec![0.1, 0.2], 0.0, None).unwrap();
        assert_eq!(r.complexity(), 2);
        assert_eq!(cartpole_rule().complexity(), 3);
        assert_eq!(mountaincar_root().complexity(), 4);
    }

    #[test]
    fn zero_exponent_matrix_is_rejected() {
        let err = SplitRule::new(vec![vec![0, 0]], vec![0.1], 0.0, None).unwrap_err();
        assert!(matches!(err, NldtError::InvalidRule(_)));
    }

    #[test]
    fn box_and_exponent_violations_are_rejected() {
        assert!(SplitRule::new(vec![vec![4]], vec![0.1], 0.0, None).is_err());
        assert!(SplitRule::new(vec![vec![1]], vec![1.1], 0.0, None).is_err());
        assert!(SplitRule::new(vec![vec![1]], vec![0.1], -1.5, None).is_err());
        assert!(SplitRule::new(vec![vec![1]], vec![0.1], 0.0, Some(2.0)).is_err());
        assert!(SplitRule::new(vec![vec![1]], vec![0.1, 0.2], 0.0, None).is_err());
        assert!(SplitRule::new(vec![], vec![], 0.0, None).is_err());
    }

    #[test]
    fn negative_exponent_on_zero_feature_names_it() {
        let r = SplitRule::new(vec![vec![0, -1]], vec![1.0], 0.0, None).unwrap();
        assert!(matches!(r.eval(&[1.0, 0.0]), Err(NldtError::Domain { feature: 1 })));
        // positive exponents are fine at zero
        let r = SplitRule::new(vec![vec![2, 0]], vec![1.0], 0.0, None).unwrap();
        assert_eq!(r.eval(&[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn modulus_is_abs_of_plain_twin_minus_theta2() {
        let r = mountaincar_root();
        let twin = r.without_modulus();
        for x in [[1.0, 1.0], [1.3, 1.9], [2.0, 1.1]] {
            let lhs = r.eval(&x).unwrap();
            let rhs = twin.eval(&x).unwrap().abs() - 0.36;
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_theta2_acts_through_abs() {
        let a = SplitRule::new(vec![vec![1]], vec![0.5], -0.2, Some(0.3)).unwrap();
        let b = SplitRule::new(vec![vec![1]], vec![0.5], -0.2, Some(-0.3)).unwrap();
        assert_eq!(a.eval(&[1.4]).unwrap(), b.eval(&[1.4]).unwrap());
    }
}
