use serde::{Deserialize, Serialize};

use crate::{NldtError, Result};

/// Per-feature bounds mapping raw states onto `[1, 2]`.
///
/// States outside the bounds are not clamped; they extrapolate linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl NormalizationBounds {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(NldtError::DimensionMismatch { expected: min.len(), got: max.len() });
        }
        if min.is_empty() {
            return Err(NldtError::Dataset("bounds need at least one feature".into()));
        }
        for (feature, (&lo, &hi)) in min.iter().zip(&max).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(NldtError::InvalidBounds { feature, min: lo, max: hi });
            }
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.normalize_into(x, &mut out)?;
        Ok(out)
    }

    pub fn normalize_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(NldtError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o = 1.0 + (x[j] - self.min[j]) / (self.max[j] - self.min[j]);
        }
        Ok(())
    }

    /// Inverse map from normalized to raw units.
    pub fn denormalize(&self, xh: &[f64]) -> Result<Vec<f64>> {
        if xh.len() != self.dim() {
            return Err(NldtError::DimensionMismatch { expected: self.dim(), got: xh.len() });
        }
        Ok(xh.iter().enumerate().map(|(j, v)| self.min[j] + (v - 1.0) * (self.max[j] - self.min[j])).collect())
    }
}
