use serde::{Deserialize, Serialize};

use crate::error::{HurstError, Result};

/// Weights `alpha_0, ..., alpha_m` of a scale estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightProfile {
    alpha: Vec<f64>,
}

impl WeightProfile {
    /// Requires every weight finite and non-negative, and `alpha_0 > 0`.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(HurstError::InvalidWeights("no weights given".into()));
        }
        if let Some(bad) = alpha.iter().find(|a| !a.is_finite() || **a < 0.0) {
            return Err(HurstError::InvalidWeights(format!(
                "weight {bad} is negative or not finite"
            )));
        }
        if alpha[0] <= 0.0 {
            return Err(HurstError::InvalidWeights("alpha_0 must be positive".into()));
        }
        Ok(Self { alpha })
    }

    /// `alpha_k = 1`.
    pub fn uniform(m: usize) -> Self {
        Self {
            alpha: vec![1.0; m + 1],
        }
    }

    /// `alpha_k = ratio^k`.
    pub fn geometric(m: usize, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(HurstError::InvalidWeights(format!(
                "geometric ratio {ratio} must be positive"
            )));
        }
        Self::new((0..=m).map(|k| ratio.powi(k as i32)).collect())
    }

    pub fn m(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `alpha_k`, zero outside `0..=m`.
    pub fn get(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.alpha.get(k as usize).copied().unwrap_or(0.0)
        }
    }

    /// Copy rescaled to sum to one; the flag reports whether rescaling changed
    /// anything.
    pub fn normalized(&self) -> (Self, bool) {
        let total: f64 = self.alpha.iter().sum();
        if total == 1.0 {
            return (self.clone(), false);
        }
        let alpha = self.alpha.iter().map(|a| a / total).collect();
        (Self { alpha }, true)
    }
}

impl TryFrom<Vec<f64>> for WeightProfile {
    type Error = HurstError;

    fn try_from(alpha: Vec<f64>) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<WeightProfile> for Vec<f64> {
    fn from(p: WeightProfile) -> Self {
        p.alpha
    }
}
