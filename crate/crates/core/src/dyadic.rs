//! Paths sampled on the dyadic grid `{k 2^-n : k = 0..2^n}` and their exact
//! Faber–Schauder analysis and synthesis.
//!
//! The hat functions are `e_{0,0}(t) = max(min(t, 1 - t), 0)` and
//! `e_{m,k}(t) = 2^{-m/2} e_{0,0}(2^m t - k)`. A grid path of resolution `n`
//! is reproduced exactly by `x(0) + (x(1) - x(0)) t` plus the hats of levels
//! `0..n`, with coefficients
//!
//! ```text
//! theta_{m,k} = 2^{m/2} (2 x((2k+1) 2^{-(m+1)}) - x(k 2^{-m}) - x((k+1) 2^{-m}))
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{HurstError, Result};
use crate::numeric::CompensatedSum;

/// Largest supported grid resolution.
pub const MAX_RESOLUTION: u32 = 30;

/// A path sampled at `k 2^-n`, `k = 0..=2^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicSeries {
    values: Vec<f64>,
    resolution: u32,
}

impl DyadicSeries {
    pub fn from_samples(values: Vec<f64>, n: u32) -> Result<Self> {
        if n == 0 || n > MAX_RESOLUTION {
            return Err(HurstError::InvalidResolution(n));
        }
        let expected = (1usize << n) + 1;
        if values.len() != expected {
            return Err(HurstError::LengthMismatch {
                expected,
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(HurstError::NonFinite { index });
        }
        Ok(Self {
            values,
            resolution: n,
        })
    }

    /// Infers the resolution from the sample count.
    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        let intervals = len.saturating_sub(1);
        if intervals < 2 || !intervals.is_power_of_two() {
            let n = if intervals < 2 { 1 } else { intervals.ilog2() + 1 };
            return Err(HurstError::LengthMismatch {
                expected: (1usize << n) + 1,
                actual: len,
            });
        }
        Self::from_samples(values, intervals.trailing_zeros())
    }

    /// Samples `f` on the grid of resolution `n`.
    pub fn from_fn(n: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 || n > MAX_RESOLUTION {
            return Err(HurstError::InvalidResolution(n));
        }
        let step = (-(n as f64)).exp2();
        let values = (0..=(1usize << n)).map(|k| f(k as f64 * step)).collect();
        Self::from_samples(values, n)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value at `k 2^-level` for `level <= resolution`.
    pub fn at(&self, level: u32, k: usize) -> f64 {
        self.values[k << (self.resolution - level)]
    }

    /// `lambda * x`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * lambda).collect(),
            resolution: self.resolution,
        }
    }

    /// `x(t) - x(0) - t (x(1) - x(0))`; exactly zero at both endpoints.
    pub fn detrended(&self) -> Self {
        let x0 = self.values[0];
        let slope = self.values[self.values.len() - 1] - x0;
        let step = (-(self.resolution as f64)).exp2();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| (v - x0) - (k as f64 * step) * slope)
            .collect();
        Self {
            values,
            resolution: self.resolution,
        }
    }

    /// Restriction to the coarser grid of resolution `level`.
    pub fn coarsened(&self, level: u32) -> Result<Self> {
        if level == 0 || level > self.resolution {
            return Err(HurstError::LevelExceedsResolution {
                level,
                resolution: self.resolution,
            });
        }
        let stride = 1usize << (self.resolution - level);
        Ok(Self {
            values: self.values.iter().step_by(stride).copied().collect(),
            resolution: level,
        })
    }
}

/// Faber–Schauder coefficients of a grid path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaberSchauderPyramid {
    x0: f64,
    slope: f64,
    theta: Vec<Vec<f64>>,
}

impl FaberSchauderPyramid {
    /// Builds a pyramid from explicit parts; level `m` must hold `2^m` values.
    pub fn from_parts(x0: f64, slope: f64, theta: Vec<Vec<f64>>) -> Result<Self> {
        if theta.is_empty() || theta.len() > MAX_RESOLUTION as usize {
            return Err(HurstError::InvalidResolution(theta.len() as u32));
        }
        for (m, level) in theta.iter().enumerate() {
            if level.len() != 1 << m {
                return Err(HurstError::IndexOutOfRange(format!(
                    "level {m} holds {} coefficients, expected {}",
                    level.len(),
                    1usize << m
                )));
            }
        }
        Ok(Self { x0, slope, theta })
    }

    /// Coefficients computed directly from the grid samples.
    pub fn analyze(series: &DyadicSeries) -> Self {
        let n = series.resolution();
        let theta = (0..n)
            .map(|m| {
                let scale = (0.5 * m as f64).exp2();
                (0..1usize << m)
                    .map(|k| {
                        let left = series.at(m, k);
                        let right = series.at(m, k + 1);
                        let mid = series.at(m + 1, 2 * k + 1);
                        scale * (2.0 * mid - left - right)
                    })
                    .collect()
            })
            .collect();
        let values = series.values();
        Self {
            x0: values[0],
            slope: values[values.len() - 1] - values[0],
            theta,
        }
    }

    /// Values of the truncated expansion through level `n - 1` on the grid of
    /// resolution `n`.
    pub fn synthesize(&self, n: u32) -> Result<DyadicSeries> {
        if n > self.depth() {
            return Err(HurstError::DepthExceeded {
                requested: n,
                depth: self.depth(),
            });
        }
        if n == 0 {
            return Err(HurstError::InvalidResolution(0));
        }
        // Refine level by level: each new midpoint is the average of its
        // neighbours plus half the peak height of its hat.
        let mut values = vec![self.x0, self.x0 + self.slope];
        for (m, level) in self.theta.iter().take(n as usize).enumerate() {
            let half_peak = 0.5 * (-0.5 * m as f64).exp2();
            let mut next = Vec::with_capacity(2 * values.len() - 1);
            for (k, &theta) in level.iter().enumerate() {
                next.push(values[k]);
                next.push(0.5 * (values[k] + values[k + 1]) + theta * half_peak);
            }
            next.push(values[values.len() - 1]);
            values = next;
        }
        DyadicSeries::from_samples(values, n)
    }

    pub fn depth(&self) -> u32 {
        self.theta.len() as u32
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn level(&self, m: u32) -> &[f64] {
        &self.theta[m as usize]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn theta(&self, m: u32, k: usize) -> f64 {
        self.theta[m as usize][k]
    }

    /// Mutable access for constructing perturbed pyramids.
    pub fn level_mut(&mut self, m: u32) -> &mut [f64] {
        &mut self.theta[m as usize]
    }

    /// `s_j` and `xi_j` for `j = 1..=depth`.
    pub fn energy_trace(&self) -> EnergyTrace {
        let mut total = CompensatedSum::new();
        let mut s = Vec::with_capacity(self.theta.len());
        for level in &self.theta {
            let level_sum: CompensatedSum = level.iter().map(|t| t * t).collect();
            total.merge(&level_sum);
            s.push(total.value().max(0.0).sqrt());
        }
        EnergyTrace { s }
    }
}

/// Faber–Schauder function `e_{m,k}` evaluated at `t`.
pub fn fs_eval(m: u32, k: usize, t: f64) -> Result<f64> {
    if m >= 63 || k >= 1usize << m {
        return Err(HurstError::IndexOutOfRange(format!(
            "k = {k} is not in 0..2^{m}"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(HurstError::IndexOutOfRange(format!("t = {t} outside [0, 1]")));
    }
    let u = (m as f64).exp2() * t - k as f64;
    let hat = u.min(1.0 - u).max(0.0);
    Ok((-0.5 * m as f64).exp2() * hat)
}

/// Cumulative Faber–Schauder energy `s_j = sqrt(sum_{m<j} sum_k theta_{m,k}^2)`
/// and `xi_j = log2(s_j) / j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    s: Vec<f64>,
}

impl EnergyTrace {
    /// Largest `j` available.
    pub fn depth(&self) -> u32 {
        self.s.len() as u32
    }

    /// `s_j` for `1 <= j <= depth`.
    pub fn s(&self, j: u32) -> f64 {
        assert!(j >= 1 && j <= self.depth(), "level {j} out of range");
        self.s[j as usize - 1]
    }

    /// `xi_j`, or `None` where `s_j = 0`.
    pub fn xi(&self, j: u32) -> Option<f64> {
        let s = self.s(j);
        (s > 0.0).then(|| s.log2() / j as f64)
    }

    /// `(s_1, ..., s_depth)`.
    pub fn s_values(&self) -> &[f64] {
        &self.s
    }

    pub fn xi_values(&self) -> Vec<Option<f64>> {
        (1..=self.depth()).map(|j| self.xi(j)).collect()
    }
}
