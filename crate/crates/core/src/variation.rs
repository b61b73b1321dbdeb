//! Dyadic p-th variation and the branch moments of the Faber–Schauder energy.
//!
//! Along a uniformly random dyadic descent `k` through the coefficient tree,
//! the level energies `S_m = 2^m theta^2_{m, k >> (n-1-m)}` sum to the square
//! bracket of a martingale. Their `(p/2)`-moment is computed exactly by
//! enumerating all `2^(n-1)` branches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicSeries, FaberSchauderPyramid};
use crate::error::{HurstError, Result};
use crate::numeric::{half_power, ols_line, CompensatedSum};

/// Default largest level for branch enumeration.
pub const DEFAULT_BRANCH_CAP: u32 = 24;

/// Leaves handled by one sequential chunk; fixed so the reduction order does
/// not depend on the thread count.
const BRANCH_CHUNK_BITS: u32 = 12;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(HurstError::InvalidP(p))
    }
}

/// `sum_k |x((k+1) 2^-n) - x(k 2^-n)|^p`.
pub fn pth_variation(series: &DyadicSeries, p: f64, n: u32) -> Result<f64> {
    check_p(p)?;
    if n == 0 || n > series.resolution() {
        return Err(HurstError::LevelExceedsResolution {
            level: n,
            resolution: series.resolution(),
        });
    }
    let stride = 1usize << (series.resolution() - n);
    let values = series.values();
    let sum: CompensatedSum = values
        .iter()
        .step_by(stride)
        .zip(values.iter().step_by(stride).skip(1))
        .map(|(a, b)| {
            let d = (b - a).abs();
            if p == 2.0 {
                d * d
            } else {
                d.powf(p)
            }
        })
        .collect();
    Ok(sum.value())
}

/// Table of `V_n^(p)` over a grid of levels and exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationProfile {
    pub levels: Vec<u32>,
    pub p_grid: Vec<f64>,
    /// `values[i][j]` is `V^(p_grid[j])` at `levels[i]`.
    pub values: Vec<Vec<f64>>,
    /// Least-squares slope of `log2 V_n^(p)` against `n`, per exponent.
    /// `None` when fewer than two levels are available or some `V` vanishes.
    pub log2_slopes: Vec<Option<f64>>,
}

impl VariationProfile {
    pub fn value(&self, level_index: usize, p_index: usize) -> f64 {
        self.values[level_index][p_index]
    }

    /// Consecutive differences of `log2 V` along the level grid for one `p`.
    pub fn log2_increments(&self, p_index: usize) -> Vec<f64> {
        self.values
            .windows(2)
            .map(|w| w[1][p_index].log2() - w[0][p_index].log2())
            .collect()
    }
}

pub fn variation_profile(
    series: &DyadicSeries,
    p_grid: &[f64],
    levels: &[u32],
) -> Result<VariationProfile> {
    let values = levels
        .iter()
        .map(|&n| {
            p_grid
                .iter()
                .map(|&p| pth_variation(series, p, n))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let log2_slopes = (0..p_grid.len())
        .map(|j| {
            let ys: Vec<f64> = values.iter().map(|row| row[j]).collect();
            if ys.iter().any(|&v| v <= 0.0) {
                return None;
            }
            let ys: Vec<f64> = ys.iter().map(|v| v.log2()).collect();
            ols_line(&xs, &ys).map(|(slope, _)| slope)
        })
        .collect();
    Ok(VariationProfile {
        levels: levels.to_vec(),
        p_grid: p_grid.to_vec(),
        values,
        log2_slopes,
    })
}

/// `E[(sum_{m<n} S_m)^{p/2}]`, enumerated over all dyadic branches.
pub fn branch_moment(pyramid: &FaberSchauderPyramid, n: u32, p: f64) -> Result<f64> {
    branch_moment_capped(pyramid, n, p, DEFAULT_BRANCH_CAP)
}

pub fn branch_moment_capped(
    pyramid: &FaberSchauderPyramid,
    n: u32,
    p: f64,
    cap: u32,
) -> Result<f64> {
    check_p(p)?;
    if n == 0 || n > pyramid.depth() {
        return Err(HurstError::DepthExceeded {
            requested: n,
            depth: pyramid.depth(),
        });
    }
    if n > cap {
        return Err(HurstError::ResourceLimit { level: n, cap });
    }
    let energies: Vec<Vec<f64>> = (0..n)
        .map(|m| {
            let w = (m as f64).exp2();
            pyramid.level(m).iter().map(|t| w * t * t).collect()
        })
        .collect();
    let leaves = 1usize << (n - 1);
    let chunk = 1usize << BRANCH_CHUNK_BITS.min(n - 1);
    let branch_value = |k: usize| -> f64 {
        let bracket: f64 = energies
            .iter()
            .enumerate()
            .map(|(m, level)| level[k >> (n as usize - 1 - m)])
            .sum();
        half_power(bracket, p)
    };
    let partials: Vec<CompensatedSum> = (0..leaves / chunk)
        .into_par_iter()
        .map(|c| (c * chunk..(c + 1) * chunk).map(branch_value).collect())
        .collect();
    let mut total = CompensatedSum::new();
    for part in &partials {
        total.merge(part);
    }
    Ok(total.value() / leaves as f64)
}

/// Whether [`burkholder_ratio`] may detrend the path first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detrend {
    None,
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurkholderRatio {
    pub ratio: f64,
    pub variation: f64,
    pub moment: f64,
    /// True when the affine trend was removed before evaluation.
    pub detrended: bool,
}

/// `V_n^(p) / (2^{n(1-p)} E[(sum S_m)^{p/2}])` for a path pinned at zero at
/// both ends. The ratio is bounded above and below by constants depending
/// only on `p`.
pub fn burkholder_ratio(
    series: &DyadicSeries,
    p: f64,
    n: u32,
    detrend: Detrend,
) -> Result<BurkholderRatio> {
    let owned;
    let series = match detrend {
        Detrend::Affine => {
            owned = series.detrended();
            &owned
        }
        Detrend::None => {
            let values = series.values();
            let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
            if values[0].abs() > tol || values[values.len() - 1].abs() > tol {
                return Err(HurstError::NonZeroEndpoints);
            }
            series
        }
    };
    let variation = pth_variation(series, p, n)?;
    let pyramid = FaberSchauderPyramid::analyze(series);
    let moment = branch_moment(&pyramid, n, p)?;
    if moment == 0.0 {
        return Err(HurstError::ZeroMoment);
    }
    let scale = (n as f64 * (1.0 - p)).exp2();
    Ok(BurkholderRatio {
        ratio: variation / (scale * moment),
        variation,
        moment,
        detrended: detrend == Detrend::Affine,
    })
}
