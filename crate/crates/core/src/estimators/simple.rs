//! Increment moments `m(q, k, n)` and the simple log-log regression estimator.

use super::{EstimatorKind, ScaleEstimate};
use crate::dyadic::DyadicSeries;
use crate::error::{HurstError, Result};
use crate::numeric::{ols_line, CompensatedSum};

/// Mean of `|x(k j 2^-n) - x(k (j-1) 2^-n)|^q` over `j = 1..=floor(2^n / k)`.
pub fn m_stat(series: &DyadicSeries, q: f64, k: usize, n: u32) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(HurstError::InvalidP(q));
    }
    if n == 0 || n > series.resolution() {
        return Err(HurstError::LevelExceedsResolution {
            level: n,
            resolution: series.resolution(),
        });
    }
    let cells = 1usize << n;
    if k == 0 || k > cells {
        return Err(HurstError::IndexOutOfRange(format!(
            "lag k = {k} is not in 1..={cells}"
        )));
    }
    let count = cells / k;
    let sum: CompensatedSum = (1..=count)
        .map(|j| {
            let d = (series.at(n, k * j) - series.at(n, k * (j - 1))).abs();
            if q == 2.0 {
                d * d
            } else {
                d.powf(q)
            }
        })
        .collect();
    Ok(sum.value() / count as f64)
}

/// For each `q`, fits `log2 m(q, k, n) = q h_q (log2 k - n) + log2 b_q` over
/// `k` in `ks`; reports the mean of `h_q` and of `-log2(b_q) / q`.
pub fn simple_regression(
    series: &DyadicSeries,
    n: u32,
    ks: &[usize],
    qs: &[f64],
) -> Result<ScaleEstimate> {
    if ks.len() < 2 || ks.iter().all(|&k| k == ks[0]) {
        return Err(HurstError::DegenerateDesign(
            "simple regression needs at least two distinct lags".into(),
        ));
    }
    if qs.is_empty() {
        return Err(HurstError::InvalidConfig("no moment orders given".into()));
    }
    let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).log2() - n as f64).collect();
    let mut h = 0.0;
    let mut phi = 0.0;
    for &q in qs {
        let ys = ks
            .iter()
            .map(|&k| {
                let m = m_stat(series, q, k, n)?;
                if m > 0.0 {
                    Ok(m.log2())
                } else {
                    Err(HurstError::DegeneratePath {
                        level: n,
                        window: None,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let (slope, intercept) = ols_line(&xs, &ys).ok_or_else(|| {
            HurstError::DegenerateDesign("lags give no spread in log2 k".into())
        })?;
        h += slope / q;
        phi -= intercept / q;
    }
    let count = qs.len() as f64;
    Ok(ScaleEstimate {
        h: h / count,
        log2_lambda: phi / count,
        kind: EstimatorKind::SimpleRegression,
        n,
        first_level: n,
        weights: Vec::new(),
        profile: None,
        normalized_profile: false,
    })
}
