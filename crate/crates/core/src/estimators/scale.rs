//! Sequential, terminal, regression and generalized scale estimators.
//!
//! Every objective is a sum of squared residuals `offset + phi * coef` in
//! `phi = log2 lambda`, so the minimiser is `-sum(w o c) / sum(w c^2)`. The
//! closed-form linear weights are computed separately and cross-checked.

use serde::{Deserialize, Serialize};

use super::{gladyshev_sequence, EstimatorKind, GladyshevSequence, ScaleEstimate, WeightProfile};
use crate::dyadic::DyadicSeries;
use crate::error::{HurstError, Result};

/// One squared residual `weight * (offset + phi * coef)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTerm {
    pub weight: f64,
    pub offset: f64,
    pub coef: f64,
}

/// A generalized pair weight `alpha_{hi,lo}` on `(H_hi - H_lo)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairWeight {
    pub hi: u32,
    pub lo: u32,
    pub alpha: f64,
}

/// Weights on consecutive Gladyshev levels starting at `first_level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWeights {
    pub first_level: u32,
    pub weights: Vec<f64>,
}

impl LinearWeights {
    pub fn apply(&self, seq: &GladyshevSequence) -> Result<f64> {
        let last = self.first_level + self.weights.len() as u32 - 1;
        seq.require(self.first_level, last)?;
        Ok(self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * seq.get(self.first_level + i as u32))
            .sum())
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weight on `H_level`, zero outside the stored range.
    pub fn weight(&self, level: u32) -> f64 {
        level
            .checked_sub(self.first_level)
            .and_then(|i| self.weights.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }
}

fn check_depth(n: u32, m: usize) -> Result<()> {
    let min = m as u32 + 2;
    if n < min {
        Err(HurstError::WindowTooDeep { n, m, min })
    } else {
        Ok(())
    }
}

/// Residual terms of the sequential or terminal objective for one path.
pub fn objective_terms(
    kind: EstimatorKind,
    seq: &GladyshevSequence,
    n: u32,
    profile: &WeightProfile,
) -> Result<Vec<QuadTerm>> {
    let m = profile.m();
    check_depth(n, m)?;
    seq.require(n - m as u32 - 1, n)?;
    let alpha = profile.alpha();
    match kind {
        // H_k(2^phi x) - H_{k-1}(2^phi x) = (H_k - H_{k-1}) + phi / (k (k-1))
        EstimatorKind::Sequential => Ok((n - m as u32..=n)
            .map(|k| {
                let kf = k as f64;
                QuadTerm {
                    weight: alpha[(n - k) as usize],
                    offset: seq.get(k) - seq.get(k - 1),
                    coef: 1.0 / (kf * (kf - 1.0)),
                }
            })
            .collect()),
        // H_n(2^phi x) - H_{k-1}(2^phi x) = (H_n - H_{k-1}) + phi (1/(k-1) - 1/n)
        EstimatorKind::Terminal => {
            let nf = n as f64;
            Ok((n - m as u32..=n)
                .map(|k| {
                    let j = (k - 1) as f64;
                    QuadTerm {
                        weight: alpha[(n - k) as usize],
                        offset: seq.get(n) - seq.get(k - 1),
                        coef: (nf - j) / (nf * j),
                    }
                })
                .collect())
        }
        other => Err(HurstError::UnsupportedKind(other.to_string())),
    }
}

pub fn objective_value(terms: &[QuadTerm], phi: f64) -> f64 {
    terms
        .iter()
        .map(|t| {
            let r = t.offset + phi * t.coef;
            t.weight * r * r
        })
        .sum()
}

/// Unique minimiser of a strictly convex sum of [`QuadTerm`]s.
pub fn minimize_terms(terms: &[QuadTerm]) -> Result<f64> {
    let curvature: f64 = terms.iter().map(|t| t.weight * t.coef * t.coef).sum();
    if curvature.is_nan() || curvature <= 0.0 {
        return Err(HurstError::DegenerateDesign(
            "objective has no curvature in log2(lambda)".into(),
        ));
    }
    let slope: f64 = terms.iter().map(|t| t.weight * t.offset * t.coef).sum();
    Ok(-slope / curvature)
}

/// Closed-form linear weights of the sequential, terminal or regression
/// estimator at level `n`.
pub fn closed_form_weights(
    kind: EstimatorKind,
    n: u32,
    profile: &WeightProfile,
) -> Result<LinearWeights> {
    let m = profile.m();
    let nf = n as f64;
    match kind {
        EstimatorKind::Sequential => {
            check_depth(n, m)?;
            let lo = n - m as u32 - 1;
            let alpha = |i: u32| profile.get(i as i64);
            let c: f64 = (n - m as u32..=n)
                .map(|k| {
                    let kf = k as f64;
                    alpha(n - k) / (kf * kf * (kf - 1.0) * (kf - 1.0))
                })
                .sum();
            let weights = (lo..=n)
                .map(|level| {
                    let l = level as f64;
                    if level == n {
                        1.0 + alpha(0) / (c * nf * nf * (nf - 1.0))
                    } else if level == lo {
                        -alpha(m as u32) / (c * nf * (l + 1.0) * l)
                    } else {
                        (alpha(n - level) / (l - 1.0) - alpha(n - level - 1) / (l + 1.0))
                            / (c * nf * l)
                    }
                })
                .collect();
            Ok(LinearWeights {
                first_level: lo,
                weights,
            })
        }
        EstimatorKind::Terminal => {
            check_depth(n, m)?;
            let lo = n - m as u32 - 1;
            let alpha = |i: u32| profile.get(i as i64);
            let c: f64 = (n - m as u32..=n)
                .map(|k| {
                    let r = (nf - k as f64 + 1.0) / (nf * (k as f64 - 1.0));
                    alpha(n - k) * r * r
                })
                .sum();
            let top: f64 = (n - m as u32..=n)
                .map(|k| alpha(n - k) * (nf - k as f64 + 1.0) / (k as f64 - 1.0))
                .sum();
            // The weight on H_l carries alpha_{n-l-1}: H_l enters the
            // objective through the term with k = l + 1.
            let weights = (lo..=n)
                .map(|level| {
                    if level == n {
                        1.0 + top / (c * nf * nf)
                    } else {
                        let l = level as f64;
                        (l - nf) / (c * nf * nf * l) * alpha(n - level - 1)
                    }
                })
                .collect();
            Ok(LinearWeights {
                first_level: lo,
                weights,
            })
        }
        EstimatorKind::Regression => {
            let (profile, _) = profile.normalized();
            check_regression(n, &profile)?;
            let alpha = profile.alpha();
            let a: f64 = alpha.iter().enumerate().map(|(k, w)| w * k as f64).sum();
            let second: f64 = alpha
                .iter()
                .enumerate()
                .map(|(k, w)| w * (k * k) as f64)
                .sum();
            let c = a * a - second;
            let lo = n - m as u32;
            let weights = (lo..=n)
                .map(|level| {
                    let k = (n - level) as usize;
                    alpha[k] * level as f64 * (k as f64 - a) / c
                })
                .collect();
            Ok(LinearWeights {
                first_level: lo,
                weights,
            })
        }
        other => Err(HurstError::UnsupportedKind(other.to_string())),
    }
}

fn check_regression(n: u32, profile: &WeightProfile) -> Result<()> {
    let m = profile.m();
    if n < m as u32 + 1 {
        return Err(HurstError::WindowTooDeep {
            n,
            m,
            min: m as u32 + 1,
        });
    }
    if profile.alpha().iter().filter(|&&a| a > 0.0).count() < 2 {
        return Err(HurstError::DegenerateDesign(
            "regression needs positive weight on at least two levels".into(),
        ));
    }
    Ok(())
}

fn from_terms(
    kind: EstimatorKind,
    seq: &GladyshevSequence,
    n: u32,
    profile: &WeightProfile,
) -> Result<ScaleEstimate> {
    let terms = objective_terms(kind, seq, n, profile)?;
    let phi = minimize_terms(&terms)?;
    let h = seq.get(n) - phi / n as f64;
    let closed = closed_form_weights(kind, n, profile)?;
    debug_assert!(
        (closed.apply(seq)? - h).abs() <= 1e-9 * (1.0 + h.abs()),
        "closed-form weights disagree with the argmin"
    );
    Ok(ScaleEstimate {
        h,
        log2_lambda: phi,
        kind,
        n,
        first_level: closed.first_level,
        weights: closed.weights,
        profile: Some(profile.clone()),
        normalized_profile: false,
    })
}

pub fn sequential_from_sequence(
    seq: &GladyshevSequence,
    n: u32,
    profile: &WeightProfile,
) -> Result<ScaleEstimate> {
    from_terms(EstimatorKind::Sequential, seq, n, profile)
}

pub fn terminal_from_sequence(
    seq: &GladyshevSequence,
    n: u32,
    profile: &WeightProfile,
) -> Result<ScaleEstimate> {
    from_terms(EstimatorKind::Terminal, seq, n, profile)
}

/// Joint weighted least-squares fit of `(n-k) H_{n-k} = h (n-k) + log2 lambda`.
pub fn regression_from_sequence(
    seq: &GladyshevSequence,
    n: u32,
    profile: &WeightProfile,
) -> Result<ScaleEstimate> {
    let (normalized, changed) = profile.normalized();
    check_regression(n, &normalized)?;
    let m = normalized.m() as u32;
    seq.require(n - m, n)?;
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, &w) in normalized.alpha().iter().enumerate() {
        let x = (n - k as u32) as f64;
        let y = x * seq.get(n - k as u32);
        s0 += w;
        s1 += w * x;
        s2 += w * x * x;
        t0 += w * y;
        t1 += w * x * y;
    }
    let det = s0 * s2 - s1 * s1;
    if det.is_nan() || det <= 0.0 {
        return Err(HurstError::DegenerateDesign(
            "regression abscissae do not vary".into(),
        ));
    }
    let h = (s0 * t1 - s1 * t0) / det;
    let phi = (s2 * t0 - s1 * t1) / det;
    let closed = closed_form_weights(EstimatorKind::Regression, n, &normalized)?;
    Ok(ScaleEstimate {
        h,
        log2_lambda: phi,
        kind: EstimatorKind::Regression,
        n,
        first_level: closed.first_level,
        weights: closed.weights,
        profile: Some(normalized),
        normalized_profile: changed,
    })
}

/// Minimises `sum alpha_{j,k} (H_j(lambda x) - H_k(lambda x))^2` and reports
/// `H_n(lambda x)`.
pub fn generalized_from_sequence(
    seq: &GladyshevSequence,
    n: u32,
    pairs: &[PairWeight],
) -> Result<ScaleEstimate> {
    if pairs.is_empty() {
        return Err(HurstError::DegenerateDesign("no pair weights given".into()));
    }
    for p in pairs {
        if p.lo == 0 || p.hi <= p.lo {
            return Err(HurstError::InvalidWeights(format!(
                "pair ({}, {}) must satisfy hi > lo >= 1",
                p.hi, p.lo
            )));
        }
        if !(p.alpha >= 0.0 && p.alpha.is_finite()) {
            return Err(HurstError::InvalidWeights(format!(
                "pair weight {} is negative or not finite",
                p.alpha
            )));
        }
    }
    let lo = pairs.iter().map(|p| p.lo).min().unwrap().min(n);
    let hi = pairs.iter().map(|p| p.hi).max().unwrap().max(n);
    seq.require(lo, hi)?;
    let terms: Vec<QuadTerm> = pairs
        .iter()
        .map(|p| QuadTerm {
            weight: p.alpha,
            offset: seq.get(p.hi) - seq.get(p.lo),
            coef: 1.0 / p.lo as f64 - 1.0 / p.hi as f64,
        })
        .collect();
    let phi = minimize_terms(&terms)?;
    let nf = n as f64;
    let h = seq.get(n) - phi / nf;

    let curvature: f64 = terms.iter().map(|t| t.weight * t.coef * t.coef).sum();
    let mut weights = vec![0.0; (hi - lo + 1) as usize];
    weights[(n - lo) as usize] += 1.0;
    for (p, t) in pairs.iter().zip(&terms) {
        let w = t.weight * t.coef / (nf * curvature);
        weights[(p.hi - lo) as usize] += w;
        weights[(p.lo - lo) as usize] -= w;
    }
    Ok(ScaleEstimate {
        h,
        log2_lambda: phi,
        kind: EstimatorKind::Generalized,
        n,
        first_level: lo,
        weights,
        profile: None,
        normalized_profile: false,
    })
}

pub fn sequential_scale(
    series: &DyadicSeries,
    n: u32,
    profile: &WeightProfile,
) -> Result<ScaleEstimate> {
    check_depth(n, profile.m())?;
    let seq = gladyshev_sequence(series, n - profile.m() as u32 - 1, n)?;
    sequential_from_sequence(&seq, n, profile)
}

pub fn terminal_scale(
    series: &DyadicSeries,
    n: u32,
    profile: &WeightProfile,
) -> Result<ScaleEstimate> {
    check_depth(n, profile.m())?;
    let seq = gladyshev_sequence(series, n - profile.m() as u32 - 1, n)?;
    terminal_from_sequence(&seq, n, profile)
}

pub fn regression_scale(
    series: &DyadicSeries,
    n: u32,
    profile: &WeightProfile,
) -> Result<ScaleEstimate> {
    check_regression(n, profile)?;
    let seq = gladyshev_sequence(series, n - profile.m() as u32, n)?;
    regression_from_sequence(&seq, n, profile)
}

pub fn generalized_scale(
    series: &DyadicSeries,
    n: u32,
    pairs: &[PairWeight],
) -> Result<ScaleEstimate> {
    let lo = pairs.iter().map(|p| p.lo).min().unwrap_or(n).clamp(1, n);
    let hi = pairs.iter().map(|p| p.hi).max().unwrap_or(n).max(n);
    let seq = gladyshev_sequence(series, lo, hi)?;
    generalized_from_sequence(&seq, n, pairs)
}
