//! Finite-n readouts of the conditions behind the consistency of the
//! Gladyshev estimator: reverse Jensen ratios, coefficient homogeneity
//! ratios, quantile bounds on `xi`, bias checks and a bounded-variation
//! readout.

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicSeries, EnergyTrace, FaberSchauderPyramid};
use crate::error::{HurstError, Result};
use crate::numeric::{ols_line, CompensatedSum};
use crate::variation::{branch_moment, DEFAULT_BRANCH_CAP};

/// A ratio that may be unbounded because its denominator vanished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Ratio {
    Finite(f64),
    Infinite,
}

impl Ratio {
    fn of(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Ratio::Infinite
        } else {
            Ratio::Finite(num / den)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Finite(v) => Some(v),
            Ratio::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Ratio::Infinite
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReverseJensen {
    pub n: u32,
    pub p: f64,
    /// `max(M / s_n^p, s_n^p / M)` with `M` the branch moment.
    pub ratio: f64,
    /// `log2(ratio) / n`.
    pub log2_rate: f64,
    pub moment: f64,
    pub s_power: f64,
}

pub fn reverse_jensen_ratio(
    pyramid: &FaberSchauderPyramid,
    p: f64,
    n: u32,
) -> Result<ReverseJensen> {
    let moment = branch_moment(pyramid, n, p)?;
    let s = pyramid.energy_trace().s(n);
    if s == 0.0 {
        return Err(HurstError::DegeneratePath {
            level: n,
            window: None,
        });
    }
    let s_power = (p * s.ln()).exp();
    if moment == 0.0 {
        return Err(HurstError::ZeroMoment);
    }
    let ratio = (moment / s_power).max(s_power / moment);
    Ok(ReverseJensen {
        n,
        p,
        ratio,
        log2_rate: ratio.log2() / n as f64,
        moment,
        s_power,
    })
}

fn check_level(pyramid: &FaberSchauderPyramid, m: u32) -> Result<()> {
    if m >= pyramid.depth() {
        Err(HurstError::DepthExceeded {
            requested: m,
            depth: pyramid.depth(),
        })
    } else {
        Ok(())
    }
}

/// `max_k |theta_{m,k}| / min_k |theta_{m,k}|`.
pub fn condition_a_ratio(pyramid: &FaberSchauderPyramid, m: u32) -> Result<Ratio> {
    check_level(pyramid, m)?;
    let (lo, hi) = pyramid
        .level(m)
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), t| (lo.min(t.abs()), hi.max(t.abs())));
    Ok(Ratio::of(hi, lo))
}

/// Largest over smallest sum of `theta_{m,j}^2` over blocks of `2^nu`
/// consecutive coefficients.
pub fn condition_b_ratio(pyramid: &FaberSchauderPyramid, nu: u32, m: u32) -> Result<Ratio> {
    check_level(pyramid, m)?;
    if nu > m {
        return Err(HurstError::InvalidNu { nu, m });
    }
    let (lo, hi) = pyramid
        .level(m)
        .chunks(1 << nu)
        .map(|block| block.iter().map(|t| t * t).sum::<f64>())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s), hi.max(s)));
    Ok(Ratio::of(hi, lo))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBounds {
    pub nu: u32,
    pub n: u32,
    pub lower: f64,
    pub upper: f64,
    /// First level included in the sums.
    pub first_level: u32,
    pub convention: String,
}

const QUANTILE_CONVENTION: &str = "left-continuous inverse of the empirical law of 2^m theta^2 \
over level m: F^-1(j / 2^m) is 2^m times the j-th smallest theta^2, and F^-1(0) uses the smallest";

/// `(xi^-, xi^+)` at level `n` with block exponent `nu`; level sums start at
/// `m = 1`.
pub fn quantile_bounds(pyramid: &FaberSchauderPyramid, nu: u32, n: u32) -> Result<QuantileBounds> {
    if nu == 0 {
        return Err(HurstError::InvalidConfig("nu must be at least 1".into()));
    }
    if n < 2 || n > pyramid.depth() {
        return Err(HurstError::DepthExceeded {
            requested: n,
            depth: pyramid.depth(),
        });
    }
    let mut lower = CompensatedSum::new();
    let mut upper = CompensatedSum::new();
    for m in 1..n {
        let cells = 1u64 << m;
        let weight = (cells as f64) / ((m as f64).powi(nu as i32));
        let mut sorted: Vec<f64> = pyramid.level(m).iter().map(|t| t * t).collect();
        sorted.sort_by(f64::total_cmp);
        // F^-1(j / 2^m) for j = 0..=2^m, with j = 0 mapped to the minimum.
        let quantile = |j: u64| weight * sorted[(j.max(1) - 1) as usize];
        let blocks = (m as u64).pow(nu);
        for k in 1..=blocks {
            lower.add(quantile(cells * (k - 1) / blocks));
            upper.add(quantile((cells * k).div_ceil(blocks)));
        }
    }
    let (lo, hi) = (lower.value(), upper.value());
    if !(lo > 0.0 && hi > 0.0) {
        return Err(HurstError::DegeneratePath {
            level: n,
            window: None,
        });
    }
    let scale = 0.5 / n as f64;
    Ok(QuantileBounds {
        nu,
        n,
        lower: scale * lo.log2(),
        upper: scale * hi.log2(),
        first_level: 1,
        convention: QUANTILE_CONVENTION.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCheck {
    pub rule: String,
    pub verdict: Verdict,
    /// Positive when the premise holds.
    pub premise_margin: f64,
    /// Non-negative when the conclusion holds.
    pub conclusion_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub n: u32,
    pub xi: f64,
    pub h_candidate: f64,
    pub tolerance: f64,
    pub checks: Vec<BiasCheck>,
}

impl BiasReport {
    pub fn any_violated(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Violated)
    }
}

/// Default margin below which a premise or conclusion counts as borderline.
/// `xi_n` is a finite-n proxy for the limit, so the slack is statistical
/// rather than a rounding allowance.
pub const BIAS_TOLERANCE: f64 = 0.02;

/// Checks a candidate `H` against `xi_n` at the deepest level of `trace`.
pub fn bias_report(trace: &EnergyTrace, h_candidate: f64) -> Result<BiasReport> {
    bias_report_with_tolerance(trace, h_candidate, BIAS_TOLERANCE)
}

pub fn bias_report_with_tolerance(
    trace: &EnergyTrace,
    h: f64,
    tol: f64,
) -> Result<BiasReport> {
    let n = trace.depth();
    if n == 0 {
        return Err(HurstError::InvalidResolution(0));
    }
    let xi = trace.xi(n).ok_or(HurstError::DegeneratePath {
        level: n,
        window: None,
    })?;
    Ok(bias_report_from_xi(n, xi, h, tol))
}

/// The bias rules evaluated for a given `xi`.
pub fn bias_report_from_xi(n: u32, xi: f64, h: f64, tol: f64) -> BiasReport {
    let rules = [
        ("xi > 1/2 implies H <= 1/2", xi - 0.5, 0.5 - h),
        ("xi < 1/2 implies H >= 1/2", 0.5 - xi, h - 0.5),
        ("H <= 1/2 implies H <= 1 - xi", 0.5 - h, 1.0 - xi - h),
        ("H >= 1/2 implies H >= 1 - xi", h - 0.5, h - (1.0 - xi)),
    ];
    let checks = rules
        .iter()
        .map(|&(rule, premise, conclusion)| {
            let verdict = if conclusion >= -tol || premise < -tol {
                Verdict::Consistent
            } else if premise > tol {
                Verdict::Violated
            } else {
                Verdict::Inconclusive
            };
            BiasCheck {
                rule: rule.to_string(),
                verdict,
                premise_margin: premise,
                conclusion_margin: conclusion,
            }
        })
        .collect();
    BiasReport {
        n,
        xi,
        h_candidate: h,
        tolerance: tol,
        checks,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvReadout {
    pub max_s: f64,
    pub s: Vec<f64>,
    /// `log2 s_{j+1} - log2 s_j`; `None` where either vanishes.
    pub log2_increments: Vec<Option<f64>>,
    /// Least-squares slope of `log2 s_j` against `j` over levels with
    /// `s_j > 0`.
    pub log2_slope: Option<f64>,
}

pub fn bv_readout(trace: &EnergyTrace) -> BvReadout {
    bv_readout_from(trace, 1)
}

/// As [`bv_readout`], fitting the slope over levels `from..=depth` only.
pub fn bv_readout_from(trace: &EnergyTrace, from: u32) -> BvReadout {
    let s = trace.s_values().to_vec();
    let max_s = s.iter().fold(0.0f64, |a, &v| a.max(v));
    let log2_increments = s
        .windows(2)
        .map(|w| (w[0] > 0.0 && w[1] > 0.0).then(|| w[1].log2() - w[0].log2()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = s
        .iter()
        .enumerate()
        .filter(|&(i, &v)| v > 0.0 && i as u32 + 1 >= from)
        .map(|(i, &v)| ((i + 1) as f64, v.log2()))
        .unzip();
    BvReadout {
        max_s,
        s,
        log2_increments,
        log2_slope: ols_line(&xs, &ys).map(|(slope, _)| slope),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseConfig {
    pub p_grid: Vec<f64>,
    /// Levels for the reverse Jensen ratios; levels above the branch cap
    /// are skipped with a warning.
    pub jensen_levels: Vec<u32>,
    pub nu_b: u32,
    pub nu_quantile: u32,
    pub h_candidate: Option<f64>,
}

impl DiagnoseConfig {
    /// Defaults for a series of resolution `n`.
    pub fn for_resolution(n: u32) -> Self {
        let top = n.min(DEFAULT_BRANCH_CAP).min(16);
        Self {
            p_grid: vec![1.0, 2.0, 4.0],
            jensen_levels: (1..=top).collect(),
            nu_b: 2,
            nu_quantile: 2,
            h_candidate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRatio {
    pub m: u32,
    pub ratio: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub resolution: u32,
    pub reverse_jensen: Vec<ReverseJensen>,
    pub condition_a: Vec<LevelRatio>,
    pub nu_b: u32,
    pub condition_b: Vec<LevelRatio>,
    pub quantile_bounds: Vec<QuantileBounds>,
    pub bias: Option<BiasReport>,
    pub bounded_variation: BvReadout,
    pub warnings: Vec<String>,
}

pub fn diagnose(series: &DyadicSeries, config: &DiagnoseConfig) -> Result<DiagnosticReport> {
    let pyramid = FaberSchauderPyramid::analyze(series);
    let trace = pyramid.energy_trace();
    let depth = pyramid.depth();
    let mut warnings = Vec::new();
    let mut reverse_jensen = Vec::new();
    for &n in &config.jensen_levels {
        if n == 0 || n > depth || n > DEFAULT_BRANCH_CAP {
            warnings.push(format!("reverse Jensen level {n} skipped"));
            continue;
        }
        for &p in &config.p_grid {
            match reverse_jensen_ratio(&pyramid, p, n) {
                Ok(r) => reverse_jensen.push(r),
                Err(e) if e.is_degeneracy() => {
                    warnings.push(format!("reverse Jensen at n = {n}, p = {p}: {e}"))
                }
                Err(e) => return Err(e),
            }
        }
    }
    let condition_a = (0..depth)
        .map(|m| {
            Ok(LevelRatio {
                m,
                ratio: condition_a_ratio(&pyramid, m)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let condition_b = (config.nu_b..depth)
        .map(|m| {
            Ok(LevelRatio {
                m,
                ratio: condition_b_ratio(&pyramid, config.nu_b, m)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut quantiles = Vec::new();
    for n in 2..=depth {
        match quantile_bounds(&pyramid, config.nu_quantile, n) {
            Ok(q) => quantiles.push(q),
            Err(e) if e.is_degeneracy() => {
                warnings.push(format!("quantile bounds at n = {n}: {e}"))
            }
            Err(e) => return Err(e),
        }
    }
    let bias = match config.h_candidate {
        Some(h) => match bias_report(&trace, h) {
            Ok(r) => Some(r),
            Err(e) => {
                warnings.push(format!("bias report: {e}"));
                None
            }
        },
        None => None,
    };
    Ok(DiagnosticReport {
        resolution: depth,
        reverse_jensen,
        condition_a,
        nu_b: config.nu_b,
        condition_b,
        quantile_bounds: quantiles,
        bias,
        bounded_variation: bv_readout(&trace),
        warnings,
    })
}
