//! The Gladyshev estimator and the scale-invariant estimators built from it.
//!
//! `H_n(x) = 1 - log2(s_n) / n` is not scale-invariant: multiplying the path by
//! `lambda` shifts it by `-log2|lambda| / n`. The sequential, terminal and
//! regression estimators pick an intrinsic scaling factor by minimising a
//! quadratic in `phi = log2 lambda`, which makes the result a fixed linear
//! combination of `H_{n-m-1}, ..., H_n`.

mod profile;
mod scale;
mod simple;

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicSeries, EnergyTrace, FaberSchauderPyramid};
use crate::error::{HurstError, Result};

pub use profile::WeightProfile;
pub use scale::{
    closed_form_weights, generalized_from_sequence, generalized_scale, minimize_terms,
    objective_terms, objective_value, regression_from_sequence, regression_scale,
    sequential_from_sequence, sequential_scale, terminal_from_sequence, terminal_scale,
    LinearWeights, PairWeight, QuadTerm,
};
pub use simple::{m_stat, simple_regression};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Gladyshev,
    Sequential,
    Terminal,
    Regression,
    Generalized,
    SimpleRegression,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Gladyshev => "gladyshev",
            EstimatorKind::Sequential => "sequential",
            EstimatorKind::Terminal => "terminal",
            EstimatorKind::Regression => "regression",
            EstimatorKind::Generalized => "generalized",
            EstimatorKind::SimpleRegression => "simple_regression",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = HurstError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gladyshev" => EstimatorKind::Gladyshev,
            "sequential" => EstimatorKind::Sequential,
            "terminal" => EstimatorKind::Terminal,
            "regression" => EstimatorKind::Regression,
            "generalized" => EstimatorKind::Generalized,
            "simple_regression" | "simple-regression" => EstimatorKind::SimpleRegression,
            other => return Err(HurstError::InvalidConfig(format!("unknown estimator {other}"))),
        })
    }
}

/// `H_lo, ..., H_hi` of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GladyshevSequence {
    first_level: u32,
    values: Vec<f64>,
}

impl GladyshevSequence {
    /// Wraps precomputed values, `values[i] = H_{first_level + i}`.
    pub fn from_values(first_level: u32, values: Vec<f64>) -> Result<Self> {
        if first_level == 0 || values.is_empty() {
            return Err(HurstError::InvalidConfig(
                "a Gladyshev sequence starts at level 1 or later and is non-empty".into(),
            ));
        }
        Ok(Self {
            first_level,
            values,
        })
    }

    pub fn from_trace(trace: &EnergyTrace, lo: u32, hi: u32) -> Result<Self> {
        if lo == 0 || lo > hi || hi > trace.depth() {
            return Err(HurstError::DepthExceeded {
                requested: hi,
                depth: trace.depth(),
            });
        }
        let values = (lo..=hi)
            .map(|j| {
                trace
                    .xi(j)
                    .map(|xi| 1.0 - xi)
                    .ok_or(HurstError::DegeneratePath {
                        level: j,
                        window: None,
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            first_level: lo,
            values,
        })
    }

    pub fn first_level(&self) -> u32 {
        self.first_level
    }

    pub fn last_level(&self) -> u32 {
        self.first_level + self.values.len() as u32 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, level: u32) -> bool {
        level >= self.first_level && level <= self.last_level()
    }

    /// `H_level`; panics outside the stored range.
    pub fn get(&self, level: u32) -> f64 {
        assert!(self.contains(level), "level {level} not in sequence");
        self.values[(level - self.first_level) as usize]
    }

    /// The sequence of the rescaled path `2^phi x`.
    pub fn rescaled(&self, log2_lambda: f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, h)| h - log2_lambda / (self.first_level as f64 + i as f64))
            .collect();
        Self {
            first_level: self.first_level,
            values,
        }
    }

    pub(crate) fn require(&self, lo: u32, hi: u32) -> Result<()> {
        if self.contains(lo) && self.contains(hi) {
            Ok(())
        } else {
            Err(HurstError::IndexOutOfRange(format!(
                "levels {lo}..={hi} not covered by sequence {}..={}",
                self.first_level,
                self.last_level()
            )))
        }
    }
}

/// `H_n(x) = 1 - log2(s_n) / n`.
pub fn gladyshev(series: &DyadicSeries, n: u32) -> Result<f64> {
    Ok(gladyshev_sequence(series, n, n)?.get(n))
}

/// `(H_lo, ..., H_hi)` from one shared energy trace.
pub fn gladyshev_sequence(series: &DyadicSeries, lo: u32, hi: u32) -> Result<GladyshevSequence> {
    if lo == 0 || lo > hi || hi > series.resolution() {
        return Err(HurstError::LevelExceedsResolution {
            level: hi,
            resolution: series.resolution(),
        });
    }
    let trace = FaberSchauderPyramid::analyze(series).energy_trace();
    GladyshevSequence::from_trace(&trace, lo, hi)
}

/// Result of a scale-invariant estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub h: f64,
    pub log2_lambda: f64,
    pub kind: EstimatorKind,
    pub n: u32,
    /// Level of the Gladyshev estimate multiplied by `weights[0]`.
    pub first_level: u32,
    /// Linear weights on `H_{first_level}, ...`; empty where not applicable.
    pub weights: Vec<f64>,
    pub profile: Option<WeightProfile>,
    /// Set when the weight profile was rescaled to sum to one.
    pub normalized_profile: bool,
}

/// An estimator choice with its parameters, as used by batch drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    Gladyshev,
    Sequential { profile: WeightProfile },
    Terminal { profile: WeightProfile },
    Regression { profile: WeightProfile },
    SimpleRegression { ks: Vec<usize>, qs: Vec<f64> },
}

impl EstimatorSpec {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            EstimatorSpec::Gladyshev => EstimatorKind::Gladyshev,
            EstimatorSpec::Sequential { .. } => EstimatorKind::Sequential,
            EstimatorSpec::Terminal { .. } => EstimatorKind::Terminal,
            EstimatorSpec::Regression { .. } => EstimatorKind::Regression,
            EstimatorSpec::SimpleRegression { .. } => EstimatorKind::SimpleRegression,
        }
    }

    pub fn profile(&self) -> Option<&WeightProfile> {
        match self {
            EstimatorSpec::Sequential { profile }
            | EstimatorSpec::Terminal { profile }
            | EstimatorSpec::Regression { profile } => Some(profile),
            _ => None,
        }
    }

    /// Lowest Gladyshev level the estimator reads at top level `n`.
    fn lowest_level(&self, n: u32) -> u32 {
        match self {
            EstimatorSpec::Gladyshev | EstimatorSpec::SimpleRegression { .. } => n,
            EstimatorSpec::Sequential { profile } | EstimatorSpec::Terminal { profile } => {
                n.saturating_sub(profile.m() as u32 + 1).max(1)
            }
            EstimatorSpec::Regression { profile } => n.saturating_sub(profile.m() as u32).max(1),
        }
    }

    /// Point estimate at level `n`.
    pub fn estimate(&self, series: &DyadicSeries, n: u32) -> Result<f64> {
        match self {
            EstimatorSpec::SimpleRegression { ks, qs } => {
                Ok(simple_regression(series, n, ks, qs)?.h)
            }
            _ => {
                let seq = gladyshev_sequence(series, self.lowest_level(n), n)?;
                self.estimate_from_sequence(&seq, n)
            }
        }
    }

    /// Point estimate from a precomputed Gladyshev sequence.
    pub fn estimate_from_sequence(&self, seq: &GladyshevSequence, n: u32) -> Result<f64> {
        Ok(match self {
            EstimatorSpec::Gladyshev => {
                seq.require(n, n)?;
                seq.get(n)
            }
            EstimatorSpec::Sequential { profile } => sequential_from_sequence(seq, n, profile)?.h,
            EstimatorSpec::Terminal { profile } => terminal_from_sequence(seq, n, profile)?.h,
            EstimatorSpec::Regression { profile } => regression_from_sequence(seq, n, profile)?.h,
            EstimatorSpec::SimpleRegression { .. } => {
                return Err(HurstError::UnsupportedKind(
                    "simple_regression needs the raw series".into(),
                ))
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::Gladyshev => "gladyshev".to_string(),
            EstimatorSpec::Sequential { profile }
            | EstimatorSpec::Terminal { profile }
            | EstimatorSpec::Regression { profile } => {
                format!("{}(m={})", self.kind(), profile.m())
            }
            EstimatorSpec::SimpleRegression { ks, qs } => {
                format!("simple_regression(K={ks:?}, Q={qs:?})")
            }
        }
    }
}
