//! Windowed estimation over long sample sequences and the T-adjusted
//! estimators, which share one scaling factor across a grid of windows.
//!
//! Window `tau` holds the `2^n + 1` samples starting at offset `tau` and is
//! treated as a path on `[0, 1]`. Offsets are sample indices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicSeries;
use crate::error::{HurstError, Result};
use crate::estimators::{
    closed_form_weights, gladyshev_sequence, minimize_terms, objective_terms,
    sequential_from_sequence, terminal_from_sequence, EstimatorKind, GladyshevSequence,
    QuadTerm, ScaleEstimate, WeightProfile,
};
use crate::numeric::compensated_sum;

/// Window count above which [`WindowGrid::maximal`] thins the grid.
pub const DEFAULT_MAX_WINDOWS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowGrid {
    offsets: Vec<usize>,
    window_n: u32,
    /// Spacing of a regular grid; `None` for explicit offsets.
    stride: Option<usize>,
}

impl WindowGrid {
    /// Explicit, strictly increasing offsets into a series of `series_len`
    /// samples.
    pub fn new(offsets: Vec<usize>, window_n: u32, series_len: usize) -> Result<Self> {
        check_window_n(window_n)?;
        if offsets.is_empty() {
            return Err(HurstError::InvalidConfig("window grid is empty".into()));
        }
        if offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HurstError::InvalidConfig(
                "window offsets must be strictly increasing".into(),
            ));
        }
        let len = (1usize << window_n) + 1;
        let last = offsets[offsets.len() - 1];
        if last + len > series_len {
            return Err(HurstError::OutOfBounds {
                start: last,
                len,
                available: series_len,
            });
        }
        Ok(Self {
            offsets,
            window_n,
            stride: None,
        })
    }

    /// Every admissible offset `0, stride, 2 stride, ...`.
    pub fn maximal(series_len: usize, window_n: u32, stride: usize) -> Result<Self> {
        Ok(Self::maximal_capped(series_len, window_n, stride, usize::MAX)?.0)
    }

    /// As [`WindowGrid::maximal`], widening the stride when the grid would
    /// exceed `cap` windows. The second value is a warning when that
    /// happened.
    pub fn maximal_capped(
        series_len: usize,
        window_n: u32,
        stride: usize,
        cap: usize,
    ) -> Result<(Self, Option<String>)> {
        check_window_n(window_n)?;
        if stride == 0 {
            return Err(HurstError::InvalidConfig("stride must be positive".into()));
        }
        if cap < 2 {
            return Err(HurstError::InvalidConfig("window cap must be at least 2".into()));
        }
        let len = (1usize << window_n) + 1;
        if series_len < len {
            return Err(HurstError::SeriesTooShort {
                len: series_len,
                needed: len,
            });
        }
        let last = series_len - len;
        let mut stride = stride;
        let mut warning = None;
        let count = last / stride + 1;
        if count > cap {
            let widened = last.div_ceil(cap - 1).max(stride);
            warning = Some(format!(
                "{count} windows exceed the cap of {cap}; stride widened from {stride} to {widened}"
            ));
            stride = widened;
        }
        let offsets = (0..=last).step_by(stride).collect();
        Ok((
            Self {
                offsets,
                window_n,
                stride: Some(stride),
            },
            warning,
        ))
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn window_n(&self) -> u32 {
        self.window_n
    }

    /// Samples per window, `2^n + 1`.
    pub fn window_len(&self) -> usize {
        (1usize << self.window_n) + 1
    }

    pub fn stride(&self) -> Option<usize> {
        self.stride
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

fn check_window_n(n: u32) -> Result<()> {
    if n == 0 || n > crate::dyadic::MAX_RESOLUTION {
        Err(HurstError::InvalidResolution(n))
    } else {
        Ok(())
    }
}

/// The `2^n + 1` samples starting at `start`, as a path on `[0, 1]`.
pub fn extract_window(values: &[f64], start: usize, n: u32) -> Result<DyadicSeries> {
    check_window_n(n)?;
    let len = (1usize << n) + 1;
    if start.checked_add(len).is_none_or(|end| end > values.len()) {
        return Err(HurstError::OutOfBounds {
            start,
            len,
            available: values.len(),
        });
    }
    DyadicSeries::from_samples(values[start..start + len].to_vec(), n)
}

/// One window of a rolling report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub offset: usize,
    /// Index of the last sample in the window.
    pub end: usize,
    /// `H_n` of the window.
    pub gladyshev: f64,
    /// Scale estimate with the window's own factor.
    pub raw: f64,
    pub raw_log2_lambda: f64,
    /// `H_n(lambda^T x_tau)` with the shared factor.
    pub adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedWindow {
    pub offset: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingReport {
    pub grid: WindowGrid,
    pub kind: EstimatorKind,
    pub profile: WeightProfile,
    pub rows: Vec<WindowRow>,
    /// Mean of the per-window `log2 lambda`.
    pub shared_log2_lambda: f64,
    /// Minimiser of the objective pooled over all windows.
    pub pooled_log2_lambda: f64,
    pub skipped: Vec<SkippedWindow>,
    pub warnings: Vec<String>,
}

impl RollingReport {
    pub fn adjusted(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.adjusted).collect()
    }

    pub fn raw(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.raw).collect()
    }
}

struct WindowFit {
    offset: usize,
    seq: GladyshevSequence,
    estimate: ScaleEstimate,
}

fn check_kind(kind: EstimatorKind) -> Result<()> {
    match kind {
        EstimatorKind::Sequential | EstimatorKind::Terminal => Ok(()),
        other => Err(HurstError::UnsupportedKind(format!(
            "{other} has no T-adjusted form"
        ))),
    }
}

fn fit_window(
    values: &[f64],
    offset: usize,
    n: u32,
    profile: &WeightProfile,
    kind: EstimatorKind,
) -> Result<WindowFit> {
    let window = extract_window(values, offset, n)?;
    let lo = n - profile.m() as u32 - 1;
    let seq = gladyshev_sequence(&window, lo, n).map_err(|e| match e {
        HurstError::DegeneratePath { level, .. } => HurstError::DegeneratePath {
            level,
            window: Some(offset),
        },
        other => other,
    })?;
    let estimate = match kind {
        EstimatorKind::Sequential => sequential_from_sequence(&seq, n, profile)?,
        _ => terminal_from_sequence(&seq, n, profile)?,
    };
    Ok(WindowFit {
        offset,
        seq,
        estimate,
    })
}

/// Minimiser of the objective summed over all windows.
pub fn pooled_factor(
    sequences: &[GladyshevSequence],
    n: u32,
    profile: &WeightProfile,
    kind: EstimatorKind,
) -> Result<f64> {
    check_kind(kind)?;
    let mut terms: Vec<QuadTerm> = Vec::new();
    for seq in sequences {
        terms.extend(objective_terms(kind, seq, n, profile)?);
    }
    minimize_terms(&terms)
}

fn run(
    values: &[f64],
    grid: WindowGrid,
    profile: &WeightProfile,
    kind: EstimatorKind,
    skip_degenerate: bool,
    mut warnings: Vec<String>,
) -> Result<RollingReport> {
    check_kind(kind)?;
    let n = grid.window_n();
    // Validates n >= m + 2 before any window is touched.
    closed_form_weights(kind, n, profile)?;
    let outcomes: Vec<Result<WindowFit>> = grid
        .offsets()
        .par_iter()
        .map(|&offset| fit_window(values, offset, n, profile, kind))
        .collect();
    let mut fits = Vec::with_capacity(outcomes.len());
    let mut skipped = Vec::new();
    for (outcome, &offset) in outcomes.into_iter().zip(grid.offsets()) {
        match outcome {
            Ok(fit) => fits.push(fit),
            Err(e) if skip_degenerate && e.is_degeneracy() => skipped.push(SkippedWindow {
                offset,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if fits.is_empty() {
        return Err(HurstError::DegeneratePath {
            level: n,
            window: grid.offsets().first().copied(),
        });
    }
    if !skipped.is_empty() {
        warnings.push(format!("{} degenerate windows skipped", skipped.len()));
    }
    let shared = compensated_sum(fits.iter().map(|f| f.estimate.log2_lambda)) / fits.len() as f64;
    let sequences: Vec<GladyshevSequence> = fits.iter().map(|f| f.seq.clone()).collect();
    let pooled = pooled_factor(&sequences, n, profile, kind)?;
    let len = grid.window_len();
    let rows = fits
        .iter()
        .map(|f| {
            let h_n = f.seq.get(n);
            WindowRow {
                offset: f.offset,
                end: f.offset + len - 1,
                gladyshev: h_n,
                raw: f.estimate.h,
                raw_log2_lambda: f.estimate.log2_lambda,
                adjusted: h_n - shared / n as f64,
            }
        })
        .collect();
    Ok(RollingReport {
        grid,
        kind,
        profile: profile.clone(),
        rows,
        shared_log2_lambda: shared,
        pooled_log2_lambda: pooled,
        skipped,
        warnings,
    })
}

/// T-adjusted sequential or terminal estimates on a given grid. Fails on
/// the first degenerate window.
pub fn t_adjusted(
    values: &[f64],
    grid: &WindowGrid,
    profile: &WeightProfile,
    kind: EstimatorKind,
) -> Result<RollingReport> {
    run(values, grid.clone(), profile, kind, false, Vec::new())
}

/// T-adjusted estimates on the maximal grid at `stride`; degenerate windows
/// are skipped and listed in the report.
pub fn rolling_monitor(
    values: &[f64],
    window_n: u32,
    stride: usize,
    profile: &WeightProfile,
    kind: EstimatorKind,
) -> Result<RollingReport> {
    rolling_monitor_capped(values, window_n, stride, profile, kind, DEFAULT_MAX_WINDOWS)
}

pub fn rolling_monitor_capped(
    values: &[f64],
    window_n: u32,
    stride: usize,
    profile: &WeightProfile,
    kind: EstimatorKind,
    cap: usize,
) -> Result<RollingReport> {
    let (grid, warning) = WindowGrid::maximal_capped(values.len(), window_n, stride, cap)?;
    run(values, grid, profile, kind, true, warning.into_iter().collect())
}
