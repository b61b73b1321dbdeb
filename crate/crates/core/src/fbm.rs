//! Exact sampling of fractional Brownian motion and a Monte Carlo harness
//! for ensemble statistics of the estimators.
//!
//! Increments (fractional Gaussian noise) are drawn by circulant embedding
//! of the autocovariance
//!
//! ```text
//! gamma(k) = dt^{2H} (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2
//! ```
//!
//! with a dense Cholesky factorization as the fallback for short paths.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicSeries;
use crate::error::{HurstError, Result};
use crate::estimators::{EstimatorKind, EstimatorSpec, WeightProfile};
use crate::numeric::mean_sd;

/// Largest resolution accepted by [`fbm_path`].
pub const MAX_SIM_RESOLUTION: u32 = 20;

/// Largest increment count for the dense fallback.
pub const DENSE_LIMIT: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FbmMethod {
    /// Circulant embedding, dense factorization if the embedding is not
    /// nonnegative.
    #[default]
    Auto,
    Circulant,
    Dense,
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(HurstError::InvalidH(h))
    }
}

/// Autocovariance of fractional Gaussian noise with unit step.
pub fn fgn_autocovariance(h: f64, k: usize) -> f64 {
    let two_h = 2.0 * h;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

#[derive(Debug, Clone)]
enum Factor {
    /// `sqrt(lambda_k / M)` for the circulant of size `M = 2 count`.
    Circulant(Arc<Vec<f64>>),
    Dense(Arc<DMatrix<f64>>),
}

/// Sampler for `count` fractional Gaussian noise increments of step `dt`.
///
/// The covariance factor is computed once; sampling only draws normals and
/// runs one FFT (or one triangular product).
#[derive(Debug, Clone)]
pub struct FgnGenerator {
    h: f64,
    count: usize,
    scale: f64,
    factor: Factor,
}

impl FgnGenerator {
    pub fn new(h: f64, count: usize, dt: f64, method: FbmMethod) -> Result<Self> {
        check_h(h)?;
        if count == 0 {
            return Err(HurstError::InvalidConfig("no increments requested".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(HurstError::InvalidConfig(format!("step {dt} must be positive")));
        }
        let scale = dt.powf(h);
        let factor = match method {
            FbmMethod::Circulant => circulant_factor(h, count)?,
            FbmMethod::Dense => dense_factor(h, count)?,
            FbmMethod::Auto => match circulant_factor(h, count) {
                Ok(f) => f,
                Err(circ) if count <= DENSE_LIMIT => {
                    dense_factor(h, count).map_err(|dense| {
                        HurstError::EmbeddingFailure(format!("{circ}; {dense}"))
                    })?
                }
                Err(e) => return Err(e),
            },
        };
        Ok(Self {
            h,
            count,
            scale,
            factor,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn method(&self) -> FbmMethod {
        match self.factor {
            Factor::Circulant(_) => FbmMethod::Circulant,
            Factor::Dense(_) => FbmMethod::Dense,
        }
    }

    /// One draw of the increment vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.factor {
            Factor::Circulant(root) => {
                let size = root.len();
                let mut buf: Vec<Complex<f64>> = root
                    .iter()
                    .map(|r| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex::new(r * re, r * im)
                    })
                    .collect();
                FftPlanner::new().plan_fft_forward(size).process(&mut buf);
                buf[..self.count].iter().map(|c| self.scale * c.re).collect()
            }
            Factor::Dense(chol) => {
                let z: Vec<f64> = (0..self.count).map(|_| rng.sample(StandardNormal)).collect();
                let z = nalgebra::DVector::from_vec(z);
                (chol.as_ref() * z).iter().map(|v| self.scale * v).collect()
            }
        }
    }

    /// Cumulative sum of one increment draw, starting from `start`;
    /// `count + 1` values.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R, start: f64) -> Vec<f64> {
        let mut path = Vec::with_capacity(self.count + 1);
        let mut acc = start;
        path.push(acc);
        for d in self.sample(rng) {
            acc += d;
            path.push(acc);
        }
        path
    }
}

fn circulant_factor(h: f64, count: usize) -> Result<Factor> {
    let size = 2 * count;
    let mut row: Vec<Complex<f64>> = (0..size)
        .map(|k| Complex::new(fgn_autocovariance(h, k.min(size - k)), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut row);
    let largest = row.iter().fold(0.0f64, |a, c| a.max(c.re.abs()));
    let tol = 1e-10 * largest.max(1.0);
    if let Some(bad) = row.iter().find(|c| c.re < -tol) {
        return Err(HurstError::EmbeddingFailure(format!(
            "circulant eigenvalue {} is negative",
            bad.re
        )));
    }
    let root = row
        .iter()
        .map(|c| (c.re.max(0.0) / size as f64).sqrt())
        .collect();
    Ok(Factor::Circulant(Arc::new(root)))
}

fn dense_factor(h: f64, count: usize) -> Result<Factor> {
    if count > DENSE_LIMIT {
        return Err(HurstError::EmbeddingFailure(format!(
            "dense factorization limited to {DENSE_LIMIT} increments"
        )));
    }
    let acov: Vec<f64> = (0..count).map(|k| fgn_autocovariance(h, k)).collect();
    let cov = DMatrix::from_fn(count, count, |i, j| acov[i.abs_diff(j)]);
    let chol = cov.cholesky().ok_or_else(|| {
        HurstError::EmbeddingFailure("covariance is not positive definite".into())
    })?;
    Ok(Factor::Dense(Arc::new(chol.unpack())))
}

/// Random stream for path `stream` under master seed `seed`.
///
/// Streams are independent of each other and of the order in which they
/// are consumed.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// fBm on `[0, 1]` at `k 2^-n`, `B(0) = 0`, drawn from stream 0.
pub fn fbm_path(h: f64, n: u32, seed: u64) -> Result<DyadicSeries> {
    fbm_path_stream(h, n, seed, 0)
}

pub fn fbm_path_stream(h: f64, n: u32, seed: u64, stream: u64) -> Result<DyadicSeries> {
    if n == 0 || n > MAX_SIM_RESOLUTION {
        return Err(HurstError::InvalidResolution(n));
    }
    let count = 1usize << n;
    let gen = FgnGenerator::new(h, count, 1.0 / count as f64, FbmMethod::Auto)?;
    DyadicSeries::from_samples(gen.sample_path(&mut path_rng(seed, stream), 0.0), n)
}

/// fBm with parameter `h_first` for `first` steps, continued with an
/// independent fBm of parameter `h_second` for `second` steps, both of
/// step `dt`. The second piece starts at the last value of the first.
pub fn spliced_fbm(
    h_first: f64,
    h_second: f64,
    first: usize,
    second: usize,
    dt: f64,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    let mut rng = path_rng(seed, stream);
    let head = FgnGenerator::new(h_first, first, dt, FbmMethod::Auto)?;
    let tail = FgnGenerator::new(h_second, second, dt, FbmMethod::Auto)?;
    let mut path = head.sample_path(&mut rng, 0.0);
    let last = path[path.len() - 1];
    path.extend(tail.sample_path(&mut rng, last).into_iter().skip(1));
    Ok(path)
}

/// Rescales samples to mean 0 and unit sample variance.
pub fn standardize(values: &[f64]) -> Vec<f64> {
    let (mean, sd) = mean_sd(values);
    if sd.is_nan() || sd <= 0.0 {
        return values.iter().map(|v| v - mean).collect();
    }
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// Monte Carlo configuration; one summary is produced per entry of the H
/// list passed to [`monte_carlo`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub estimator: EstimatorSpec,
    pub n: u32,
    pub paths: usize,
    pub seed: u64,
    /// Estimate on paths rescaled to mean 0 and variance 1.
    #[serde(default)]
    pub standardize: bool,
    #[serde(default)]
    pub method: FbmMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub path: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub estimator: String,
    pub kind: EstimatorKind,
    pub profile: Option<WeightProfile>,
    pub n: u32,
    pub h_true: f64,
    /// Paths that produced an estimate.
    pub paths: usize,
    pub failures: usize,
    pub mean: f64,
    pub sd: f64,
    pub max: f64,
    pub min: f64,
    pub seed: u64,
    pub failure_log: Vec<PathFailure>,
}

/// Per-path estimates for one H, in path order, plus the failures.
///
/// Path `i` uses stream `i` of the master seed for every H, so ensembles at
/// different H share their underlying normals.
pub fn monte_carlo_estimates(
    config: &McConfig,
    h: f64,
) -> Result<(Vec<f64>, Vec<PathFailure>)> {
    if config.paths == 0 {
        return Err(HurstError::InvalidConfig("at least one path is required".into()));
    }
    if config.n == 0 || config.n > MAX_SIM_RESOLUTION {
        return Err(HurstError::InvalidResolution(config.n));
    }
    let count = 1usize << config.n;
    let gen = FgnGenerator::new(h, count, 1.0 / count as f64, config.method)?;
    let outcomes: Vec<Result<f64>> = (0..config.paths)
        .into_par_iter()
        .map(|i| {
            let mut values = gen.sample_path(&mut path_rng(config.seed, i as u64), 0.0);
            if config.standardize {
                values = standardize(&values);
            }
            let series = DyadicSeries::from_samples(values, config.n)?;
            config.estimator.estimate(&series, config.n)
        })
        .collect();
    let mut estimates = Vec::with_capacity(config.paths);
    let mut failures = Vec::new();
    for (path, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(v) => estimates.push(v),
            Err(e) => failures.push(PathFailure {
                path,
                error: e.to_string(),
            }),
        }
    }
    Ok((estimates, failures))
}

pub fn monte_carlo(config: &McConfig, h_list: &[f64]) -> Result<Vec<McSummary>> {
    h_list
        .iter()
        .map(|&h| {
            let (estimates, failure_log) = monte_carlo_estimates(config, h)?;
            Ok(summarize(config, h, &estimates, failure_log))
        })
        .collect()
}

fn summarize(config: &McConfig, h: f64, estimates: &[f64], failure_log: Vec<PathFailure>) -> McSummary {
    let (mean, sd) = mean_sd(estimates);
    let (min, max) = if estimates.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        estimates
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    };
    McSummary {
        estimator: config.estimator.label(),
        kind: config.estimator.kind(),
        profile: config.estimator.profile().cloned(),
        n: config.n,
        h_true: h,
        paths: estimates.len(),
        failures: failure_log.len(),
        mean,
        sd,
        max,
        min,
        seed: config.seed,
        failure_log,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn autocovariance_of_brownian_noise_is_white() {
        assert_eq!(fgn_autocovariance(0.5, 0), 1.0);
        for k in 1..5 {
            assert!(fgn_autocovariance(0.5, k).abs() < 1e-15);
        }
        assert!(fgn_autocovariance(0.7, 1) > 0.0);
        assert!(fgn_autocovariance(0.3, 1) < 0.0);
    }

    #[test]
    fn invalid_h_is_rejected() {
        assert_eq!(fbm_path(1.0, 4, 0), Err(HurstError::InvalidH(1.0)));
        assert_eq!(fbm_path(0.0, 4, 0), Err(HurstError::InvalidH(0.0)));
        assert!(fbm_path(0.5, 21, 0).is_err());
    }

    #[test]
    fn paths_are_deterministic_and_start_at_zero() {
        let a = fbm_path(0.3, 8, 11).unwrap();
        let b = fbm_path(0.3, 8, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values()[0], 0.0);
        assert_ne!(a, fbm_path(0.3, 8, 12).unwrap());
        assert_ne!(a, fbm_path_stream(0.3, 8, 11, 1).unwrap());
    }

    #[test]
    fn circulant_and_dense_share_the_law() {
        // Same covariance, different factorizations: compare second moments.
        let h = 0.3;
        let count = 16;
        let circ = FgnGenerator::new(h, count, 1.0, FbmMethod::Circulant).unwrap();
        let dense = FgnGenerator::new(h, count, 1.0, FbmMethod::Dense).unwrap();
        assert_eq!(circ.method(), FbmMethod::Circulant);
        assert_eq!(dense.method(), FbmMethod::Dense);
        let paths = 20_000;
        for gen in [&circ, &dense] {
            let mut rng = path_rng(5, 0);
            let mut lag0 = 0.0;
            let mut lag1 = 0.0;
            for _ in 0..paths {
                let x = gen.sample(&mut rng);
                lag0 += x[3] * x[3];
                lag1 += x[3] * x[4];
            }
            lag0 /= paths as f64;
            lag1 /= paths as f64;
            assert!((lag0 - 1.0).abs() < 0.05, "{lag0}");
            assert!((lag1 - fgn_autocovariance(h, 1)).abs() < 0.05, "{lag1}");
        }
    }

    #[test]
    fn splice_is_continuous() {
        let p = spliced_fbm(0.3, 0.7, 64, 32, 1.0 / 64.0, 3, 0).unwrap();
        assert_eq!(p.len(), 97);
        assert_eq!(p[0], 0.0);
    }

    #[test]
    fn standardized_has_unit_variance() {
        let s = standardize(&[1.0, 2.0, 4.0, 7.0]);
        let (m, sd) = mean_sd(&s);
        assert!(m.abs() < 1e-15);
        assert!((sd - 1.0).abs() < 1e-14);
    }

    #[test]
    fn summary_orders_statistics() {
        let config = McConfig {
            estimator: EstimatorSpec::Gladyshev,
            n: 8,
            paths: 20,
            seed: 1,
            standardize: false,
            method: FbmMethod::Auto,
        };
        let out = monte_carlo(&config, &[0.4]).unwrap();
        let s = &out[0];
        assert_eq!(s.paths, 20);
        assert_eq!(s.failures, 0);
        assert!(s.min <= s.mean && s.mean <= s.max && s.sd >= 0.0);
        assert_eq!(out, monte_carlo(&config, &[0.4]).unwrap());
    }
}
