//! Helpers shared by the property suite and the acceptance runner.

#![allow(dead_code)]

use hurst_core::diagnostics::{condition_a_ratio, condition_b_ratio, quantile_bounds, reverse_jensen_ratio};
use hurst_core::estimators::{
    closed_form_weights, regression_from_sequence, sequential_from_sequence,
    terminal_from_sequence, GladyshevSequence,
};
use hurst_core::{branch_moment, DyadicSeries, EstimatorKind, FaberSchauderPyramid, WeightProfile};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Check = Result<(), String>;

/// A weight and a residual affine in `phi`.
pub type Residual = (f64, Box<dyn Fn(f64) -> f64>);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian random walk with a random scale and drift.
pub fn random_walk<R: Rng>(rng: &mut R, n: u32) -> DyadicSeries {
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    let drift = rng.random_range(-2.0..2.0) * scale;
    let dt = 1.0 / (1u64 << n) as f64;
    let mut x = rng.random_range(-1.0..1.0) * scale;
    let mut values = vec![x];
    for _ in 0..(1usize << n) {
        let z: f64 = StandardNormal.sample(rng);
        x += drift * dt + scale * dt.sqrt() * z;
        values.push(x);
    }
    DyadicSeries::from_samples(values, n).unwrap()
}

/// Random walk moved onto `x(0) = x(1) = 0`.
pub fn pinned_walk<R: Rng>(rng: &mut R, n: u32) -> DyadicSeries {
    random_walk(rng, n).detrended()
}

pub fn random_profile<R: Rng>(rng: &mut R, m: usize) -> WeightProfile {
    let mut alpha: Vec<f64> = (0..=m).map(|_| rng.random_range(0.0..2.0)).collect();
    alpha[0] = rng.random_range(0.05..2.0);
    WeightProfile::new(alpha).unwrap()
}

/// A plausible Gladyshev sequence: `h + c / j` plus noise.
pub fn random_sequence<R: Rng>(rng: &mut R, lo: u32, hi: u32) -> GladyshevSequence {
    let h = rng.random_range(0.05..0.95);
    let c = rng.random_range(-3.0..3.0);
    let values = (lo..=hi)
        .map(|j| h + c / j as f64 + 0.02 * rng.random_range(-1.0..1.0))
        .collect();
    GladyshevSequence::from_values(lo, values).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Pyramid with the signs of the coefficients selected by `mask` flipped.
pub fn flip_signs(pyr: &FaberSchauderPyramid, mask: &[bool]) -> FaberSchauderPyramid {
    let mut out = pyr.clone();
    let mut i = 0;
    for m in 0..pyr.depth() {
        for t in out.level_mut(m) {
            if mask[i % mask.len()] {
                *t = -*t;
            }
            i += 1;
        }
    }
    out
}

/// Every quantity built from `theta^2` must be unchanged, bit for bit.
pub fn check_sign_flip(series: &DyadicSeries, mask: &[bool]) -> Check {
    let pyr = FaberSchauderPyramid::analyze(series);
    let flipped = flip_signs(&pyr, mask);
    let n = pyr.depth();
    let (a, b) = (pyr.energy_trace(), flipped.energy_trace());
    ensure(a == b, || "energy trace changed".into())?;
    for j in 1..=n.min(12) {
        for p in [1.0, 2.0, 3.0, 4.0] {
            let (x, y) = (branch_moment(&pyr, j, p).unwrap(), branch_moment(&flipped, j, p).unwrap());
            ensure(x == y, || format!("branch moment n={j} p={p}: {x} vs {y}"))?;
            if a.s(j) > 0.0 {
                let (x, y) = (
                    reverse_jensen_ratio(&pyr, p, j).unwrap().ratio,
                    reverse_jensen_ratio(&flipped, p, j).unwrap().ratio,
                );
                ensure(x == y, || format!("reverse Jensen n={j} p={p}"))?;
            }
        }
    }
    for m in 0..n {
        ensure(
            condition_a_ratio(&pyr, m).unwrap() == condition_a_ratio(&flipped, m).unwrap(),
            || format!("condition (a) at m={m}"),
        )?;
        for nu in 0..=m.min(3) {
            ensure(
                condition_b_ratio(&pyr, nu, m).unwrap() == condition_b_ratio(&flipped, nu, m).unwrap(),
                || format!("condition (b) at m={m} nu={nu}"),
            )?;
        }
    }
    if n >= 2 {
        for nu in 1..=2 {
            let (x, y) = (quantile_bounds(&pyr, nu, n), quantile_bounds(&flipped, nu, n));
            ensure(x == y, || format!("quantile bounds nu={nu}"))?;
        }
    }
    if n >= 3 && (1..=n).all(|j| a.s(j) > 0.0) {
        let profile = WeightProfile::geometric(1, 0.5).unwrap();
        let sa = GladyshevSequence::from_trace(&a, 1, n).unwrap();
        let sb = GladyshevSequence::from_trace(&b, 1, n).unwrap();
        ensure(sa == sb, || "Gladyshev sequence changed".into())?;
        for f in [sequential_from_sequence, terminal_from_sequence, regression_from_sequence] {
            ensure(f(&sa, n, &profile).unwrap() == f(&sb, n, &profile).unwrap(), || {
                "scale estimate changed".into()
            })?;
        }
    }
    Ok(())
}

/// `E[(sum S_m)^{p/2}]` against `s_n^p`: below for `p < 2`, above for `p > 2`.
pub fn check_jensen(pyr: &FaberSchauderPyramid, n: u32, p: f64) -> Check {
    let moment = branch_moment(pyr, n, p).unwrap();
    let sp = pyr.energy_trace().s(n).powf(p);
    let slack = 1e-12 * sp.max(moment);
    if p < 2.0 {
        ensure(moment <= sp + slack, || format!("p={p} n={n}: {moment} > {sp}"))
    } else {
        ensure(moment + slack >= sp, || format!("p={p} n={n}: {moment} < {sp}"))
    }
}

pub fn check_reverse_jensen_p2(pyr: &FaberSchauderPyramid, n: u32) -> Check {
    let r = reverse_jensen_ratio(pyr, 2.0, n).unwrap().ratio;
    ensure((r - 1.0).abs() <= 1e-12, || format!("n={n}: ratio {r}"))
}

pub fn check_quantile_order(pyr: &FaberSchauderPyramid, nu: u32, n: u32) -> Check {
    let q = quantile_bounds(pyr, nu, n).unwrap();
    ensure(q.lower <= q.upper, || format!("nu={nu} n={n}: {} > {}", q.lower, q.upper))
}

pub fn check_condition_b_nu0(pyr: &FaberSchauderPyramid, m: u32) -> Check {
    let a = condition_a_ratio(pyr, m).unwrap();
    let b = condition_b_ratio(pyr, 0, m).unwrap();
    match (a.value(), b.value()) {
        (Some(a), Some(b)) => ensure(rel_err(a * a, b) <= 1e-12, || format!("m={m}: {a}^2 vs {b}")),
        (None, None) => Ok(()),
        _ => Err(format!("m={m}: one ratio infinite, the other not")),
    }
}

pub fn check_round_trip(series: &DyadicSeries) -> Check {
    let pyr = FaberSchauderPyramid::analyze(series);
    let back = pyr.synthesize(series.resolution()).unwrap();
    let norm = series.values().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let err = series
        .values()
        .iter()
        .zip(back.values())
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    ensure(err <= 1e-12 * norm, || format!("round-trip error {err} (norm {norm})"))
}

/// Minimiser of `sum w r(phi)^2` for residuals affine in `phi`, written
/// straight from the objectives; shared by the closed-form checks.
pub fn direct_argmin(residuals: &[Residual]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (w, r) in residuals {
        let r0 = r(0.0);
        let slope = r(1.0) - r0;
        num += w * r0 * slope;
        den += w * slope * slope;
    }
    -num / den
}

/// `H_j(2^phi x) = H_j(x) - phi / j`.
fn rescaled(seq: &GladyshevSequence, j: u32) -> impl Fn(f64) -> f64 {
    let h = seq.get(j);
    move |phi| h - phi / j as f64
}

/// Direct estimate of the sequential or terminal estimator.
pub fn direct_estimate(kind: EstimatorKind, seq: &GladyshevSequence, n: u32, profile: &WeightProfile) -> f64 {
    let alpha = profile.alpha();
    let m = profile.m() as u32;
    let residuals: Vec<Residual> = (0..=m)
        .map(|k| {
            let (a, b) = match kind {
                EstimatorKind::Sequential => (rescaled(seq, n - k), rescaled(seq, n - k - 1)),
                EstimatorKind::Terminal => (rescaled(seq, n), rescaled(seq, n - k - 1)),
                _ => unreachable!(),
            };
            let r: Box<dyn Fn(f64) -> f64> = Box::new(move |phi| a(phi) - b(phi));
            (alpha[k as usize], r)
        })
        .collect();
    let phi = direct_argmin(&residuals);
    seq.get(n) - phi / n as f64
}

/// Weighted least squares of `j H_j` on `j`, via centred sums.
pub fn direct_regression(seq: &GladyshevSequence, n: u32, profile: &WeightProfile) -> f64 {
    let pts: Vec<(f64, f64, f64)> = profile
        .alpha()
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let j = n - k as u32;
            (w, j as f64, j as f64 * seq.get(j))
        })
        .collect();
    let sw: f64 = pts.iter().map(|p| p.0).sum();
    let xbar = pts.iter().map(|p| p.0 * p.1).sum::<f64>() / sw;
    let ybar = pts.iter().map(|p| p.0 * p.2).sum::<f64>() / sw;
    let sxy: f64 = pts.iter().map(|p| p.0 * (p.1 - xbar) * (p.2 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * (p.1 - xbar) * (p.1 - xbar)).sum();
    sxy / sxx
}

/// Closed-form weights and library estimates against the direct minimisers.
pub fn check_closed_form(seq: &GladyshevSequence, n: u32, profile: &WeightProfile, tol: f64) -> Check {
    for kind in [EstimatorKind::Sequential, EstimatorKind::Terminal] {
        let direct = direct_estimate(kind, seq, n, profile);
        let weights = closed_form_weights(kind, n, profile).unwrap();
        let closed = weights.apply(seq).unwrap();
        let lib = match kind {
            EstimatorKind::Sequential => sequential_from_sequence(seq, n, profile),
            _ => terminal_from_sequence(seq, n, profile),
        }
        .unwrap()
        .h;
        ensure((closed - direct).abs() <= tol, || {
            format!("{kind} n={n}: closed {closed} vs argmin {direct}")
        })?;
        ensure((lib - direct).abs() <= tol, || format!("{kind} n={n}: {lib} vs {direct}"))?;
        ensure((weights.sum() - 1.0).abs() <= 1e-12, || {
            format!("{kind} n={n}: weights sum to {}", weights.sum())
        })?;
    }
    if profile.alpha().iter().filter(|&&a| a > 0.0).count() >= 2 {
        let direct = direct_regression(seq, n, profile);
        let weights = closed_form_weights(EstimatorKind::Regression, n, profile).unwrap();
        let closed = weights.apply(seq).unwrap();
        let lib = regression_from_sequence(seq, n, profile).unwrap().h;
        ensure((closed - direct).abs() <= tol, || {
            format!("regression n={n}: closed {closed} vs direct {direct}")
        })?;
        ensure((lib - direct).abs() <= tol, || format!("regression n={n}: {lib} vs {direct}"))?;
        ensure((weights.sum() - 1.0).abs() <= 1e-12, || {
            format!("regression n={n}: weights sum to {}", weights.sum())
        })?;
    }
    Ok(())
}
