mod common;

use common::*;
use hurst_core::diagnostics::{
    bias_report_from_xi, bv_readout, condition_a_ratio, condition_b_ratio, quantile_bounds,
    reverse_jensen_ratio, Ratio, Verdict,
};
use hurst_core::estimators::{
    closed_form_weights, generalized_scale, gladyshev_sequence, m_stat, regression_scale,
    sequential_scale, simple_regression, terminal_scale, PairWeight,
};
use hurst_core::fbm::{fbm_path_stream, fgn_autocovariance};
use hurst_core::rolling::{extract_window, pooled_factor, WindowGrid};
use hurst_core::variation::variation_profile;
use hurst_core::{
    branch_moment, burkholder_ratio, fs_eval, gladyshev, pth_variation, rolling_monitor,
    t_adjusted, Detrend, DyadicSeries, EstimatorKind, FaberSchauderPyramid, HurstError,
    WeightProfile,
};

fn hat(n: u32) -> DyadicSeries {
    DyadicSeries::from_fn(n, |t| t.min(1.0 - t)).unwrap()
}

fn ramp(n: u32) -> DyadicSeries {
    DyadicSeries::from_fn(n, |t| t).unwrap()
}

/// `2^{-m/2} e(2^m t - k)` with `e` the unit tent on `[0, 1]` peaking at 1/2.
fn tent(m: u32, k: usize, t: f64) -> f64 {
    let u = (1u64 << m) as f64 * t - k as f64;
    let e = if (0.0..=1.0).contains(&u) { u.min(1.0 - u) } else { 0.0 };
    (-(m as f64) / 2.0).exp2() * e
}

// ---- dyadic grid and coefficients ----

#[test]
fn series_construction() {
    assert!(DyadicSeries::from_samples(vec![0.0, 1.0, 0.0], 1).is_ok());
    assert!(matches!(
        DyadicSeries::from_samples(vec![0.0, 1.0], 1),
        Err(HurstError::LengthMismatch { expected: 3, actual: 2 })
    ));
    assert!(DyadicSeries::from_samples(vec![0.0, 0.25, 0.5, 0.75, 1.0], 2).is_ok());
    assert!(matches!(
        DyadicSeries::from_samples(vec![0.0, f64::NAN, 0.0], 1),
        Err(HurstError::NonFinite { index: 1 })
    ));
}

#[test]
fn tent_analyzes_to_one_coefficient() {
    let pyr = FaberSchauderPyramid::analyze(&hat(3));
    assert_eq!(pyr.theta(0, 0), 1.0);
    assert_eq!((pyr.x0(), pyr.slope()), (0.0, 0.0));
    let others: f64 = (1..3).flat_map(|m| pyr.level(m).to_vec()).map(f64::abs).sum();
    assert_eq!(others, 0.0);
}

#[test]
fn ramp_has_only_a_linear_part() {
    let pyr = FaberSchauderPyramid::analyze(&ramp(3));
    assert_eq!(pyr.slope(), 1.0);
    assert!(pyr.levels().iter().flatten().all(|&t| t == 0.0));
}

#[test]
fn coefficients_by_hand() {
    let s = DyadicSeries::from_samples(vec![0.0, 0.5, 0.0, -0.25, 0.0], 2).unwrap();
    let pyr = FaberSchauderPyramid::analyze(&s);
    let r2 = 2f64.sqrt();
    assert_eq!(pyr.theta(0, 0), 0.0);
    assert!((pyr.theta(1, 0) - r2).abs() < 1e-15);
    assert!((pyr.theta(1, 1) + 0.5 * r2).abs() < 1e-15);
}

#[test]
fn basis_functions_are_orthogonal_on_the_grid() {
    for n in 1..=7u32 {
        for m in 0..n {
            for k in 0..(1usize << m) {
                let s = DyadicSeries::from_fn(n, |t| tent(m, k, t)).unwrap();
                let pyr = FaberSchauderPyramid::analyze(&s);
                for j in 0..n {
                    for (i, &c) in pyr.level(j).iter().enumerate() {
                        let want = if (j, i) == (m, k) { 1.0 } else { 0.0 };
                        assert!((c - want).abs() < 1e-12, "e_{m},{k} at n={n}: theta_{j},{i} = {c}");
                    }
                }
            }
        }
    }
}

#[test]
fn synthesis_from_a_single_coefficient_is_the_tent() {
    let mut theta: Vec<Vec<f64>> = (0..4).map(|m| vec![0.0; 1 << m]).collect();
    theta[0][0] = 1.0;
    let pyr = FaberSchauderPyramid::from_parts(0.0, 0.0, theta).unwrap();
    assert_eq!(pyr.synthesize(4).unwrap(), hat(4));
    assert!(matches!(pyr.synthesize(5), Err(HurstError::DepthExceeded { .. })));
}

#[test]
fn synthesis_equals_pointwise_expansion() {
    let mut r = rng(3);
    let s = random_walk(&mut r, 5);
    let pyr = FaberSchauderPyramid::analyze(&s);
    for (i, &v) in s.values().iter().enumerate() {
        let t = i as f64 / 32.0;
        let mut x = pyr.x0() + pyr.slope() * t;
        for m in 0..5 {
            for k in 0..(1usize << m) {
                x += pyr.theta(m, k) * tent(m, k, t);
            }
        }
        assert!((x - v).abs() <= 1e-12 * (1.0 + v.abs()), "t={t}: {x} vs {v}");
    }
    check_round_trip(&s).unwrap();
}

#[test]
fn fs_eval_matches_the_tent() {
    assert_eq!(fs_eval(0, 0, 0.5).unwrap(), 0.5);
    for m in 0..6u32 {
        for k in 0..(1usize << m) {
            for i in 0..=256 {
                let t = i as f64 / 256.0;
                assert!((fs_eval(m, k, t).unwrap() - tent(m, k, t)).abs() < 1e-15);
            }
        }
    }
    assert!(matches!(fs_eval(2, 4, 0.3), Err(HurstError::IndexOutOfRange(_))));
}

/// Increment of `e_{m,k}` over one cell of level `n`, from the binary digits
/// `a_1 ... a_n` of the left endpoint.
#[test]
fn binary_increment_identity() {
    for n in 1..=8u32 {
        let h = (-(n as f64)).exp2();
        for i in 0..(1usize << n) {
            let t = i as f64 * h;
            for m in 0..n {
                let a = (i >> (n - m - 1)) & 1;
                for k in 0..(1usize << m) {
                    let lhs = fs_eval(m, k, t + h).unwrap() - fs_eval(m, k, t).unwrap();
                    let rhs = if i >> (n - m) == k {
                        (m as f64 / 2.0 - n as f64).exp2() * (1.0 - 2.0 * a as f64)
                    } else {
                        0.0
                    };
                    assert!((lhs - rhs).abs() < 1e-15, "n={n} t={t} m={m} k={k}");
                }
            }
        }
    }
}

#[test]
fn energy_trace_edge_cases() {
    let t = FaberSchauderPyramid::analyze(&hat(5)).energy_trace();
    assert!((1..=5).all(|j| t.s(j) == 1.0 && t.xi(j) == Some(0.0)));
    let flat = FaberSchauderPyramid::analyze(&ramp(5)).energy_trace();
    assert!((1..=5).all(|j| flat.s(j) == 0.0 && flat.xi(j).is_none()));
}

/// The quadratic variation identity for paths with equal endpoints, and the
/// extra `slope^2` term otherwise.
#[test]
fn quadratic_variation_identity() {
    let mut r = rng(11);
    for _ in 0..40 {
        let n = 1 + (rand::Rng::random_range(&mut r, 0..12u32));
        let raw = random_walk(&mut r, n);
        let pinned = raw.detrended();
        for (s, with_slope) in [(&pinned, false), (&raw, true)] {
            let pyr = FaberSchauderPyramid::analyze(s);
            let trace = pyr.energy_trace();
            for j in 1..=n {
                let v = pth_variation(s, 2.0, j).unwrap();
                let extra = if with_slope { pyr.slope().powi(2) } else { 0.0 };
                let want = (-(j as f64)).exp2() * (trace.s(j).powi(2) + extra);
                assert!(rel_err(v, want) <= 1e-12, "n={j}: {v} vs {want}");
            }
        }
    }
}

// ---- variation ----

#[test]
fn variation_examples() {
    for n in 1..=6 {
        assert!((pth_variation(&ramp(n), 1.0, n).unwrap() - 1.0).abs() < 1e-15);
        for p in [0.5, 1.5, 2.0, 3.0] {
            let want = (n as f64 * (1.0 - p)).exp2();
            assert!(rel_err(pth_variation(&ramp(6), p, n).unwrap(), want) < 1e-13);
        }
    }
    assert_eq!(pth_variation(&hat(1), 2.0, 1).unwrap(), 0.5);
    assert!(matches!(pth_variation(&hat(2), 0.0, 1), Err(HurstError::InvalidP(_))));
    assert!(matches!(
        pth_variation(&hat(2), 2.0, 3),
        Err(HurstError::LevelExceedsResolution { .. })
    ));
    let prof = variation_profile(&ramp(5), &[1.0, 2.0], &[1, 3, 5]).unwrap();
    assert_eq!(prof.value(2, 1), 1.0 / 32.0);
}

/// Average of `(sum_m S_m)^{p/2}` over every outcome of the fair coins
/// `U_1 .. U_{n-1}`, with `S_m = 2^m theta^2_{m, 2^m R_m}`.
fn branch_oracle(pyr: &FaberSchauderPyramid, n: u32, p: f64) -> f64 {
    let outcomes = 1usize << (n - 1);
    let mut total = 0.0;
    for w in 0..outcomes {
        let coins: Vec<usize> = (0..n - 1).map(|b| (w >> b) & 1).collect();
        let mut sum = 0.0;
        for m in 0..n {
            // 2^m R_m has binary digits U_1 ... U_m, most significant first.
            let idx = coins[..m as usize].iter().fold(0usize, |acc, &u| 2 * acc + u);
            sum += (m as f64).exp2() * pyr.theta(m, idx).powi(2);
        }
        total += sum.powf(p / 2.0);
    }
    total / outcomes as f64
}

#[test]
fn branch_moment_matches_enumeration() {
    let mut r = rng(5);
    for _ in 0..20 {
        let s = random_walk(&mut r, 6);
        let pyr = FaberSchauderPyramid::analyze(&s);
        for n in 1..=6 {
            for p in [0.5, 1.0, 2.0, 3.0, 4.0] {
                let (a, b) = (branch_moment(&pyr, n, p).unwrap(), branch_oracle(&pyr, n, p));
                assert!(rel_err(a, b) <= 1e-12, "n={n} p={p}: {a} vs {b}");
            }
            let s2 = pyr.energy_trace().s(n).powi(2);
            assert!(rel_err(branch_moment(&pyr, n, 2.0).unwrap(), s2) <= 1e-12);
        }
    }
    let single = FaberSchauderPyramid::from_parts(0.0, 0.0, vec![vec![-0.7]]).unwrap();
    assert!(rel_err(branch_moment(&single, 1, 3.0).unwrap(), 0.7f64.powi(3)) < 1e-15);
}

/// `V_n^(p) = 2^{n(1-p)} E|sum_m Y_m|^p` on pinned paths, with
/// `Y_m = 2^{m/2} theta_{m, 2^m R_m} (1 - 2 U_{m+1})`, enumerated exactly.
#[test]
fn pth_variation_as_a_martingale_moment() {
    let mut r = rng(8);
    for _ in 0..10 {
        let s = pinned_walk(&mut r, 7);
        let pyr = FaberSchauderPyramid::analyze(&s);
        for n in 1..=7u32 {
            for p in [1.0, 1.5, 3.0, 4.0] {
                let mut total = 0.0;
                for i in 0..(1usize << n) {
                    let y: f64 = (0..n)
                        .map(|m| {
                            let idx = i >> (n - m);
                            let u = (i >> (n - m - 1)) & 1;
                            (m as f64 / 2.0).exp2() * pyr.theta(m, idx) * (1.0 - 2.0 * u as f64)
                        })
                        .sum();
                    total += y.abs().powf(p);
                }
                let want = (n as f64 * (1.0 - p)).exp2() * total / (1u64 << n) as f64;
                let got = pth_variation(&s, p, n).unwrap();
                assert!(rel_err(got, want) <= 1e-10, "n={n} p={p}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn burkholder_examples() {
    let h = hat(1);
    let r4 = burkholder_ratio(&h, 4.0, 1, Detrend::None).unwrap();
    assert_eq!(r4.variation, 0.125);
    assert_eq!(r4.ratio, 1.0);
    let mut rg = rng(2);
    let s = random_walk(&mut rg, 9);
    assert_eq!(
        burkholder_ratio(&s, 2.0, 9, Detrend::None),
        Err(HurstError::NonZeroEndpoints)
    );
    let r2 = burkholder_ratio(&s, 2.0, 9, Detrend::Affine).unwrap();
    assert!((r2.ratio - 1.0).abs() < 1e-12);
}

#[test]
fn burkholder_ratio_stays_bounded_on_brownian_paths() {
    for stream in 0..10 {
        let s = fbm_path_stream(0.5, 14, 21, stream).unwrap();
        for n in 4..=14 {
            let coarse = s.coarsened(n).unwrap();
            for p in [1.0, 3.0, 4.0] {
                let r = burkholder_ratio(&coarse, p, n, Detrend::Affine).unwrap().ratio;
                assert!((0.05..=20.0).contains(&r), "n={n} p={p}: {r}");
            }
        }
    }
}

#[test]
fn brownian_quadratic_variation_is_flat_in_n() {
    let mut slopes = 0.0;
    for stream in 0..100 {
        let s = fbm_path_stream(0.5, 12, 4, stream).unwrap();
        let levels: Vec<u32> = (4..=12).collect();
        let prof = variation_profile(&s, &[2.0], &levels).unwrap();
        let y: Vec<f64> = (0..levels.len()).map(|i| prof.value(i, 0).log2()).collect();
        let x: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
        slopes += hurst_core::numeric::ols_line(&x, &y).unwrap().0;
    }
    assert!((slopes / 100.0).abs() <= 0.2);
}

#[test]
fn quartic_variation_vanishes_for_rough_paths() {
    let mut decreasing = 0;
    for stream in 0..50 {
        let s = fbm_path_stream(0.3, 14, 6, stream).unwrap();
        let v10 = pth_variation(&s, 4.0, 10).unwrap();
        let v14 = pth_variation(&s, 4.0, 14).unwrap();
        decreasing += usize::from(v14 < v10);
    }
    assert_eq!(decreasing, 50);
}

// ---- estimators ----

#[test]
fn gladyshev_scaling_shift() {
    let mut r = rng(9);
    let s = random_walk(&mut r, 10);
    for n in 1..=10 {
        let h = gladyshev(&s, n).unwrap();
        let h2 = gladyshev(&s.scaled(2.0), n).unwrap();
        assert!((h2 - h + 1.0 / n as f64).abs() < 1e-14);
        let seq = gladyshev_sequence(&s, 1, 10).unwrap();
        assert_eq!(seq.get(n), h);
    }
    let flat = DyadicSeries::from_samples(vec![3.0; 9], 3).unwrap();
    assert!(matches!(gladyshev(&flat, 3), Err(HurstError::DegeneratePath { .. })));
    let seq = gladyshev_sequence(&hat(6), 1, 6).unwrap();
    assert!(seq.values().iter().all(|&h| h == 1.0));
}

#[test]
fn gladyshev_sequence_settles_on_fbm() {
    let mut gaps: Vec<f64> = (0..41)
        .map(|i| {
            let s = fbm_path_stream(0.4, 14, 12, i).unwrap();
            (gladyshev(&s, 14).unwrap() - gladyshev(&s, 13).unwrap()).abs()
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    assert!(gaps[20] < 0.02);
}

#[test]
fn terminal_with_one_term_matches_two_levels() {
    let mut r = rng(4);
    let s = random_walk(&mut r, 9);
    let profile = WeightProfile::new(vec![1.0]).unwrap();
    let (hn, hm) = (gladyshev(&s, 9).unwrap(), gladyshev(&s, 8).unwrap());
    // H_9 - phi/9 = H_8 - phi/8
    let phi = (hn - hm) / (1.0 / 9.0 - 1.0 / 8.0);
    let est = terminal_scale(&s, 9, &profile).unwrap();
    assert!((est.h - (hn - phi / 9.0)).abs() < 1e-12);
    assert!((est.log2_lambda - phi).abs() < 1e-9);
}

#[test]
fn sequential_top_weight_formula() {
    let n = 14.0f64;
    let profile = WeightProfile::geometric(1, 0.5).unwrap();
    let w = closed_form_weights(EstimatorKind::Sequential, 14, &profile).unwrap();
    let c = 1.0 / (n * n * (n - 1.0) * (n - 1.0)) + 0.5 / ((n - 1.0).powi(2) * (n - 2.0).powi(2));
    let beta = 1.0 + 1.0 / (c * n * n * (n - 1.0));
    assert!(rel_err(w.weight(14), beta) < 1e-13);
    assert!((w.sum() - 1.0).abs() < 1e-12);
}

#[test]
fn closed_forms_on_random_sequences() {
    let mut r = rng(17);
    for _ in 0..200 {
        let n = rand::Rng::random_range(&mut r, 3..24u32);
        let m = rand::Rng::random_range(&mut r, 0..=(n as usize - 2).min(5));
        let profile = random_profile(&mut r, m);
        let seq = random_sequence(&mut r, 1, n);
        check_closed_form(&seq, n, &profile, 1e-10).unwrap();
    }
}

#[test]
fn scale_estimators_are_scale_free() {
    let mut r = rng(1);
    let s = random_walk(&mut r, 11);
    let profile = WeightProfile::geometric(2, 0.5).unwrap();
    for lambda in [3.0, 0.01, 7.0, -2.5] {
        let t = s.scaled(lambda);
        for f in [sequential_scale, terminal_scale, regression_scale] {
            assert!((f(&s, 11, &profile).unwrap().h - f(&t, 11, &profile).unwrap().h).abs() < 1e-10);
        }
    }
}

#[test]
fn regression_examples() {
    let profile = WeightProfile::uniform(3);
    let w = closed_form_weights(EstimatorKind::Regression, 12, &profile).unwrap();
    assert!((w.sum() - 1.0).abs() < 1e-12);
    let one = WeightProfile::new(vec![1.0, 0.0, 0.0]).unwrap();
    let s = random_walk(&mut rng(6), 8);
    assert!(matches!(regression_scale(&s, 8, &one), Err(HurstError::DegenerateDesign(_))));
}

#[test]
fn generalized_pairs_reproduce_the_named_estimators() {
    let s = random_walk(&mut rng(10), 10);
    let profile = WeightProfile::new(vec![1.0, 0.4, 0.2]).unwrap();
    let n = 10u32;
    let seq_pairs: Vec<PairWeight> = (0..=2)
        .map(|j| PairWeight { hi: n - j, lo: n - j - 1, alpha: profile.alpha()[j as usize] })
        .collect();
    let term_pairs: Vec<PairWeight> = (0..=2)
        .map(|j| PairWeight { hi: n, lo: n - j - 1, alpha: profile.alpha()[j as usize] })
        .collect();
    let g = generalized_scale(&s, n, &seq_pairs).unwrap().h;
    assert!((g - sequential_scale(&s, n, &profile).unwrap().h).abs() < 1e-12);
    let g = generalized_scale(&s, n, &term_pairs).unwrap().h;
    assert!((g - terminal_scale(&s, n, &profile).unwrap().h).abs() < 1e-12);
    let g7 = generalized_scale(&s.scaled(7.0), n, &term_pairs).unwrap().h;
    assert!((g7 - g).abs() < 1e-10);
}

#[test]
fn increment_moments() {
    let s = random_walk(&mut rng(12), 8);
    for q in [1.0, 2.0, 3.5] {
        let full = m_stat(&s, q, 256, 8).unwrap();
        let v = s.values();
        assert!(rel_err(full, (v[256] - v[0]).abs().powf(q)) < 1e-14);
    }
    let unit = m_stat(&s, 2.0, 1, 8).unwrap();
    assert!(rel_err(unit, pth_variation(&s, 2.0, 8).unwrap() / 256.0) < 1e-13);
    for k in [1, 3, 5, 16, 100] {
        for q in [1.0, 2.0] {
            let want = (k as f64 / 256.0).powf(q);
            assert!(rel_err(m_stat(&ramp(8), q, k, 8).unwrap(), want) < 1e-12);
        }
    }
    // Lag that does not divide the grid uses floor(2^n / k) increments.
    let direct: f64 = (1..=85).map(|j| (v_at(&s, 3 * j) - v_at(&s, 3 * (j - 1))).powi(2)).sum::<f64>() / 85.0;
    assert!(rel_err(m_stat(&s, 2.0, 3, 8).unwrap(), direct) < 1e-13);
}

fn v_at(s: &DyadicSeries, i: usize) -> f64 {
    s.values()[i]
}

#[test]
fn simple_regression_matches_regression_on_pinned_paths() {
    let mut r = rng(13);
    for m in 2..=4usize {
        for _ in 0..10 {
            let s = pinned_walk(&mut r, 12);
            let ks: Vec<usize> = (0..=m).map(|j| 1 << j).collect();
            let v = simple_regression(&s, 12, &ks, &[2.0]).unwrap().h;
            let rr = regression_scale(&s, 12, &WeightProfile::uniform(m)).unwrap().h;
            assert!((v - rr).abs() < 1e-10, "m={m}: {v} vs {rr}");
        }
    }
    let ks: Vec<usize> = (1..=8).collect();
    let est = simple_regression(&ramp(9), 9, &ks, &[1.0, 2.0, 3.0]).unwrap();
    assert!((est.h - 1.0).abs() < 1e-12);
}

// ---- rolling ----

#[test]
fn window_extraction() {
    let v: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
    assert_eq!(extract_window(&v[..17], 0, 4).unwrap().values(), &v[..17]);
    assert!(extract_window(&v, 100 - 17, 4).is_ok());
    assert!(matches!(extract_window(&v, 84, 4), Err(HurstError::OutOfBounds { .. })));
    let g = WindowGrid::maximal(v.len(), 4, 16).unwrap();
    assert_eq!(g.len(), 99 / 16);
}

#[test]
fn pooled_minimiser_is_the_mean_of_window_minimisers() {
    let values: Vec<f64> = {
        let s = fbm_path_stream(0.35, 12, 2, 0).unwrap();
        s.into_values()
    };
    let profile = WeightProfile::geometric(1, 0.5).unwrap();
    let grid = WindowGrid::maximal(values.len(), 8, 97).unwrap();
    for kind in [EstimatorKind::Sequential, EstimatorKind::Terminal] {
        let report = t_adjusted(&values, &grid, &profile, kind).unwrap();
        let seqs: Vec<_> = grid
            .offsets()
            .iter()
            .map(|&o| gladyshev_sequence(&extract_window(&values, o, 8).unwrap(), 6, 8).unwrap())
            .collect();
        let pooled = pooled_factor(&seqs, 8, &profile, kind).unwrap();
        let mean = report.rows.iter().map(|r| r.raw_log2_lambda).sum::<f64>() / report.rows.len() as f64;
        assert!((pooled - mean).abs() < 1e-10);
        assert!((report.shared_log2_lambda - pooled).abs() < 1e-10);
        let scaled: Vec<f64> = values.iter().map(|v| v * -4e3).collect();
        let again = t_adjusted(&scaled, &grid, &profile, kind).unwrap();
        for (a, b) in report.adjusted().iter().zip(again.adjusted()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn single_window_is_the_plain_estimator() {
    let s = fbm_path_stream(0.6, 9, 3, 0).unwrap();
    let profile = WeightProfile::geometric(1, 0.5).unwrap();
    let grid = WindowGrid::new(vec![0], 9, s.len()).unwrap();
    let report = t_adjusted(s.values(), &grid, &profile, EstimatorKind::Terminal).unwrap();
    let direct = terminal_scale(&s, 9, &profile).unwrap().h;
    assert!((report.rows[0].adjusted - direct).abs() < 1e-12);
}

#[test]
fn long_series_monitor_emits_one_row_per_offset() {
    let s = fbm_path_stream(0.5, 12, 8, 0).unwrap();
    let profile = WeightProfile::geometric(1, 0.5).unwrap();
    let report = rolling_monitor(s.values(), 11, 1, &profile, EstimatorKind::Terminal).unwrap();
    assert_eq!(report.rows.len(), s.len() - 2048);
    assert_eq!(report.rows.last().unwrap().offset, s.len() - 2049);
}

// ---- diagnostics ----

#[test]
fn reverse_jensen_examples() {
    let s = random_walk(&mut rng(14), 8);
    let pyr = FaberSchauderPyramid::analyze(&s);
    for n in 1..=8 {
        assert!((reverse_jensen_ratio(&pyr, 2.0, n).unwrap().ratio - 1.0).abs() < 1e-12);
    }
    // One level: a single branch value, so both Jensen gaps are zero.
    let single = FaberSchauderPyramid::from_parts(0.0, 0.0, vec![vec![0.3]]).unwrap();
    for p in [1.0, 4.0] {
        assert!((reverse_jensen_ratio(&single, p, 1).unwrap().ratio - 1.0).abs() < 1e-14);
    }
    // Two levels by hand: branches are a and a + b.
    let pyr = FaberSchauderPyramid::from_parts(0.0, 0.0, vec![vec![1.0], vec![0.5, 1.0]]).unwrap();
    let (a, b0, b1) = (1.0f64, 2.0 * 0.25, 2.0 * 1.0);
    let moment = 0.5 * ((a + b0).powi(2) + (a + b1).powi(2));
    let s4 = (a + 0.5 * (b0 + b1)).powi(2);
    let rj = reverse_jensen_ratio(&pyr, 4.0, 2).unwrap();
    assert!(rel_err(rj.ratio, (moment / s4).max(s4 / moment)) < 1e-14);
}

#[test]
fn homogeneity_ratios() {
    let pyr = FaberSchauderPyramid::from_parts(
        0.0,
        0.0,
        vec![vec![1.0], vec![-2.0, 2.0], vec![1.0, 0.0, 3.0, -1.0]],
    )
    .unwrap();
    assert_eq!(condition_a_ratio(&pyr, 1).unwrap(), Ratio::Finite(1.0));
    assert_eq!(condition_a_ratio(&pyr, 2).unwrap(), Ratio::Infinite);
    assert_eq!(condition_b_ratio(&pyr, 1, 1).unwrap(), Ratio::Finite(1.0));
    assert_eq!(condition_b_ratio(&pyr, 1, 2).unwrap(), Ratio::Finite(10.0));
    assert_eq!(condition_b_ratio(&pyr, 0, 2).unwrap(), Ratio::Infinite);
    assert!(matches!(condition_b_ratio(&pyr, 3, 2), Err(HurstError::InvalidNu { .. })));
}

#[test]
fn quantile_bounds_collapse_for_flat_levels() {
    let theta: Vec<Vec<f64>> = (0..8u32).map(|m| vec![0.3 + 0.1 * m as f64; 1 << m]).collect();
    let pyr = FaberSchauderPyramid::from_parts(0.0, 0.0, theta).unwrap();
    let s2 = pyr.energy_trace().s(8).powi(2);
    let want = (s2 - pyr.theta(0, 0).powi(2)).log2() / 16.0;
    for nu in 1..=3 {
        let q = quantile_bounds(&pyr, nu, 8).unwrap();
        assert!((q.lower - want).abs() < 1e-12 && (q.upper - want).abs() < 1e-12);
    }
}

#[test]
fn quantile_bounds_sandwich_brownian_h() {
    let mut inside = 0;
    for stream in 0..20 {
        let s = fbm_path_stream(0.5, 12, 30, stream).unwrap();
        let q = quantile_bounds(&FaberSchauderPyramid::analyze(&s), 2, 12).unwrap();
        inside += usize::from(1.0 - q.upper <= 0.6 && 0.4 <= 1.0 - q.lower);
    }
    assert!(inside >= 18, "{inside}");
}

#[test]
fn bias_rules() {
    let r = bias_report_from_xi(12, 0.5, 0.5, 0.0);
    assert!(r.checks.iter().all(|c| c.verdict == Verdict::Consistent));
    let r = bias_report_from_xi(12, 0.7, 0.6, 0.02);
    assert!(r.any_violated());
    let s = fbm_path_stream(0.3, 14, 1, 0).unwrap();
    let trace = FaberSchauderPyramid::analyze(&s).energy_trace();
    assert!(!hurst_core::diagnostics::bias_report(&trace, 0.3).unwrap().any_violated());
}

#[test]
fn bounded_variation_readout() {
    let flat = bv_readout(&FaberSchauderPyramid::analyze(&ramp(6)).energy_trace());
    assert_eq!(flat.max_s, 0.0);
    let tent = bv_readout(&FaberSchauderPyramid::analyze(&hat(6)).energy_trace());
    assert_eq!(tent.max_s, 1.0);
    assert_eq!(tent.log2_slope, Some(0.0));
    let mut slope = 0.0;
    for stream in 0..10 {
        let s = fbm_path_stream(0.5, 14, 40, stream).unwrap();
        let trace = FaberSchauderPyramid::analyze(&s).energy_trace();
        slope += hurst_core::diagnostics::bv_readout_from(&trace, 8).log2_slope.unwrap();
    }
    assert!((slope / 10.0 - 0.5).abs() <= 0.1);
}

// ---- simulation ----

#[test]
fn fbm_has_the_right_second_moments() {
    let paths = 10_000u64;
    for h in [0.3, 0.5, 0.8] {
        let mut end = Vec::new();
        let mut incr = Vec::new();
        let mut lag1 = Vec::new();
        for i in 0..paths {
            let s = fbm_path_stream(h, 6, 77, i).unwrap();
            let v = s.values();
            end.push(v[64]);
            incr.push(v[33] - v[32]);
            lag1.push((v[33] - v[32]) * (v[34] - v[33]));
        }
        let var = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let se = |xs: &[f64], sigma2: f64| sigma2 * (2.0 / xs.len() as f64).sqrt();
        assert!((var(&end) - 1.0).abs() < 3.0 * se(&end, 1.0), "H={h}");
        let d = (1.0f64 / 64.0).powf(2.0 * h);
        assert!((var(&incr) - d).abs() < 3.0 * se(&incr, d), "H={h}");
        let rho = lag1.iter().sum::<f64>() / paths as f64 / d;
        let want = fgn_autocovariance(h, 1);
        assert!((rho - want).abs() < 3.0 * (1.0 + want * want).sqrt() / (paths as f64).sqrt(), "H={h}: {rho}");
    }
    assert_eq!(fgn_autocovariance(0.5, 1), 0.0);
}

#[test]
fn perturbations_are_amplified_at_most_linearly_in_n() {
    let h = 0.4;
    let profile = WeightProfile::geometric(2, 0.5).unwrap();
    for kind in [EstimatorKind::Sequential, EstimatorKind::Terminal, EstimatorKind::Regression] {
        let ratios: Vec<f64> = (6..=14u32)
            .map(|n| {
                let values = (1..=n).map(|j| h + 3.0 * (-(j as f64)).exp2()).collect();
                let seq = hurst_core::estimators::GladyshevSequence::from_values(1, values).unwrap();
                let est = closed_form_weights(kind, n, &profile).unwrap().apply(&seq).unwrap();
                (est - h).abs() / (n as f64 * (-(n as f64)).exp2())
            })
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max < 50.0, "{kind}: {ratios:?}");
        assert!(ratios[8] <= 2.0 * ratios[0], "{kind}: {ratios:?}");
    }
}
