mod common;

use common::config;
use excursion_tails::error::Error;
use excursion_tails::exact_dist::*;
use proptest::prelude::*;

// reference values from a 30-digit evaluation of the series
const TAIL_1: f64 = 0.822_076_644_356_929_3;
const TAIL_1_5: f64 = 0.177_745_010_710_459_45;
const TAIL_3: f64 = 1.066_098_582_129_884e-6;
const TAIL_4: f64 = 1.595_684_859_185_866e-12;
const LN_TAIL_6: f64 = -66.344_008_189_180_15;
const LN_TAIL_8: f64 = -121.765_589_274_281_63;
const MEDIAN: f64 = 1.223_488_019_724_781_8;
const MOMENT_3: f64 = 1.312_276_670_743_408;
const LN_MGF_2: f64 = 2.672_965_849_842_709;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Leading terms of the series, added by hand.
fn hand_tail(x: f64, terms: u32) -> f64 {
    (1..=terms)
        .map(|k| {
            let k2x2 = (k * k) as f64 * x * x;
            2.0 * (4.0 * k2x2 - 1.0) * (-2.0 * k2x2).exp()
        })
        .sum()
}

#[test]
fn cdf_examples() {
    let e = cdf_max(1.0, DEFAULT_TOL).unwrap();
    assert!((e.cdf - 0.17792).abs() < 1e-5);
    assert!((e.cdf - (1.0 - TAIL_1)).abs() < 1e-13);
    assert!((e.cdf - (1.0 - hand_tail(1.0, 4))).abs() < 1e-13);
    assert!(e.trunc_bound <= DEFAULT_TOL);

    let e = cdf_max(1.5, DEFAULT_TOL).unwrap();
    assert!((e.cdf - 0.822255).abs() < 1e-6);
    assert!((tail_max(1.5, DEFAULT_TOL).unwrap() - 0.177745).abs() < 1e-6);
    assert!(rel(tail_max(1.5, DEFAULT_TOL).unwrap(), hand_tail(1.5, 2)) < 1e-12);

    let t5 = tail_max(5.0, DEFAULT_TOL).unwrap();
    assert!(rel(t5, 198.0 * (-50.0f64).exp()) < 1e-12);
}

#[test]
fn tails_match_reference() {
    for (x, want) in [(1.0, TAIL_1), (1.5, TAIL_1_5), (3.0, TAIL_3), (4.0, TAIL_4)] {
        let got = tail_max(x, DEFAULT_TOL).unwrap();
        assert!(rel(got, want) < 1e-12, "x={x}: {got} vs {want}");
    }
    assert!((ln_tail_max(6.0, DEFAULT_TOL).unwrap() - LN_TAIL_6).abs() < 1e-12);
    assert!((ln_tail_max(8.0, DEFAULT_TOL).unwrap() - LN_TAIL_8).abs() < 1e-12);
}

#[test]
fn deep_tail_ratio() {
    let r6 = -ln_tail_max(6.0, DEFAULT_TOL).unwrap() / 72.0;
    assert!(r6 > 0.90 && r6 < 1.0, "{r6}");
    assert!((r6 - (1.0 - 286f64.ln() / 72.0)).abs() < 1e-12);
    let ratios: Vec<f64> = [3.0, 4.0, 5.0, 6.0, 8.0]
        .iter()
        .map(|&x| -ln_tail_max(x, DEFAULT_TOL).unwrap() / (2.0 * x * x))
        .collect();
    for w in ratios.windows(2) {
        assert!(w[1] > w[0] && w[1] < 1.0, "{ratios:?}");
    }
}

#[test]
fn underflow_is_reported_with_limit() {
    let lim = underflow_limit();
    assert!((lim - 18.9256).abs() < 1e-3, "{lim}");
    assert!(tail_max(lim * 0.999, DEFAULT_TOL).is_ok());
    match tail_max(20.0, DEFAULT_TOL) {
        Err(Error::Underflow { limit }) => assert_eq!(limit, lim),
        other => panic!("expected underflow, got {other:?}"),
    }
    let l = ln_tail_max(20.0, DEFAULT_TOL).unwrap();
    assert!((l - ((2.0f64 * 1599.0).ln() - 800.0)).abs() < 1e-12);
}

#[test]
fn domain_errors() {
    assert!(matches!(cdf_max(0.0, DEFAULT_TOL), Err(Error::Domain(_))));
    assert!(matches!(cdf_max(-1.0, DEFAULT_TOL), Err(Error::Domain(_))));
    assert!(cdf_max(f64::NAN, DEFAULT_TOL).is_err());
    assert!(cdf_max(1.0, 0.0).is_err());
    assert!(tail_max(0.0, DEFAULT_TOL).is_err());
    assert!(quantile_max(0.0, 1e-10).is_err());
    assert!(quantile_max(1.0, 1e-10).is_err());
    assert!(moment_max(0.0, 1e-10).is_err());
    assert!(ln_mgf_max(-1.0, 1e-10).is_err());
}

#[test]
fn small_x_limit() {
    assert!(cdf_max(0.2, DEFAULT_TOL).unwrap().cdf < 1e-6);
    assert!(cdf_max(0.3, DEFAULT_TOL).unwrap().cdf < 1e-6);
}

#[test]
fn cdf_at_four_is_one_minus_reference_tail() {
    // the true complement at x = 4 is 1.6e-12, so cdf(4) sits just below 1 - 1e-12
    let e = cdf_max(4.0, DEFAULT_TOL).unwrap();
    assert!(e.cdf > 1.0 - 2e-12);
    assert!(((1.0 - e.cdf) - TAIL_4).abs() < 1e-15);
}

#[test]
fn cdf_is_monotone_on_a_grid() {
    let mut prev = 0.0;
    for k in 1..=800 {
        let x = 0.005 * k as f64;
        let c = cdf_max(x, DEFAULT_TOL).unwrap().cdf;
        assert!((0.0..=1.0).contains(&c));
        assert!(c >= prev, "x={x}: {c} < {prev}");
        prev = c;
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn tail_and_cdf_sum_to_one(x in 0.5..3.0f64) {
        let c = cdf_max(x, DEFAULT_TOL).unwrap().cdf;
        let t = tail_max(x, DEFAULT_TOL).unwrap();
        prop_assert!((c + t - 1.0).abs() <= 1e-14_f64.max(DEFAULT_TOL));
    }

    #[test]
    fn truncation_bound_respects_tolerance(x in 0.05..10.0f64, e in 3.0..15.0f64) {
        let tol = 10f64.powf(-e);
        let s = cdf_max(x, tol).unwrap();
        prop_assert!(s.trunc_bound <= tol);
        prop_assert!(s.terms_used >= 1);
    }

    #[test]
    fn quantile_round_trip(x in 0.4..3.0f64) {
        let p = cdf_max(x, DEFAULT_TOL).unwrap().cdf;
        prop_assume!(p > 1e-6 && p < 1.0 - 1e-6);
        let q = quantile_max(p, 1e-13).unwrap();
        let back = cdf_max(q, DEFAULT_TOL).unwrap().cdf;
        prop_assert!((back - p).abs() <= 1e-13);
    }
}

#[test]
fn quantile_examples() {
    let p = cdf_max(1.0, DEFAULT_TOL).unwrap().cdf;
    assert!((quantile_max(p, 1e-12).unwrap() - 1.0).abs() < 1e-8);
    let m = quantile_max(0.5, 1e-14).unwrap();
    assert!((cdf_max(m, DEFAULT_TOL).unwrap().cdf - 0.5).abs() <= 1e-14);
    assert!((m - MEDIAN).abs() < 1e-10);
    assert!(quantile_max(0.25, 1e-12).unwrap() < quantile_max(0.75, 1e-12).unwrap());
    let hi = quantile_max(1.0 - 1e-12, 1e-15).unwrap();
    assert!(rel(tail_max(hi, DEFAULT_TOL).unwrap(), 1e-12) < 1e-3);
}

#[test]
fn low_moments() {
    let m1 = moment_max(1.0, 1e-12).unwrap();
    assert!((m1 - std::f64::consts::FRAC_PI_2.sqrt()).abs() < 1e-9, "{m1}");
    let m2 = moment_max(2.0, 1e-12).unwrap();
    let pi2 = std::f64::consts::PI.powi(2) / 6.0;
    assert!((m2 * m2 - pi2).abs() < 1e-9, "{m2}");
    let m3 = moment_max(3.0, 1e-12).unwrap();
    assert!((m3 - MOMENT_3).abs() < 1e-9, "{m3}");
}

#[test]
fn high_moment_ratios() {
    // ratios of (E M^r)^{1/r} to ½√(r/e) at r = 20, 40, 80, 160
    let want = [1.330_836_161_89, 1.184_643_630_27, 1.102_798_133_1, 1.057_023_067_91];
    let mut prev = f64::INFINITY;
    for (r, w) in [20.0, 40.0, 80.0, 160.0].iter().zip(want) {
        let ratio = moment_max(*r, 1e-12).unwrap() / (0.5 * (r / std::f64::consts::E).sqrt());
        assert!((ratio - w).abs() < 1e-8, "r={r}: {ratio} vs {w}");
        assert!(ratio > 1.0 && ratio < prev);
        prev = ratio;
    }
}

#[test]
fn mgf_values() {
    assert_eq!(ln_mgf_max(0.0, 1e-12).unwrap(), 0.0);
    let l2 = ln_mgf_max(2.0, 1e-12).unwrap();
    assert!((l2 - LN_MGF_2).abs() < 1e-9, "{l2}");
    let want = [1.721_418, 1.245_325, 1.077_577];
    let mut prev = f64::INFINITY;
    for (t, w) in [8.0, 16.0, 32.0].iter().zip(want) {
        let ratio = ln_mgf_max(*t, 1e-12).unwrap() / (t * t / 8.0);
        assert!((ratio - w).abs() < 1e-5, "t={t}: {ratio} vs {w}");
        assert!(ratio < prev);
        prev = ratio;
    }
    assert!(ln_mgf_max(200.0, 1e-12).unwrap().is_finite());
}

