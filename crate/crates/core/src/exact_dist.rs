//! The law of `M = max_t B_ex(t)`:
//!
//! ```text
//! P(M ≤ x) = 1 + 2 Σ_{k≥1} (1 - 4k²x²) exp(-2k²x²),   x > 0.
//! ```
//!
//! Truncation uses the domination `|tₖ| ≤ uₖ = (1 + 4k²x²) e^{-2k²x²}` and the
//! fact that `u_{k+1}/uₖ` decreases in `k`, so the dropped remainder after term
//! `k` is at most `2u_{k+1} / (1 - u_{k+2}/u_{k+1})`.
//!
//! Moments and the moment generating function are integrals of the tail,
//! evaluated by adaptive Gauss–Kronrod quadrature in log-normalized form.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default truncation and quadrature tolerance.
pub const DEFAULT_TOL: f64 = 1e-13;

/// Below this point the tail equals 1 to far beyond double precision.
const FLAT_TAIL: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesEval {
    pub x: f64,
    pub cdf: f64,
    pub terms_used: usize,
    /// Bound on the absolute value of the dropped remainder.
    pub trunc_bound: f64,
}

/// Neumaier's compensated sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn envelope(k: f64, x2: f64) -> f64 {
    (1.0 + 4.0 * k * k * x2) * (-2.0 * k * k * x2).exp()
}

/// Partial sum of `Σ_{k≥1} (4k²x² - 1) e^{-2k²x²}`.
struct Complement {
    sum: f64,
    terms: usize,
    /// Bound on the dropped part of the sum itself, not doubled.
    bound: f64,
    /// `Σ |term|·(1 + 2k²x²)`, the rounding floor of the sum.
    magnitude: f64,
}

fn complement_series(x: f64, tol: f64) -> Complement {
    let x2 = x * x;
    let mut acc = CompensatedSum::default();
    let mut magnitude = 0.0;
    let mut k = 0usize;
    loop {
        k += 1;
        let kf = k as f64;
        let term = (4.0 * kf * kf * x2 - 1.0) * (-2.0 * kf * kf * x2).exp();
        acc.add(term);
        magnitude += term.abs() * (1.0 + 2.0 * kf * kf * x2);
        let u1 = envelope(kf + 1.0, x2);
        let u2 = envelope(kf + 2.0, x2);
        let done = |bound| Complement {
            sum: acc.value(),
            terms: k,
            bound,
            magnitude,
        };
        if u1 == 0.0 {
            return done(0.0);
        }
        let rho = u2 / u1;
        if rho < 1.0 {
            let bound = u1 / (1.0 - rho);
            // also run to full precision; the extra terms are cheap
            if 2.0 * bound < tol && bound <= 1e-3 * f64::EPSILON * acc.value().abs() {
                return done(bound);
            }
        }
    }
}

/// `1 - 2·sum`, set to 0 when it cannot be told apart from rounding error.
fn cdf_from(c: &Complement) -> f64 {
    let raw = 1.0 - 2.0 * c.sum;
    if raw <= 4.0 * f64::EPSILON * (1.0 + 2.0 * c.magnitude) {
        0.0
    } else {
        raw.min(1.0)
    }
}

fn check_args(x: f64, tol: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("the series needs finite x > 0, got {x}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// `P(M ≤ x)` with a truncation bound below `tol`.
pub fn cdf_max(x: f64, tol: f64) -> Result<SeriesEval> {
    check_args(x, tol)?;
    let c = complement_series(x, tol);
    Ok(SeriesEval {
        x,
        cdf: cdf_from(&c),
        terms_used: c.terms,
        trunc_bound: 2.0 * c.bound,
    })
}

fn tail_raw(x: f64, tol: f64) -> f64 {
    (2.0 * complement_series(x, tol).sum).clamp(0.0, 1.0)
}

/// `P(M > x)`, summed directly rather than as `1 - cdf`.
///
/// Fails with [`Error::Underflow`] once the tail leaves the normal range of
/// `f64`; [`ln_tail_max`] covers that regime.
pub fn tail_max(x: f64, tol: f64) -> Result<f64> {
    check_args(x, tol)?;
    let t = tail_raw(x, tol);
    if t < f64::MIN_POSITIVE {
        return Err(Error::Underflow {
            limit: underflow_limit(),
        });
    }
    Ok(t)
}

/// `ln P(M > x)`, finite for every `x > 0` representable in `f64`.
pub fn ln_tail_max(x: f64, tol: f64) -> Result<f64> {
    check_args(x, tol)?;
    Ok(ln_tail_unchecked(x, tol))
}

fn ln_tail_unchecked(x: f64, tol: f64) -> f64 {
    if x < 1.0 {
        return tail_raw(x, tol).ln();
    }
    // factor out the k = 1 term
    let x2 = x * x;
    let lead = 4.0 * x2 - 1.0;
    let mut rest = CompensatedSum::default();
    let mut k = 2.0_f64;
    loop {
        let r = (4.0 * k * k * x2 - 1.0) / lead * (-2.0 * (k * k - 1.0) * x2).exp();
        rest.add(r);
        if r < tol * 1e-3 {
            break;
        }
        k += 1.0;
    }
    (2.0 * lead).ln() - 2.0 * x2 + rest.value().ln_1p()
}

/// The point beyond which [`tail_max`] underflows.
pub fn underflow_limit() -> f64 {
    let target = f64::MIN_POSITIVE.ln();
    let (mut lo, mut hi) = (1.0, 40.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ln_tail_unchecked(mid, DEFAULT_TOL) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `x` with `|P(M ≤ x) - p| ≤ tol`, by bisection.
pub fn quantile_max(p: f64, tol: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {p}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let series_tol = (tol * 1e-3).max(1e-300);
    // compare on the side that keeps relative accuracy
    let excess = |x: f64| -> f64 {
        if p > 0.5 {
            (1.0 - p) - tail_raw(x, series_tol)
        } else {
            cdf_from(&complement_series(x, series_tol)) - p
        }
    };
    let (mut lo, mut hi) = (0.5, 2.0);
    while excess(lo) > 0.0 {
        lo *= 0.5;
    }
    while excess(hi) < 0.0 {
        hi *= 1.5;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let e = excess(mid);
        if e.abs() <= tol && hi - lo < 1e-12 * mid.max(1.0) {
            return Ok(mid);
        }
        if e < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and `|Kronrod - Gauss|` on `[a, b]`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        kron += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod on `[a, b]` to absolute accuracy `abs_tol`, or to
/// relative accuracy `rel_floor` on pieces where rounding dominates.
fn integrate(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_floor: f64,
) -> Result<f64> {
    const MAX_DEPTH: u32 = 40;
    let mut total = 0.0;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        let share = abs_tol * (hi - lo) / (b - a);
        if err <= share.max(rel_floor * val.abs()) {
            total += val;
        } else if depth >= MAX_DEPTH {
            return Err(Error::Quadrature(format!(
                "no convergence on [{lo:.6e}, {hi:.6e}] after {MAX_DEPTH} bisections \
                 (error estimate {err:.3e}, budget {share:.3e})"
            )));
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}

/// `ln ∫_{0.1}^∞ w(x) P(M > x) dx` for a log-weight `ln w` that is concave on
/// `[1/2, ∞)` with slope eventually below `4x`.
fn ln_weighted_tail_integral(
    ln_w: impl Fn(f64) -> f64,
    ln_w_slope: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<f64> {
    let series_tol = 1e-16;
    let phi = |x: f64| ln_w(x) + ln_tail_unchecked(x, series_tol);

    // scan for the peak of the log-integrand and a cutoff far below it
    let step = 0.05;
    let mut peak = f64::NEG_INFINITY;
    let mut x = FLAT_TAIL;
    let mut cutoff = None;
    while x < 1e4 {
        let v = phi(x);
        peak = peak.max(v);
        if x >= 1.0 && v < peak + tol.ln() - 20.0 {
            // log-concave k = 1 envelope beyond x
            let x2 = x * x;
            let ln_u1 = (1.0 + 4.0 * x2).ln() - 2.0 * x2;
            let rho = ((1.0 + 16.0 * x2) / (1.0 + 4.0 * x2)).ln() - 6.0 * x2;
            let rho = rho.exp();
            let lambda = 4.0 * x - 8.0 * x / (1.0 + 4.0 * x2) - ln_w_slope(x);
            if rho < 1.0 && lambda > 0.0 {
                let ln_rest = ln_w(x) + 2f64.ln() + ln_u1 - (-rho).ln_1p() - lambda.ln();
                if ln_rest < peak + tol.ln() - 5.0 {
                    cutoff = Some(x);
                    break;
                }
            }
        }
        x += step;
    }
    let cutoff = cutoff.ok_or_else(|| {
        Error::Quadrature("integrand does not decay before x = 1e4".into())
    })?;

    let f = |x: f64| (phi(x) - peak).exp();
    let width = cutoff - FLAT_TAIL;
    // rounding in phi grows with the size of its terms
    let rel_floor = 50.0 * f64::EPSILON * (1.0 + ln_w(cutoff).abs() + 2.0 * cutoff * cutoff);
    let integral = integrate(&f, FLAT_TAIL, cutoff, tol * width.min(1.0) * 1e-2, rel_floor)?;
    if !(integral > 0.0) {
        return Err(Error::Quadrature(format!("non-positive integral {integral}")));
    }
    Ok(peak + integral.ln())
}

/// `(E M^r)^{1/r}` from `E M^r = ∫₀^∞ r x^{r-1} P(M > x) dx`.
pub fn moment_max(r: f64, tol: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("moment order must be positive, got {r}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let ln_main = ln_weighted_tail_integral(
        |x| r.ln() + (r - 1.0) * x.ln(),
        |x| (r - 1.0) / x,
        tol,
    )?;
    // ∫₀^{0.1} r x^{r-1} dx
    let ln_head = r * FLAT_TAIL.ln();
    Ok((log_add(ln_main, ln_head) / r).exp())
}

/// `ln E e^{tM} = ln(1 + t ∫₀^∞ e^{tx} P(M > x) dx)`, `t ≥ 0`.
pub fn ln_mgf_max(t: f64, tol: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("MGF argument must be finite and >= 0, got {t}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let ln_main = ln_weighted_tail_integral(|x| t.ln() + t * x, |_| t, tol)?;
    // 1 + t ∫₀^{0.1} e^{tx} dx = e^{0.1 t}
    Ok(log_add(ln_main, t * FLAT_TAIL))
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_sums() {
        let e = (-2.0f64).exp();
        let hand = 1.0 + 2.0 * (-3.0 * e - 15.0 * e.powi(4) - 35.0 * e.powi(9) - 63.0 * e.powi(16));
        let got = cdf_max(1.0, 1e-15).unwrap();
        assert!((got.cdf - hand).abs() < 1e-12);
        assert!(got.trunc_bound < 1e-15);
        assert!((tail_max(1.5, 1e-15).unwrap() - 0.177745).abs() < 1e-6);
    }

    #[test]
    fn deep_tail_is_k1_dominated() {
        let t = tail_max(5.0, 1e-300).unwrap();
        let lead = 198.0 * (-50.0f64).exp();
        assert!(((t - lead) / lead).abs() < 1e-12);
        let l = ln_tail_max(5.0, DEFAULT_TOL).unwrap();
        assert!((l - lead.ln()).abs() < 1e-12);
    }

    #[test]
    fn underflow_is_reported() {
        let limit = underflow_limit();
        assert!(limit > 18.0 && limit < 20.0);
        match tail_max(25.0, DEFAULT_TOL) {
            Err(Error::Underflow { limit: l }) => assert_eq!(l, limit),
            other => panic!("expected underflow, got {other:?}"),
        }
        assert!(ln_tail_max(25.0, DEFAULT_TOL).unwrap().is_finite());
    }

    #[test]
    fn domain_errors() {
        assert!(cdf_max(0.0, 1e-12).is_err());
        assert!(cdf_max(-1.0, 1e-12).is_err());
        assert!(cdf_max(1.0, 0.0).is_err());
        assert!(quantile_max(1.0, 1e-12).is_err());
        assert!(moment_max(0.0, 1e-10).is_err());
    }

    #[test]
    fn first_moment() {
        let m = moment_max(1.0, 1e-10).unwrap();
        assert!((m - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn second_moment() {
        // E M² = π²/6
        let m = moment_max(2.0, 1e-10).unwrap();
        assert!((m * m - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-9);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}
