//! Monte Carlo excursions on a grid and estimators for `X = Φ(B_ex)`.
//!
//! Two constructions:
//!
//! * `bessel_bridge_norm`: the Euclidean norm of a three-dimensional Brownian
//!   bridge.
//! * `vervaat`: a one-dimensional bridge read cyclically from its minimum.
//!
//! Sample `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so results
//! do not depend on how the work is split across threads.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{eval, FunctionalSpec};
use crate::grid_path::GridPath;
use crate::variational::gamma_reference;

/// Moments of order above this are flagged unreliable.
pub const MOMENT_RELIABLE_MAX: u32 = 20;
/// MGF arguments with `tγ` above this are flagged unreliable.
pub const MGF_RELIABLE_MAX: f64 = 3.0;
/// Tail probabilities below this are out of reach of plain sampling.
pub const TAIL_RESOLUTION: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    BesselBridgeNorm,
    Vervaat,
}

impl Sampler {
    pub fn name(self) -> &'static str {
        match self {
            Sampler::BesselBridgeNorm => "bessel_bridge_norm",
            Sampler::Vervaat => "vervaat",
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bessel_bridge_norm" | "bessel" => Ok(Sampler::BesselBridgeNorm),
            "vervaat" => Ok(Sampler::Vervaat),
            other => Err(Error::Unknown {
                what: "sampler",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McConfig {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub sampler: Sampler,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Parameter(format!("excursion grid needs n >= 2, got {}", self.n)));
        }
        if self.samples < 1 {
            return Err(Error::Parameter("need at least one sample".into()));
        }
        Ok(())
    }
}

/// The generator for sample `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `d` independent Brownian bridges on `{i/n}`, both ends exactly zero.
pub fn sample_bridge<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<GridPath> {
    assert!(n >= 1, "bridge grid needs n >= 1");
    (0..d).map(|_| GridPath::from_parts_unchecked(bridge_values(n, rng))).collect()
}

fn bridge_values<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let sd = (n as f64).recip().sqrt();
    let mut w = Vec::with_capacity(n + 1);
    w.push(0.0);
    let mut acc = 0.0;
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        acc += sd * z;
        w.push(acc);
    }
    let end = w[n];
    let nf = n as f64;
    for (i, v) in w.iter_mut().enumerate() {
        *v -= i as f64 / nf * end;
    }
    w[0] = 0.0;
    w[n] = 0.0;
    w
}

/// One excursion path from `rng`.
pub fn sample_excursion<R: Rng + ?Sized>(n: usize, sampler: Sampler, rng: &mut R) -> GridPath {
    assert!(n >= 1, "excursion grid needs n >= 1");
    let values = match sampler {
        Sampler::BesselBridgeNorm => {
            let mut sq = vec![0.0; n + 1];
            for _ in 0..3 {
                for (s, b) in sq.iter_mut().zip(bridge_values(n, rng)) {
                    *s += b * b;
                }
            }
            let mut v: Vec<f64> = sq.into_iter().map(f64::sqrt).collect();
            v[0] = 0.0;
            v[n] = 0.0;
            v
        }
        Sampler::Vervaat => {
            let b = bridge_values(n, rng);
            let mut k = 0;
            for i in 1..n {
                if b[i] < b[k] {
                    k = i;
                }
            }
            let mut v: Vec<f64> = (0..=n).map(|i| b[(k + i) % n] - b[k]).collect();
            v[0] = 0.0;
            v[n] = 0.0;
            v
        }
    };
    GridPath::from_parts_unchecked(values)
}

/// The Vervaat sampler draws from streams with the top bit set, so the two
/// samplers never share random numbers under one seed.
const VERVAAT_STREAMS: u64 = 1 << 63;

/// The excursion for sample `index` under `cfg`.
pub fn sample_indexed(cfg: &McConfig, index: u64) -> GridPath {
    let stream = match cfg.sampler {
        Sampler::BesselBridgeNorm => index,
        Sampler::Vervaat => index | VERVAAT_STREAMS,
    };
    let mut rng = sample_rng(cfg.seed, stream);
    sample_excursion(cfg.n, cfg.sampler, &mut rng)
}

/// `Φ(B_ex)` for every spec and every sample; `out[j][i]` is spec `j` on
/// sample `i`.
pub fn collect_values(cfg: &McConfig, specs: &[FunctionalSpec]) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let rows: Vec<Vec<f64>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let p = sample_indexed(cfg, i);
            specs.iter().map(|s| eval(s, &p)).collect()
        })
        .collect();
    let mut out = vec![Vec::with_capacity(cfg.samples); specs.len()];
    for row in rows {
        for (col, v) in out.iter_mut().zip(row) {
            col.push(v);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    pub x: f64,
    pub p_hat: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// 95% Wilson score interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `-ln p̂ / (x² / (2γ²))`, when `γ` is supplied and `p̂` is resolved.
    pub log_tail_ratio: Option<f64>,
    pub below_resolution: bool,
}

/// `P(X > x)` from precomputed values of `X`.
pub fn tail_from_values(values: &[f64], x: f64, gamma: Option<f64>) -> Result<TailEstimate> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("tail threshold must be finite and >= 0, got {x}")));
    }
    if values.is_empty() {
        return Err(Error::Parameter("no samples".into()));
    }
    let n = values.len();
    let hits = values.iter().filter(|&&v| v > x).count();
    let nf = n as f64;
    let p = hits as f64 / nf;
    let stderr = (p * (1.0 - p) / nf).sqrt();

    let z = 1.959_963_984_540_054_f64;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = z / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();

    let below_resolution = hits == 0 || p < TAIL_RESOLUTION;
    let log_tail_ratio = match gamma {
        Some(g) if hits > 0 && x > 0.0 => Some(-p.ln() / (x * x / (2.0 * g * g))),
        _ => None,
    };
    Ok(TailEstimate {
        x,
        p_hat: p,
        stderr,
        n_samples: n,
        ci_lo: (centre - half).max(0.0),
        ci_hi: (centre + half).min(1.0),
        log_tail_ratio,
        below_resolution,
    })
}

pub fn estimate_tail(
    spec: &FunctionalSpec,
    x: f64,
    cfg: &McConfig,
    gamma: Option<f64>,
) -> Result<TailEstimate> {
    let values = collect_values(cfg, std::slice::from_ref(spec))?.remove(0);
    tail_from_values(&values, x, gamma)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MgfEstimate {
    pub t: f64,
    /// `E e^{tX}`; may be infinite where `ln_value` is not.
    pub value: f64,
    pub ln_value: f64,
    pub stderr: f64,
    pub reliable: bool,
}

/// `E e^{tX}` by log-sum-exp. Reliable while `|t|γ ≤ 3`.
pub fn mgf_from_values(values: &[f64], t: f64, gamma: f64) -> Result<MgfEstimate> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("MGF argument must be finite, got {t}")));
    }
    if values.is_empty() {
        return Err(Error::Parameter("no samples".into()));
    }
    let nf = values.len() as f64;
    let reliable = t.abs() * gamma <= MGF_RELIABLE_MAX;
    if t == 0.0 {
        return Ok(MgfEstimate {
            t,
            value: 1.0,
            ln_value: 0.0,
            stderr: 0.0,
            reliable,
        });
    }
    let m = values.iter().map(|v| t * v).fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = values.iter().map(|v| (t * v - m).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / nf;
    let var = if values.len() > 1 {
        scaled.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    let ln_value = m + mean.ln();
    Ok(MgfEstimate {
        t,
        value: ln_value.exp(),
        ln_value,
        stderr: m.exp() * (var / nf).sqrt(),
        reliable,
    })
}

pub fn estimate_mgf(spec: &FunctionalSpec, t: f64, cfg: &McConfig) -> Result<MgfEstimate> {
    let values = collect_values(cfg, std::slice::from_ref(spec))?.remove(0);
    mgf_from_values(&values, t, gamma_reference(spec))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub r: u32,
    /// `(E X^r)^{1/r}`.
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub stderr: f64,
    pub reliable: bool,
}

pub fn moment_from_values(values: &[f64], r: u32) -> Result<MomentEstimate> {
    if r < 1 {
        return Err(Error::Domain("moment order must be >= 1".into()));
    }
    if values.is_empty() {
        return Err(Error::Parameter("no samples".into()));
    }
    let nf = values.len() as f64;
    let pows: Vec<f64> = values.iter().map(|v| v.powi(r as i32)).collect();
    let mean = pows.iter().sum::<f64>() / nf;
    let var = if values.len() > 1 {
        pows.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    let rf = f64::from(r);
    let value = mean.powf(1.0 / rf);
    let stderr = if mean > 0.0 {
        value * (var / nf).sqrt() / (rf * mean)
    } else {
        0.0
    };
    Ok(MomentEstimate {
        r,
        value,
        stderr,
        reliable: r <= MOMENT_RELIABLE_MAX,
    })
}

pub fn estimate_moment(spec: &FunctionalSpec, r: u32, cfg: &McConfig) -> Result<MomentEstimate> {
    let values = collect_values(cfg, std::slice::from_ref(spec))?.remove(0);
    moment_from_values(&values, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_path::check_kex;

    #[test]
    fn sampler_names_round_trip() {
        for s in [Sampler::BesselBridgeNorm, Sampler::Vervaat] {
            assert_eq!(s.name().parse::<Sampler>().unwrap(), s);
        }
        assert!("brownian".parse::<Sampler>().is_err());
    }

    #[test]
    fn paths_are_excursions() {
        for sampler in [Sampler::BesselBridgeNorm, Sampler::Vervaat] {
            let cfg = McConfig { n: 64, samples: 1, seed: 3, sampler };
            for i in 0..50 {
                let p = sample_indexed(&cfg, i);
                let r = check_kex(&p, 0.0);
                assert!(r.is_nonneg && r.boundary_ok);
            }
        }
    }

    #[test]
    fn bridge_ends_are_zero() {
        let mut rng = sample_rng(1, 0);
        for b in sample_bridge(10, 3, &mut rng) {
            assert_eq!(b.values()[0], 0.0);
            assert_eq!(b.values()[10], 0.0);
        }
    }

    #[test]
    fn tail_counts() {
        let v = [0.5, 1.5, 2.5, 3.5];
        let t = tail_from_values(&v, 2.0, Some(0.5)).unwrap();
        assert_eq!(t.p_hat, 0.5);
        assert_eq!(t.stderr, (0.25f64 / 4.0).sqrt());
        assert!(t.ci_lo < 0.5 && t.ci_hi > 0.5);
        assert!((t.log_tail_ratio.unwrap() - 2f64.ln() / 8.0).abs() < 1e-15);
        let none = tail_from_values(&v, 10.0, Some(0.5)).unwrap();
        assert!(none.below_resolution && none.log_tail_ratio.is_none());
        assert_eq!(tail_from_values(&v, 0.0, None).unwrap().p_hat, 1.0);
    }

    #[test]
    fn mgf_handles_overflow() {
        let v = [400.0, 401.0];
        let m = mgf_from_values(&v, 2.0, 0.5).unwrap();
        assert!(m.value.is_infinite());
        let want = 800.0 + ((1.0 + 2f64.exp()) / 2.0).ln();
        assert!((m.ln_value - want).abs() < 1e-12);
        assert_eq!(mgf_from_values(&v, 0.0, 0.5).unwrap().value, 1.0);
    }

    #[test]
    fn moment_of_constant() {
        let m = moment_from_values(&[2.0; 10], 3).unwrap();
        assert!((m.value - 2.0).abs() < 1e-15);
        assert_eq!(m.stderr, 0.0);
        assert!(!moment_from_values(&[1.0], 21).unwrap().reliable);
    }
}
