//! Paths sampled on a uniform grid of `[0, 1]`.
//!
//! A [`GridPath`] with resolution `n` stores `f(i/n)` for `i = 0..=n` and stands
//! for the piecewise-linear interpolant of those values. Its derivative is
//! constant on each cell, so the Sobolev energy `∫|f'|²` of the interpolant is
//! computed exactly by [`h_norm_sq`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values of a path on the grid `i/n`, `i = 0..=n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath", into = "RawPath")]
pub struct GridPath {
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPath {
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<RawPath> for GridPath {
    type Error = Error;

    fn try_from(raw: RawPath) -> Result<Self> {
        if raw.values.len() != raw.n + 1 {
            return Err(Error::InvalidPath(format!(
                "n = {} but {} values given",
                raw.n,
                raw.values.len()
            )));
        }
        GridPath::new(raw.values)
    }
}

impl From<GridPath> for RawPath {
    fn from(p: GridPath) -> Self {
        RawPath {
            n: p.n,
            values: p.values,
        }
    }
}

impl GridPath {
    /// Wraps `values` (length `n + 1`, `n ≥ 1`). Only finiteness is enforced;
    /// the excursion constraints are reported by [`check_kex`].
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidPath(format!(
                "need at least 2 grid values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!("value at index {i} is not finite")));
        }
        Ok(Self {
            n: values.len() - 1,
            values,
        })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "grid resolution must be positive");
        Self {
            n,
            values: vec![0.0; n + 1],
        }
    }

    /// Samples `f` at `i/n`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPath("grid resolution must be positive".into()));
        }
        let nf = n as f64;
        Self::new((0..=n).map(|i| f(i as f64 / nf)).collect())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Grid spacing `1/n`.
    #[inline]
    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// The piecewise-linear interpolant at `t ∈ [0, 1]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = (t.clamp(0.0, 1.0)) * self.n as f64;
        let i = (x.floor() as usize).min(self.n - 1);
        let frac = x - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    /// Differences `values[i+1] - values[i]`, one per cell.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// The path `t ↦ f(1 - t)`.
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { n: self.n, values }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `max |f - g|` over grid points. Both paths must share the resolution.
    pub fn sup_distance(&self, other: &GridPath) -> f64 {
        assert_eq!(self.n, other.n, "grid resolutions differ");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn from_parts_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.len() >= 2);
        Self {
            n: values.len() - 1,
            values,
        }
    }
}

/// Dirichlet energy `∫₀¹ |f'(t)|² dt` of the interpolant: `n Σ (Δvᵢ)²`.
pub fn h_norm_sq(p: &GridPath) -> f64 {
    let n = p.n as f64;
    n * p.values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>()
}

/// Outcome of [`check_kex`], one flag per constraint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub h_norm_sq: f64,
    pub is_nonneg: bool,
    pub boundary_ok: bool,
    pub in_kex: bool,
}

/// Checks membership in the unit energy ball of nonnegative excursion paths,
/// each constraint up to `tol`.
pub fn check_kex(p: &GridPath, tol: f64) -> ConstraintReport {
    let tol = tol.max(0.0);
    let energy = h_norm_sq(p);
    let is_nonneg = p.values.iter().all(|&v| v >= -tol);
    let boundary_ok = p.values[0].abs() <= tol && p.values[p.n].abs() <= tol;
    ConstraintReport {
        h_norm_sq: energy,
        is_nonneg,
        boundary_ok,
        in_kex: energy <= 1.0 + tol && is_nonneg && boundary_ok,
    }
}

/// Hölder seminorm `max_{i<j} |vⱼ - vᵢ| / ((j-i)/n)^β` over grid pairs.
pub fn holder_seminorm(p: &GridPath, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Parameter(format!("Hölder exponent must lie in (0, 1], got {beta}")));
    }
    let n = p.n;
    let inv_den: Vec<f64> = (0..=n)
        .map(|d| if d == 0 { 0.0 } else { (d as f64 / n as f64).powf(-beta) })
        .collect();
    let v = &p.values;
    let mut best = 0.0_f64;
    for i in 0..n {
        for j in i + 1..=n {
            best = best.max((v[j] - v[i]).abs() * inv_den[j - i]);
        }
    }
    Ok(best)
}

/// `g(x) = ½(f(x) + f(1-x))`.
pub fn symmetrize(p: &GridPath) -> GridPath {
    let n = p.n;
    let values = (0..=n)
        .map(|i| 0.5 * (p.values[i] + p.values[n - i]))
        .collect();
    GridPath { n, values }
}

/// Unimodal rearrangement: the path climbs with the absolute slopes of `p`
/// up to the cell where the cumulative absolute variation first reaches half
/// of the total, and descends with them afterwards.
///
/// The rising part is built from prefix sums and the falling part from suffix
/// sums of `|Δvᵢ|`, so the result dominates `|p|` pointwise and vanishes at both
/// ends. When the half-variation point falls strictly inside a cell, that
/// cell's slope is shortened to close the path; the result is then scaled up
/// to restore the input energy exactly.
pub fn unimodal_rearrange(p: &GridPath) -> GridPath {
    let n = p.n;
    let mags: Vec<f64> = p.increments().iter().map(|d| d.abs()).collect();
    let total: f64 = mags.iter().sum();
    if total == 0.0 {
        return GridPath::zeros(n);
    }
    let half = 0.5 * total;

    // straddling cell: prefix mass before it < half <= prefix mass through it
    let mut before = 0.0;
    let mut split = n - 1;
    for (i, &m) in mags.iter().enumerate() {
        if before + m >= half {
            split = i;
            break;
        }
        before += m;
    }

    let mut values = vec![0.0; n + 1];
    for i in 0..split {
        values[i + 1] = values[i] + mags[i];
    }
    let mut suffix = 0.0;
    for i in (split + 1..n).rev() {
        suffix += mags[i];
        values[i] = suffix;
    }
    values[0] = 0.0;
    values[n] = 0.0;

    let mut g = GridPath { n, values };
    let target = h_norm_sq(p);
    let energy = h_norm_sq(&g);
    if energy > 0.0 && energy < target {
        g = g.scaled((target / energy).sqrt());
    }
    g
}

/// Named analytic profiles that can be sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileKind {
    /// `min(t, 1 - t)`: the maximizer for the maximum functional.
    Tent,
    /// `√3 t(1 - t)`: the maximizer for the area.
    Parabola,
    /// `(√5/6)(1 - |1 - 2t|³)`: the maximizer for η.
    EtaMax,
    /// `(√(2α+1) / (2(α+1)))(1 - |1 - 2t|^{α+1})`: the symmetric unimodal
    /// maximizer for `W_α`.
    WAlphaMax(f64),
    Custom(Vec<f64>),
}

impl ProfileKind {
    /// Parses a profile name. `alpha` is required for `walpha_max`.
    pub fn from_name(name: &str, alpha: Option<f64>) -> Result<Self> {
        match name {
            "tent" => Ok(Self::Tent),
            "parabola" => Ok(Self::Parabola),
            "eta_max" => Ok(Self::EtaMax),
            "walpha_max" => alpha
                .map(Self::WAlphaMax)
                .ok_or_else(|| Error::Parameter("walpha_max needs alpha".into())),
            other => Err(Error::Unknown {
                what: "profile",
                name: other.to_string(),
            }),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let u = (1.0 - 2.0 * t).abs();
        match self {
            Self::Tent => t.min(1.0 - t),
            Self::Parabola => 3f64.sqrt() * t * (1.0 - t),
            Self::EtaMax => 5f64.sqrt() / 6.0 * (1.0 - u.powi(3)),
            Self::WAlphaMax(a) => {
                (2.0 * a + 1.0).sqrt() / (2.0 * (a + 1.0)) * (1.0 - u.powf(a + 1.0))
            }
            Self::Custom(_) => unreachable!("custom profiles are not evaluated pointwise"),
        }
    }
}

/// Samples a named profile at `i/n`.
pub fn make_path(kind: &ProfileKind, n: usize) -> Result<GridPath> {
    if n < 2 {
        return Err(Error::Parameter(format!("profile grids need n >= 2, got {n}")));
    }
    match kind {
        ProfileKind::WAlphaMax(a) if !(*a > 0.5) => Err(Error::Parameter(format!(
            "walpha_max needs alpha > 1/2, got {a}"
        ))),
        ProfileKind::Custom(values) => {
            if values.len() != n + 1 {
                return Err(Error::InvalidPath(format!(
                    "custom profile has {} values, expected {}",
                    values.len(),
                    n + 1
                )));
            }
            GridPath::new(values.clone())
        }
        _ => {
            let mut p = GridPath::from_fn(n, |t| kind.eval(t))?;
            let last = p.n;
            p.values[0] = 0.0;
            p.values[last] = 0.0;
            Ok(p)
        }
    }
}

/// A random nonnegative piecewise-linear path through a handful of random
/// knots, rescaled to unit energy.
pub fn random_kex_path<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GridPath {
    assert!(n >= 2, "random paths need n >= 2");
    loop {
        let knots = rng.random_range(1..=12usize);
        let mut xs: Vec<f64> = (0..knots).map(|_| rng.random::<f64>()).collect();
        xs.sort_by(f64::total_cmp);
        let mut pts = Vec::with_capacity(knots + 2);
        pts.push((0.0, 0.0));
        for x in xs {
            // occasional exact zeros exercise the nonnegativity boundary
            let y = if rng.random::<f64>() < 0.1 { 0.0 } else { rng.random::<f64>() };
            pts.push((x, y));
        }
        pts.push((1.0, 0.0));

        let values: Vec<f64> = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let k = pts.partition_point(|&(x, _)| x <= t).clamp(1, pts.len() - 1);
                let (x0, y0) = pts[k - 1];
                let (x1, y1) = pts[k];
                if x1 > x0 {
                    y0 + (t - x0) / (x1 - x0) * (y1 - y0)
                } else {
                    y0
                }
            })
            .collect();
        let mut p = GridPath::from_parts_unchecked(values);
        p.values[0] = 0.0;
        p.values[n] = 0.0;
        let e = h_norm_sq(&p);
        if e > 1e-12 {
            return p.scaled(1.0 / e.sqrt());
        }
    }
}

/// Clips negatives, zeroes the boundary and rescales to unit energy.
/// Returns `None` for paths that collapse to zero.
pub(crate) fn project_to_sphere(mut values: Vec<f64>) -> Option<GridPath> {
    let n = values.len() - 1;
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    values[0] = 0.0;
    values[n] = 0.0;
    let p = GridPath::from_parts_unchecked(values);
    let e = h_norm_sq(&p);
    if !(e > 0.0) || !e.is_finite() {
        return None;
    }
    Some(p.scaled(1.0 / e.sqrt()))
}
