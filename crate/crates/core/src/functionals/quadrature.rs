//! Quadrature for the double-integral functionals.
//!
//! All double integrals have the form `∬_{s<t} k(t-s) F(f; s, t) ds dt` with a
//! power kernel `k(d) = d^p` and `F` either the interval minimum `m(f; s, t)`
//! or the bracket `f(s) + f(t) - 2m(f; s, t)`. Off-diagonal cell pairs use the
//! exact cell integral of the kernel times `F` at the cell midpoints; the
//! diagonal half-cells, where `f` is linear, are integrated exactly.
//!
//! The kernel weight of a cell pair depends only on the offset `j - i`, so
//! `Σ_{i<j} ω_{j-i} m_{ij}` is evaluated in O(n) from the monotone-stack extents
//! of the interleaved sequence `(mid₀, v₁, mid₁, v₂, …, mid_{n-1})` and double
//! prefix sums of the weights. Everything is computed in grid units (`h = 1`)
//! and rescaled by `h^{p+2}` at the end.

use crate::rmq::min_extents;

/// Below this offset the weights are taken as exact second differences;
/// above it, as a Taylor series, which avoids cancellation.
const TAYLOR_FROM: usize = 16;

/// `G(x) = x^{q+2} / ((q+1)(q+2))`, a second antiderivative of `x^q`.
fn second_antiderivative(q: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.powf(q + 2.0) / ((q + 1.0) * (q + 2.0))
    }
}

/// `G(k+1) - 2G(k) + G(k-1)` for `G'' = x^q`, `k ≥ 1`.
///
/// This is both the integral of `(t - s)^q` over a unit cell pair at offset
/// `k` and the integral of `x^q` against the unit hat function centred at `k`.
pub(crate) fn second_difference(q: f64, k: usize) -> f64 {
    debug_assert!(k >= 1);
    if k < TAYLOR_FROM {
        let x = k as f64;
        second_antiderivative(q, x + 1.0) - 2.0 * second_antiderivative(q, x)
            + second_antiderivative(q, x - 1.0)
    } else {
        // G(k±1) expanded: Σ 2 G^{(2m)}(k) / (2m)!
        let x = k as f64;
        let inv2 = 1.0 / (x * x);
        let c1 = q * (q - 1.0) / 12.0;
        let c2 = c1 * (q - 2.0) * (q - 3.0) / 30.0;
        let c3 = c2 * (q - 4.0) * (q - 5.0) / 56.0;
        x.powf(q) * (1.0 + inv2 * (c1 + inv2 * (c2 + inv2 * c3)))
    }
}

/// Offset weights of the kernel `d^p` with their first and second prefix sums.
#[derive(Clone, Debug)]
pub(crate) struct KernelTable {
    p: f64,
    n: usize,
    /// `cum[k] = Σ_{m<k} ω_m`, `k = 0..=n`, with `ω_0 = 0`.
    cum: Vec<f64>,
    /// `cum2[k] = Σ_{m<k} cum[m]`, `k = 0..=n+1`.
    cum2: Vec<f64>,
}

impl KernelTable {
    pub(crate) fn new(p: f64, n: usize) -> Self {
        let mut cum = vec![0.0; n + 1];
        for k in 1..n {
            cum[k + 1] = cum[k] + second_difference(p, k);
        }
        let mut cum2 = vec![0.0; n + 2];
        for k in 0..=n {
            cum2[k + 1] = cum2[k] + cum[k];
        }
        Self { p, n, cum, cum2 }
    }

    /// `Σ_{i=i0}^{i1} Σ_{j=j0}^{j1} ω_{j-i}` for `j0 ≥ i1`.
    fn rect(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> f64 {
        let d = &self.cum2;
        (d[j1 - i0 + 2] - d[j1 - i1 + 1]) - (d[j0 - i0 + 1] - d[j0 - i1])
    }

    fn scale(&self) -> f64 {
        (self.n as f64).powf(-(self.p + 2.0))
    }

    /// Exact integral of `(t - s)^p` over a diagonal half-cell, grid units.
    fn diag_mass(&self) -> f64 {
        1.0 / ((self.p + 1.0) * (self.p + 2.0))
    }

    /// Exact integral of `(t - s)^{p+1}` over a diagonal half-cell, grid units.
    fn diag_first_moment(&self) -> f64 {
        1.0 / ((self.p + 2.0) * (self.p + 3.0))
    }
}

fn midpoints(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// `Σ_{i<j} ω_{j-i} m(f; midᵢ, midⱼ)` in grid units, accumulating the
/// (leftmost-minimum) subgradient times `weight` into `grad`.
fn offdiag_min_sum(table: &KernelTable, v: &[f64], weight: f64, grad: &mut [f64]) -> f64 {
    let n = v.len() - 1;
    let mut seq = Vec::with_capacity(2 * n - 1);
    for i in 0..n {
        seq.push(0.5 * (v[i] + v[i + 1]));
        if i + 1 < n {
            seq.push(v[i + 1]);
        }
    }
    let mut total = 0.0;
    for (q, &(left, right)) in min_extents(&seq).iter().enumerate() {
        let i0 = left.div_ceil(2);
        let i1 = q / 2;
        let j0 = q.div_ceil(2);
        let j1 = right / 2;
        if i0 > i1 || j0 > j1 {
            continue;
        }
        let c = table.rect(i0, i1, j0, j1);
        total += c * seq[q];
        let g = weight * c;
        if q % 2 == 0 {
            grad[q / 2] += 0.5 * g;
            grad[q / 2 + 1] += 0.5 * g;
        } else {
            grad[q.div_ceil(2)] += g;
        }
    }
    total
}

fn add_abs_increments(v: &[f64], coef: f64, grad: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..v.len() - 1 {
        let d = v[i + 1] - v[i];
        total += d.abs();
        let s = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        grad[i + 1] += coef * s;
        grad[i] -= coef * s;
    }
    total
}

/// `factor · ∬_{s<t} (t-s)^p m(f; s, t) ds dt`, requires `p > -1`.
pub(crate) fn min_kernel(p: f64, factor: f64, v: &[f64], grad: &mut [f64]) -> f64 {
    let n = v.len() - 1;
    let table = KernelTable::new(p, n);
    let w = factor * table.scale();

    let mut total = offdiag_min_sum(&table, v, w, grad);

    let dm = table.diag_mass();
    let ds = 0.5 * table.diag_first_moment();
    let mids = midpoints(v);
    for (i, m) in mids.iter().enumerate() {
        total += dm * m;
        grad[i] += 0.5 * w * dm;
        grad[i + 1] += 0.5 * w * dm;
    }
    total -= ds * add_abs_increments(v, -w * ds, grad);
    w * total
}

/// `factor · ∬_{s<t} (t-s)^p [f(s) + f(t) - 2m(f; s, t)] ds dt`, requires `p > -2`.
pub(crate) fn bracket_kernel(p: f64, factor: f64, v: &[f64], grad: &mut [f64]) -> f64 {
    let n = v.len() - 1;
    let table = KernelTable::new(p, n);
    let w = factor * table.scale();

    let mut total = -2.0 * offdiag_min_sum(&table, v, -2.0 * w, grad);

    let mids = midpoints(v);
    for (i, m) in mids.iter().enumerate() {
        let e = table.cum[n - i] + table.cum[i + 1];
        total += e * m;
        grad[i] += 0.5 * w * e;
        grad[i + 1] += 0.5 * w * e;
    }
    let ds = table.diag_first_moment();
    total += ds * add_abs_increments(v, w * ds, grad);
    w * total
}

/// `α ∫₀¹ [t^{α-1} + (1-t)^{α-1}] f(t) dt`, exact for the interpolant.
pub(crate) fn endpoint_weighted_integral(alpha: f64, v: &[f64], grad: &mut [f64]) -> f64 {
    let n = v.len() - 1;
    let q = alpha - 1.0;
    // hat integrals of x^q in grid units, including the two half hats
    let mut hat = vec![0.0; n + 1];
    hat[0] = second_antiderivative(q, 1.0);
    for (k, h) in hat.iter_mut().enumerate().take(n).skip(1) {
        *h = second_difference(q, k);
    }
    let x = n as f64;
    hat[n] = x.powf(q + 1.0) / (q + 1.0) - second_antiderivative(q, x)
        + second_antiderivative(q, x - 1.0);

    let scale = alpha * (n as f64).powf(-alpha);
    let mut total = 0.0;
    for k in 0..=n {
        let c = scale * (hat[k] + hat[n - k]);
        total += c * v[k];
        grad[k] += c;
    }
    total
}
