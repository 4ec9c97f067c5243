//! The tail constant `γ = max{Φ(f) : f ∈ K_ex}`.
//!
//! Three routes:
//!
//! * [`gamma_closed_form`]: `γ = (½∫₀^{1/2} h²)^{1/2}` from the one-dimensional
//!   profile `h`. Equals the maximum over all of `K_ex` when the functional is
//!   symmetric, monotone and concave; otherwise only the maximum over the
//!   symmetric unimodal paths.
//! * [`gamma_numeric`]: multi-start projected ascent on the discretized unit
//!   sphere of the Dirichlet energy.
//! * [`gamma_bounds`]: the analytic brackets for ζ and `W_α`, `α < 1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{eval, eval_with_gradient, lemma2_profile, FunctionalId, FunctionalSpec};
use crate::grid_path::{
    make_path, project_to_sphere, random_kex_path, symmetrize, unimodal_rearrange, GridPath,
    ProfileKind,
};

/// Grid used for closed-form maximizers.
pub const CLOSED_FORM_GRID: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Numeric,
    Bounds,
}

/// Which maximum a result speaks about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// The maximum over all of `K_ex`.
    Kex,
    /// The maximum over symmetric unimodal paths only; a lower bound for `γ`.
    KsuOnly,
    /// The value of an explicit feasible path; a lower bound for `γ`.
    Witness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    Stalled,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaResult {
    pub spec: FunctionalSpec,
    /// Absent for bound-only results.
    pub gamma: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    pub method: Method,
    pub scope: Scope,
    pub maximizer: Option<GridPath>,
    pub iterations: usize,
    pub converged: bool,
}

impl GammaResult {
    fn point(spec: FunctionalSpec, gamma: f64, method: Method, scope: Scope) -> Self {
        Self {
            spec,
            gamma: Some(gamma),
            lo: gamma,
            hi: gamma,
            method,
            scope,
            maximizer: None,
            iterations: 0,
            converged: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub n: usize,
    pub step0: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub tol_grad: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 256,
            step0: 1.0,
            max_iters: 20_000,
            restarts: 5,
            seed: 0,
            tol_grad: 1e-7,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::Parameter(format!("solver grid needs n >= 8, got {}", self.n)));
        }
        if self.restarts < 1 {
            return Err(Error::Parameter("solver needs at least one restart".into()));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return Err(Error::Parameter(format!("step0 must be positive, got {}", self.step0)));
        }
        if !(self.tol_grad >= 0.0) {
            return Err(Error::Parameter(format!("tol_grad must be >= 0, got {}", self.tol_grad)));
        }
        Ok(())
    }
}

/// `γ` from the profile, with the reflected maximizer on [`CLOSED_FORM_GRID`].
pub fn gamma_closed_form(spec: &FunctionalSpec) -> Result<GammaResult> {
    gamma_closed_form_on(spec, CLOSED_FORM_GRID)
}

pub fn gamma_closed_form_on(spec: &FunctionalSpec, n: usize) -> Result<GammaResult> {
    let profile = lemma2_profile(spec);
    if !profile.applicable() {
        return Err(Error::Precondition(format!(
            "{spec} has no one-dimensional profile; see gamma_closed_form_max"
        )));
    }
    let gamma = (0.5 * profile.half_l2_sq()).sqrt();
    let scope = if spec.symmetric() && spec.monotone() && spec.concave() {
        Scope::Kex
    } else {
        Scope::KsuOnly
    };
    // f' = h / (2γ) on [0, 1/2], reflected
    let maximizer = GridPath::from_fn(n, |t| {
        let s = t.min(1.0 - t).max(0.0);
        profile.integral(0.0, s) / (2.0 * gamma)
    })?;
    let mut out = GammaResult::point(*spec, gamma, Method::ClosedForm, scope);
    out.maximizer = Some(maximizer);
    Ok(out)
}

/// `γ = 1/2` for the maximum, attained by the tent.
pub fn gamma_closed_form_max(n: usize) -> Result<GammaResult> {
    let mut out = GammaResult::point(FunctionalSpec::max(), 0.5, Method::ClosedForm, Scope::Kex);
    out.maximizer = Some(make_path(&ProfileKind::Tent, n)?);
    Ok(out)
}

/// `2/√30`: the Cauchy–Schwarz bound `2‖f'‖₂ (∫₀¹ u²(1-u)² du)^{1/2}`, with the
/// weight integral expanded.
pub fn gamma_upper_bound_zeta() -> f64 {
    // u² - 2u³ + u⁴
    let weight: f64 = 1.0 / 3.0 - 2.0 / 4.0 + 1.0 / 5.0;
    2.0 * weight.sqrt()
}

/// `ψ(α) = 8/(2α+1) (1 - 2^{-2α-1}) - 8/(α+1) (1 - 2^{-α-1}) + 1`.
pub fn psi_walpha(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.5 && alpha <= 1.0) {
        return Err(Error::Domain(format!("ψ(α) needs 1/2 <= α <= 1, got {alpha}")));
    }
    let a = alpha;
    Ok(8.0 / (2.0 * a + 1.0) * (1.0 - (-2.0 * a - 1.0).exp2())
        - 8.0 / (a + 1.0) * (1.0 - (-a - 1.0).exp2())
        + 1.0)
}

/// `ψ(α)^{1/2}`, an upper bound for `γ(W_α)`.
pub fn gamma_upper_bound_walpha(alpha: f64) -> Result<f64> {
    Ok(psi_walpha(alpha)?.sqrt())
}

/// Analytic bracket `[lo, hi]` for the functionals whose `γ` is open.
pub fn gamma_bounds(spec: &FunctionalSpec) -> Result<GammaResult> {
    let (lo, hi) = match (spec.id(), spec.alpha()) {
        (FunctionalId::Zeta, _) => (
            gamma_closed_form_on(spec, 8)?.gamma.expect("closed form has a value"),
            gamma_upper_bound_zeta(),
        ),
        (FunctionalId::WAlpha, Some(a)) if a < 1.0 => {
            ((2.0 * a + 1.0).sqrt().recip(), gamma_upper_bound_walpha(a)?)
        }
        _ => {
            return Err(Error::Precondition(format!(
                "no analytic bounds for {spec}; its γ has a closed form"
            )))
        }
    };
    Ok(GammaResult {
        spec: *spec,
        gamma: None,
        lo,
        hi,
        method: Method::Bounds,
        scope: Scope::Kex,
        maximizer: None,
        iterations: 0,
        converged: true,
    })
}

/// A reference scale for `γ`: the exact value where one is known, otherwise
/// the analytic upper bound.
pub fn gamma_reference(spec: &FunctionalSpec) -> f64 {
    match (spec.id(), spec.alpha()) {
        (FunctionalId::Max, _) => 0.5,
        (FunctionalId::Zeta, _) => gamma_upper_bound_zeta(),
        (FunctionalId::WAlpha, Some(a)) if a < 1.0 => {
            gamma_upper_bound_walpha(a).expect("alpha in (1/2, 1)")
        }
        _ => (0.5 * lemma2_profile(spec).half_l2_sq()).sqrt(),
    }
}

/// Outcome of a single ascent.
#[derive(Clone, Debug)]
pub struct AscentRun {
    pub value: f64,
    pub path: GridPath,
    pub iterations: usize,
    pub stop: StopReason,
}

/// Multi-start projected ascent; returns the best restart.
pub fn gamma_numeric(spec: &FunctionalSpec, cfg: &SolverConfig) -> Result<GammaResult> {
    let runs = numeric_restarts(spec, cfg)?;
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one restart");
    let scope = if spec.concave() { Scope::Kex } else { Scope::Witness };
    Ok(GammaResult {
        spec: *spec,
        gamma: Some(best.value),
        lo: best.value,
        hi: best.value,
        method: Method::Numeric,
        scope,
        maximizer: Some(best.path),
        iterations: best.iterations,
        converged: best.stop != StopReason::MaxIterations,
    })
}

/// Every restart of [`gamma_numeric`], in restart order.
pub fn numeric_restarts(spec: &FunctionalSpec, cfg: &SolverConfig) -> Result<Vec<AscentRun>> {
    cfg.validate()?;
    (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let start = initial_path(k, cfg)?;
            Ok(ascend(spec, start, cfg))
        })
        .collect()
}

fn initial_path(k: usize, cfg: &SolverConfig) -> Result<GridPath> {
    match k {
        0 => make_path(&ProfileKind::Tent, cfg.n),
        1 => make_path(&ProfileKind::Parabola, cfg.n),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            Ok(random_kex_path(cfg.n, &mut rng))
        }
    }
}

/// Solves `n·T r = g` on the free interior nodes with `T = tridiag(-1, 2, -1)`
/// and `r = 0` on the boundary and on pinned nodes: the representer of `g` in
/// the Dirichlet inner product `⟨a, b⟩ = n Σ Δaᵢ Δbᵢ` restricted to paths that
/// vanish where `pinned` is set.
fn riesz(g: &[f64], pinned: &[bool]) -> Vec<f64> {
    let n = g.len() - 1;
    let mut r = vec![0.0; n + 1];
    if n < 2 {
        return r;
    }
    let nf = n as f64;
    let free = |i: usize| i > 0 && i < n && !pinned[i];
    // forward sweep of the Thomas algorithm; pinned rows read `r_i = 0`
    let mut c = vec![0.0; n + 1];
    let mut d = vec![0.0; n + 1];
    for i in 1..n {
        if !free(i) {
            continue;
        }
        let (cp, dp) = if free(i - 1) { (c[i - 1], d[i - 1]) } else { (0.0, 0.0) };
        let den = 2.0 + cp;
        c[i] = -1.0 / den;
        d[i] = (g[i] / nf + dp) / den;
    }
    for i in (1..n).rev() {
        if free(i) {
            r[i] = d[i] - c[i] * r[i + 1];
        }
    }
    r
}

fn interior_dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    (1..n).map(|i| a[i] * b[i]).sum()
}

/// Projected ascent from `start` along the Dirichlet gradient, tangent to the
/// unit sphere, with a doubling/halving step.
pub fn ascend(spec: &FunctionalSpec, start: GridPath, cfg: &SolverConfig) -> AscentRun {
    const MAX_STEP: f64 = 1e6;
    const MIN_STEP: f64 = 1e-12;
    const PROGRESS_WINDOW: usize = 100;
    const PROGRESS_TOL: f64 = 1e-11;

    let mut f = project_to_sphere(start.into_values())
        .unwrap_or_else(|| make_path(&ProfileKind::Tent, cfg.n).expect("n >= 8"));
    let (mut value, mut grad) = eval_with_gradient(spec, &f);
    let mut tau = cfg.step0;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut window_start = value;

    while iterations < cfg.max_iters {
        iterations += 1;
        if iterations % PROGRESS_WINDOW == 0 {
            if value - window_start <= PROGRESS_TOL * value.abs().max(1e-300) {
                stop = StopReason::Stalled;
                break;
            }
            window_start = value;
        }
        // zero nodes that the gradient pushes down stay at zero
        let pinned: Vec<bool> = f
            .values()
            .iter()
            .zip(&grad)
            .map(|(&v, &g)| v <= 0.0 && g < 0.0)
            .collect();
        let r = riesz(&grad, &pinned);
        let rr = interior_dot(&grad, &r);
        let rf = interior_dot(&grad, f.values());
        let tnorm = (rr - rf * rf).max(0.0).sqrt();
        if tnorm < cfg.tol_grad {
            stop = StopReason::GradientTolerance;
            break;
        }
        let dir: Vec<f64> = r
            .iter()
            .zip(f.values())
            .map(|(ri, fi)| (ri - rf * fi) / tnorm)
            .collect();

        loop {
            let trial: Vec<f64> = f.values().iter().zip(&dir).map(|(a, b)| a + tau * b).collect();
            if let Some(p) = project_to_sphere(trial) {
                let (v, g) = eval_with_gradient(spec, &p);
                if v > value {
                    f = p;
                    value = v;
                    grad = g;
                    tau = (2.0 * tau).min(MAX_STEP);
                    break;
                }
            }
            tau *= 0.5;
            if tau < MIN_STEP {
                break;
            }
        }
        if tau < MIN_STEP {
            stop = StopReason::Stalled;
            break;
        }
    }
    AscentRun {
        value: eval(spec, &f),
        path: f,
        iterations,
        stop,
    }
}

/// Symmetrization and/or unimodal rearrangement, as licensed by the flags of
/// `spec`; neither step lowers `Φ` for such specs.
pub fn lemma1_reduce(spec: &FunctionalSpec, p: &GridPath) -> Result<GridPath> {
    if !spec.symmetric() {
        return Err(Error::Unlicensed(format!(
            "{spec} is not symmetric; no reduction step is licensed"
        )));
    }
    if !spec.concave() && !spec.monotone() {
        return Err(Error::Unlicensed(format!(
            "{spec} is neither concave nor monotone: symmetrization needs concavity, \
             rearrangement needs monotonicity"
        )));
    }
    let mut out = p.clone();
    if spec.concave() {
        out = symmetrize(&out);
    }
    if spec.monotone() {
        out = unimodal_rearrange(&out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_path::h_norm_sq;

    #[test]
    fn riesz_inverts_the_energy_form() {
        let g = [0.0, 1.0, -2.0, 0.5, 3.0, 0.0];
        let r = riesz(&g, &[false; 6]);
        let n = 5.0;
        for i in 1..5 {
            let lhs = n * (2.0 * r[i] - r[i - 1] - r[i + 1]);
            assert!((lhs - g[i]).abs() < 1e-12);
        }
        assert_eq!(r[0], 0.0);
        assert_eq!(r[5], 0.0);

        let pinned = [false, false, true, false, false, false];
        let r = riesz(&g, &pinned);
        assert_eq!(r[2], 0.0);
        for i in [1, 3, 4] {
            let lhs = n * (2.0 * r[i] - r[i - 1] - r[i + 1]);
            assert!((lhs - g[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_examples() {
        let area = gamma_closed_form(&FunctionalSpec::area()).unwrap();
        assert!((area.gamma.unwrap() - 12f64.sqrt().recip()).abs() < 1e-12);
        assert_eq!(area.scope, Scope::Kex);
        let zeta = gamma_closed_form(&FunctionalSpec::zeta()).unwrap();
        assert!((zeta.gamma.unwrap() - 30f64.sqrt().recip()).abs() < 1e-12);
        assert_eq!(zeta.scope, Scope::KsuOnly);
        assert!(gamma_closed_form(&FunctionalSpec::max()).is_err());
    }

    #[test]
    fn closed_form_maximizer_is_the_parabola_for_area() {
        let res = gamma_closed_form(&FunctionalSpec::area()).unwrap();
        let m = res.maximizer.unwrap();
        let parab = make_path(&ProfileKind::Parabola, CLOSED_FORM_GRID).unwrap();
        assert!(m.sup_distance(&parab) < 1e-12);
        assert!(h_norm_sq(&m) <= 1.0);
    }

    #[test]
    fn psi_examples() {
        assert!((psi_walpha(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let v = 2.0 * psi_walpha(0.5).unwrap();
        assert!((v - 8.0 * (2f64.sqrt() - 1.0) / 3.0).abs() < 1e-14);
        assert!(psi_walpha(1.1).is_err());
        assert!((gamma_upper_bound_zeta() - 2.0 / 30f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bounds_only_for_open_cases() {
        let b = gamma_bounds(&FunctionalSpec::zeta()).unwrap();
        assert!(b.gamma.is_none() && b.lo < b.hi);
        assert!(gamma_bounds(&FunctionalSpec::walpha(0.75).unwrap()).is_ok());
        assert!(gamma_bounds(&FunctionalSpec::eta()).is_err());
        assert!(gamma_bounds(&FunctionalSpec::walpha(1.0).unwrap()).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig { n: 4, ..Default::default() };
        assert!(gamma_numeric(&FunctionalSpec::area(), &cfg).is_err());
        cfg.n = 16;
        cfg.restarts = 0;
        assert!(gamma_numeric(&FunctionalSpec::area(), &cfg).is_err());
    }

    #[test]
    fn reduce_flags() {
        let p = GridPath::new(vec![0.0, 0.2, 0.0, 0.3, 0.1, 0.0]).unwrap();
        assert!(lemma1_reduce(&FunctionalSpec::zeta(), &p).is_err());
        let r = lemma1_reduce(&FunctionalSpec::max(), &p).unwrap();
        assert!(eval(&FunctionalSpec::max(), &r) >= eval(&FunctionalSpec::max(), &p));
    }
}
