//! The functional catalog.
//!
//! | id      | `Φ(f)`                                                        |
//! |---------|---------------------------------------------------------------|
//! | `Max`   | `max f`                                                       |
//! | `Area`  | `∫₀¹ f`                                                       |
//! | `Xi`    | `2 ∫₀¹ f`                                                     |
//! | `Eta`   | `4 ∬_{s<t} m(f; s, t)`                                        |
//! | `Zeta`  | `2 ∬_{s<t} [f(s) + f(t) - 2m(f; s, t)]`                       |
//! | `WAlpha`| `2α(α-1) ∬ (t-s)^{α-2} m` for `α > 1`; for `1/2 < α ≤ 1` the     |
//! |         | endpoint-weighted form `α∫[t^{α-1}+(1-t)^{α-1}]f - α(α-1)∬(t-s)^{α-2}[f(s)+f(t)-2m]` |
//!
//! with `m(f; s, t) = min_{[s,t]} f`. Evaluation is exact for the
//! piecewise-linear interpolant except for the off-diagonal double-integral
//! cells, see [`quadrature`](self::quadrature).

mod profile;
mod quadrature;

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid_path::GridPath;
use crate::rmq::SparseTable;

pub use profile::{lemma2_profile, Lemma2Profile, PowerTerm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalId {
    Max,
    Area,
    Xi,
    Eta,
    Zeta,
    WAlpha,
}

impl FunctionalId {
    pub const ALL: [FunctionalId; 6] = [
        FunctionalId::Max,
        FunctionalId::Area,
        FunctionalId::Xi,
        FunctionalId::Eta,
        FunctionalId::Zeta,
        FunctionalId::WAlpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionalId::Max => "max",
            FunctionalId::Area => "area",
            FunctionalId::Xi => "xi",
            FunctionalId::Eta => "eta",
            FunctionalId::Zeta => "zeta",
            FunctionalId::WAlpha => "walpha",
        }
    }
}

impl FromStr for FunctionalId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionalId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Unknown {
                what: "functional",
                name: s.to_string(),
            })
    }
}

/// A functional from the catalog together with its parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionalSpec {
    id: FunctionalId,
    alpha: Option<f64>,
}

impl FunctionalSpec {
    /// `alpha` must be given for (and only for) `WAlpha`, with `α > 1/2`.
    pub fn new(id: FunctionalId, alpha: Option<f64>) -> Result<Self> {
        match (id, alpha) {
            (FunctionalId::WAlpha, Some(a)) if a > 0.5 && a.is_finite() => Ok(Self { id, alpha }),
            (FunctionalId::WAlpha, Some(a)) => Err(Error::Parameter(format!(
                "walpha needs alpha > 1/2, got {a}"
            ))),
            (FunctionalId::WAlpha, None) => Err(Error::Parameter("walpha needs alpha".into())),
            (_, Some(_)) => Err(Error::Parameter(format!(
                "{} takes no alpha parameter",
                id.name()
            ))),
            (_, None) => Ok(Self { id, alpha: None }),
        }
    }

    pub fn parse(name: &str, alpha: Option<f64>) -> Result<Self> {
        Self::new(name.parse()?, alpha)
    }

    pub fn max() -> Self {
        Self { id: FunctionalId::Max, alpha: None }
    }
    pub fn area() -> Self {
        Self { id: FunctionalId::Area, alpha: None }
    }
    pub fn xi() -> Self {
        Self { id: FunctionalId::Xi, alpha: None }
    }
    pub fn eta() -> Self {
        Self { id: FunctionalId::Eta, alpha: None }
    }
    pub fn zeta() -> Self {
        Self { id: FunctionalId::Zeta, alpha: None }
    }
    pub fn walpha(alpha: f64) -> Result<Self> {
        Self::new(FunctionalId::WAlpha, Some(alpha))
    }

    /// Every fixed-parameter member of the catalog.
    pub fn fixed() -> [FunctionalSpec; 5] {
        [Self::max(), Self::area(), Self::xi(), Self::eta(), Self::zeta()]
    }

    pub fn id(&self) -> FunctionalId {
        self.id
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// Invariant under `f(t) ↦ f(1 - t)`. True for the whole catalog.
    pub fn symmetric(&self) -> bool {
        true
    }

    pub fn monotone(&self) -> bool {
        match self.id {
            FunctionalId::Zeta => false,
            FunctionalId::WAlpha => self.alpha.is_some_and(|a| a >= 1.0),
            _ => true,
        }
    }

    /// Midpoint concavity `Φ(½(f+g)) ≥ ½Φ(f) + ½Φ(g)`.
    pub fn concave(&self) -> bool {
        match self.id {
            FunctionalId::Max | FunctionalId::Zeta => false,
            FunctionalId::WAlpha => self.alpha.is_some_and(|a| a >= 1.0),
            _ => true,
        }
    }

    /// Convexity; ζ and `W_α` for `α ≤ 1` are convex (area and ξ are linear).
    pub fn convex(&self) -> bool {
        match self.id {
            FunctionalId::Max | FunctionalId::Zeta | FunctionalId::Area | FunctionalId::Xi => true,
            FunctionalId::Eta => false,
            FunctionalId::WAlpha => self.alpha.is_some_and(|a| a <= 1.0),
        }
    }
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alpha {
            Some(a) => write!(f, "{}({a})", self.id.name()),
            None => f.write_str(self.id.name()),
        }
    }
}

impl Serialize for FunctionalSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `Φ(f)` for the interpolant of `p`.
pub fn eval(spec: &FunctionalSpec, p: &GridPath) -> f64 {
    let v = p.values();
    match spec.id {
        FunctionalId::Max => p.max_value(),
        FunctionalId::Area => trapezoid(v),
        FunctionalId::Xi => 2.0 * trapezoid(v),
        _ => eval_with_gradient(spec, p).0,
    }
}

/// `Φ(f)` and a (super/sub)gradient with respect to every grid value.
///
/// Non-smooth points are resolved at the smallest attaining grid index.
pub fn eval_with_gradient(spec: &FunctionalSpec, p: &GridPath) -> (f64, Vec<f64>) {
    let v = p.values();
    let n = p.n();
    let h = p.step();
    let mut grad = vec![0.0; n + 1];
    let value = match spec.id {
        FunctionalId::Max => {
            let mut best = 0;
            for (i, &x) in v.iter().enumerate() {
                if x > v[best] {
                    best = i;
                }
            }
            grad[best] = 1.0;
            v[best]
        }
        FunctionalId::Area | FunctionalId::Xi => {
            let c = if spec.id == FunctionalId::Xi { 2.0 } else { 1.0 };
            for (i, g) in grad.iter_mut().enumerate() {
                *g = if i == 0 || i == n { 0.5 * c * h } else { c * h };
            }
            c * trapezoid(v)
        }
        FunctionalId::Eta => quadrature::min_kernel(0.0, 4.0, v, &mut grad),
        FunctionalId::Zeta => quadrature::bracket_kernel(0.0, 2.0, v, &mut grad),
        FunctionalId::WAlpha => {
            let a = spec.alpha.expect("walpha has alpha");
            if a > 1.0 {
                quadrature::min_kernel(a - 2.0, 2.0 * a * (a - 1.0), v, &mut grad)
            } else if a == 1.0 {
                quadrature::endpoint_weighted_integral(1.0, v, &mut grad)
            } else {
                quadrature::endpoint_weighted_integral(a, v, &mut grad)
                    + quadrature::bracket_kernel(a - 2.0, -a * (a - 1.0), v, &mut grad)
            }
        }
    };
    (value, grad)
}

fn trapezoid(v: &[f64]) -> f64 {
    let n = v.len() - 1;
    v.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / n as f64
}

/// Exact interval minima of the interpolant of one path.
#[derive(Clone, Debug)]
pub struct IntervalMin<'a> {
    path: &'a GridPath,
    table: SparseTable,
}

impl<'a> IntervalMin<'a> {
    pub fn new(path: &'a GridPath) -> Self {
        Self {
            path,
            table: SparseTable::new(path.values()),
        }
    }

    /// `m(f; s, t) = min_{u ∈ [s, t]} f(u)` for `0 ≤ s ≤ t ≤ 1`.
    pub fn min(&self, s: f64, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("interval [{s}, {t}] not inside [0, 1]")));
        }
        if s > t {
            return Err(Error::Domain(format!("interval start {s} exceeds end {t}")));
        }
        let p = self.path;
        let n = p.n() as f64;
        let mut m = p.value_at(s).min(p.value_at(t));
        // grid points strictly inside (s, t)
        let lo = (s * n).floor() as usize + 1;
        let hi = ((t * n).ceil() as usize).saturating_sub(1);
        if lo <= hi {
            m = m.min(self.table.min(lo, hi));
        }
        Ok(m)
    }
}

/// `m(f; s, t)`, see [`IntervalMin`] for repeated queries on one path.
pub fn min_on_interval(p: &GridPath, s: f64, t: f64) -> Result<f64> {
    IntervalMin::new(p).min(s, t)
}

/// `|Φ(f) - ∫₀^{1/2} f'(t) h(t) dt|` for a symmetric unimodal path.
pub fn verify_sofie(spec: &FunctionalSpec, p: &GridPath) -> Result<f64> {
    let profile = lemma2_profile(spec);
    if !profile.applicable() {
        return Err(Error::Precondition(format!(
            "{spec} has no one-dimensional profile"
        )));
    }
    if !is_symmetric_unimodal(p) {
        return Err(Error::Precondition("path is not symmetric unimodal".into()));
    }
    let n = p.n();
    let h = p.step();
    let v = p.values();
    let mut sofie = 0.0;
    for i in 0..n {
        let a = i as f64 * h;
        if a >= 0.5 {
            break;
        }
        let b = ((i + 1) as f64 * h).min(0.5);
        let slope = (v[i + 1] - v[i]) * n as f64;
        sofie += slope * profile.integral(a, b);
    }
    Ok((eval(spec, p) - sofie).abs())
}

/// Symmetric, nondecreasing up to the middle and nonincreasing after it,
/// up to a relative tolerance of `1e-9`.
pub fn is_symmetric_unimodal(p: &GridPath) -> bool {
    let v = p.values();
    let n = p.n();
    let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let tol = 1e-9 * scale;
    let symmetric = (0..=n).all(|i| (v[i] - v[n - i]).abs() <= tol);
    let rising = (0..n / 2).all(|i| v[i + 1] >= v[i] - tol);
    symmetric && rising
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_path::{make_path, ProfileKind};

    fn tent(n: usize) -> GridPath {
        make_path(&ProfileKind::Tent, n).unwrap()
    }

    #[test]
    fn spec_construction() {
        assert!(FunctionalSpec::walpha(0.5).is_err());
        assert!(FunctionalSpec::walpha(0.51).is_ok());
        assert!(FunctionalSpec::new(FunctionalId::Eta, Some(2.0)).is_err());
        assert!(FunctionalSpec::new(FunctionalId::WAlpha, None).is_err());
        assert!(FunctionalSpec::parse("height", None).is_err());
        assert_eq!(FunctionalSpec::parse("zeta", None).unwrap(), FunctionalSpec::zeta());
        assert_eq!(FunctionalSpec::walpha(0.75).unwrap().to_string(), "walpha(0.75)");
    }

    #[test]
    fn structural_flags() {
        let flags = |s: FunctionalSpec| (s.symmetric(), s.monotone(), s.concave());
        assert_eq!(flags(FunctionalSpec::max()), (true, true, false));
        assert_eq!(flags(FunctionalSpec::area()), (true, true, true));
        assert_eq!(flags(FunctionalSpec::xi()), (true, true, true));
        assert_eq!(flags(FunctionalSpec::eta()), (true, true, true));
        assert_eq!(flags(FunctionalSpec::zeta()), (true, false, false));
        assert_eq!(flags(FunctionalSpec::walpha(3.0).unwrap()), (true, true, true));
        assert_eq!(flags(FunctionalSpec::walpha(0.75).unwrap()), (true, false, false));
    }

    #[test]
    fn zero_path_gives_zero() {
        let z = GridPath::zeros(16);
        for spec in FunctionalSpec::fixed()
            .into_iter()
            .chain([0.6, 1.0, 1.5, 3.0].map(|a| FunctionalSpec::walpha(a).unwrap()))
        {
            assert_eq!(eval(&spec, &z), 0.0, "{spec}");
        }
    }

    #[test]
    fn closed_form_values_on_maximizers() {
        let parab = make_path(&ProfileKind::Parabola, 512).unwrap();
        assert!((eval(&FunctionalSpec::area(), &parab) - 12f64.sqrt().recip()).abs() < 1e-4);

        let eta = make_path(&ProfileKind::EtaMax, 512).unwrap();
        assert!((eval(&FunctionalSpec::eta(), &eta) - 5f64.sqrt().recip()).abs() < 5e-3);
    }

    #[test]
    fn interval_minimum() {
        let t = tent(4);
        assert_eq!(min_on_interval(&t, 0.3, 0.3).unwrap(), 0.3);
        assert!((min_on_interval(&t, 0.25, 0.75).unwrap() - 0.25).abs() < 1e-15);
        let parab = make_path(&ProfileKind::Parabola, 512).unwrap();
        let got = min_on_interval(&parab, 0.1, 0.9).unwrap();
        assert!((got - 3f64.sqrt() * 0.09).abs() < 1e-5);
        assert!(min_on_interval(&t, 0.6, 0.4).is_err());
        // interior grid minimum below both endpoints
        let dip = GridPath::new(vec![0.0, 0.5, 0.1, 0.5, 0.0]).unwrap();
        assert!((min_on_interval(&dip, 0.2, 0.8).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sofie_on_tent_is_exact() {
        let d = verify_sofie(&FunctionalSpec::area(), &tent(2)).unwrap();
        assert!(d < 1e-15);
        assert!((eval(&FunctionalSpec::area(), &tent(2)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sofie_preconditions() {
        assert!(verify_sofie(&FunctionalSpec::max(), &tent(8)).is_err());
        let lopsided = GridPath::new(vec![0.0, 0.4, 0.1, 0.0]).unwrap();
        assert!(verify_sofie(&FunctionalSpec::area(), &lopsided).is_err());
    }

    #[test]
    fn walpha_two_is_eta() {
        let p = make_path(&ProfileKind::EtaMax, 100).unwrap();
        let w2 = eval(&FunctionalSpec::walpha(2.0).unwrap(), &p);
        let eta = eval(&FunctionalSpec::eta(), &p);
        assert!((w2 - eta).abs() < 1e-12);
    }
}
