//! One-dimensional profiles `h` with `Φ(f) = ∫₀^{1/2} f'(t) h(t) dt` on
//! symmetric unimodal paths.
//!
//! Every profile in the catalog is a finite sum `Σ cₖ (1 - 2t)^{eₖ}`, which
//! makes its integrals and its squared L² norm exact.

use serde::Serialize;

use super::{FunctionalId, FunctionalSpec};

/// `coef · (1 - 2t)^exponent` on `[0, 1/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerTerm {
    pub coef: f64,
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma2Profile {
    terms: Vec<PowerTerm>,
    applicable: bool,
}

impl Lemma2Profile {
    fn from_terms(terms: &[(f64, f64)]) -> Self {
        Self {
            terms: terms
                .iter()
                .map(|&(coef, exponent)| PowerTerm { coef, exponent })
                .collect(),
            applicable: true,
        }
    }

    fn inapplicable() -> Self {
        Self {
            terms: Vec::new(),
            applicable: false,
        }
    }

    pub fn applicable(&self) -> bool {
        self.applicable
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    /// `h(t)` for `t ∈ [0, 1/2]`.
    pub fn value(&self, t: f64) -> f64 {
        let u = (1.0 - 2.0 * t).max(0.0);
        self.terms.iter().map(|p| p.coef * u.powf(p.exponent)).sum()
    }

    /// `∫_a^b h(t) dt` for `0 ≤ a ≤ b ≤ 1/2`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let ua = (1.0 - 2.0 * a).max(0.0);
        let ub = (1.0 - 2.0 * b).max(0.0);
        self.terms
            .iter()
            .map(|p| {
                let e = p.exponent + 1.0;
                p.coef * (ua.powf(e) - ub.powf(e)) / (2.0 * e)
            })
            .sum()
    }

    /// `∫₀^{1/2} h(t)² dt`, expanded term by term.
    pub fn half_l2_sq(&self) -> f64 {
        let mut total = 0.0;
        for a in &self.terms {
            for b in &self.terms {
                total += a.coef * b.coef / (2.0 * (a.exponent + b.exponent + 1.0));
            }
        }
        total
    }
}

/// The profile for `spec`; not applicable for the maximum.
pub fn lemma2_profile(spec: &FunctionalSpec) -> Lemma2Profile {
    match spec.id() {
        FunctionalId::Max => Lemma2Profile::inapplicable(),
        FunctionalId::Area => Lemma2Profile::from_terms(&[(1.0, 1.0)]),
        FunctionalId::Xi => Lemma2Profile::from_terms(&[(2.0, 1.0)]),
        FunctionalId::Eta => Lemma2Profile::from_terms(&[(2.0, 2.0)]),
        // 2(1-2t) - 2(1-2t)² = 4t(1-2t)
        FunctionalId::Zeta => Lemma2Profile::from_terms(&[(2.0, 1.0), (-2.0, 2.0)]),
        FunctionalId::WAlpha => {
            Lemma2Profile::from_terms(&[(2.0, spec.alpha().expect("walpha has alpha"))])
        }
    }
}
