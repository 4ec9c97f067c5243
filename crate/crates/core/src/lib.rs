//! Tail constants for positively homogeneous functionals of Brownian excursion.
//!
//! For a functional `Φ` on nonnegative continuous paths vanishing at both ends,
//! the right tail of `X = Φ(B_ex)` is quasi-Gaussian,
//! `-ln P(X > x) ~ x² / (2γ²)`, where `γ` is the maximum of `Φ` over the unit
//! ball of the Sobolev energy `∫|f'|²` restricted to excursion-shaped paths.
//!
//! The crate computes `γ` three ways (closed form through a one-dimensional
//! profile, projected ascent over a discretized feasible set, analytic bounds)
//! and checks the tail law against Monte Carlo excursions and the exact series
//! for the distribution of the maximum.
//!
//! * [`grid_path`]: discretized candidate paths, energy and feasibility checks,
//!   symmetrization and unimodal rearrangement.
//! * [`functionals`]: the functional catalog (max, area, ξ, η, ζ, `W_α`).
//! * [`variational`]: closed forms, the numeric maximizer and bounds.
//! * [`excursion_mc`]: excursion samplers and tail/MGF/moment estimators.
//! * [`exact_dist`]: the series for the law of `max B_ex`.
//! * [`cli`]: command implementations behind the `bextail` binary.

pub mod cli;
pub mod error;
pub mod exact_dist;
pub mod excursion_mc;
pub mod functionals;
pub mod grid_path;
pub mod rmq;
pub mod variational;

pub use error::{Error, Result};
pub use functionals::{FunctionalId, FunctionalSpec};
pub use grid_path::GridPath;
