#![allow(dead_code)]

use excursion_tails::grid_path::{random_kex_path, GridPath};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CASES: u32 = 1000;

pub fn config() -> Config {
    Config {
        cases: CASES,
        rng_seed: RngSeed::Fixed(0x0b5e_55ed),
        failure_persistence: None,
        ..Config::default()
    }
}

/// Nonnegative grid values with zero ends.
pub fn excursion_values(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![1 => Just(0.0), 6 => 0.0..2.0f64], n - 1).prop_map(
            |inner| {
                let mut v = Vec::with_capacity(inner.len() + 2);
                v.push(0.0);
                v.extend(inner);
                v.push(0.0);
                v
            },
        )
    })
}

pub fn excursion_path(max_n: usize) -> impl Strategy<Value = GridPath> {
    excursion_values(max_n).prop_map(|v| GridPath::new(v).unwrap())
}

/// Interior values drawn from a continuous law, so interval minima are
/// attained at a single grid point almost surely.
pub fn generic_path(max_n: usize) -> impl Strategy<Value = GridPath> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(0.01..2.0f64, n + 1).prop_map(GridPath::new).prop_map(Result::unwrap)
    })
}

/// A unit-energy member of `K_ex` from a seed.
pub fn kex_path(min_n: usize, max_n: usize) -> impl Strategy<Value = GridPath> {
    (min_n..=max_n, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_kex_path(n, &mut rng)
    })
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
