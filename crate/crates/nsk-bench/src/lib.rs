//! Benchmark-only crate; see `benches/kernels.rs`.
//!
//! Shared fixtures for the benchmarks live here so the bench target stays
//! a thin harness.

use std::sync::Arc;

use nsk_core::coeffs::CoefficientLaw;
use nsk_core::derive_exponents;
use nsk_core::grid::{Grid, PeriodicField};
use nsk_core::solver::State;

/// Reference-like smooth state on an `n`-point grid.
pub fn fixture(n: usize) -> (Arc<Grid>, State, CoefficientLaw) {
    let grid = Grid::new(n, 1.0).expect("power-of-two n");
    let rho = PeriodicField::from_fn(&grid, |x| {
        2.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin()
    });
    let u = PeriodicField::from_fn(&grid, |x| {
        0.1 * (2.0 * std::f64::consts::PI * x).sin()
    });
    let law = CoefficientLaw::new(derive_exponents(1.0, -1.0, 2.0, 0.01).unwrap());
    (grid, State { t: 0.0, rho, u }, law)
}
