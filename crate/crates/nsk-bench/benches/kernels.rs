//! Microbenchmarks for the spectral substrate, the functional evaluations
//! and one full RK4 step — the kernels that dominate runs and sweeps.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use nsk_bench::fixture;
use nsk_core::functionals::{j_direct, j_general_form, j_theta_form};
use nsk_core::solver::{rhs, stable_dt, step};

fn bench_spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral");
    for n in [256usize, 1024] {
        let (_, state, _) = fixture(n);
        group.bench_with_input(BenchmarkId::new("deriv1", n), &n, |b, _| {
            b.iter(|| black_box(state.rho.deriv(1).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("deriv3", n), &n, |b, _| {
            b.iter(|| black_box(state.rho.deriv(3).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("dealias", n), &n, |b, _| {
            b.iter(|| black_box(state.rho.dealias()))
        });
    }
    group.finish();
}

fn bench_functionals(c: &mut Criterion) {
    let mut group = c.benchmark_group("j_forms");
    let (_, state, law) = fixture(256);
    let params = law.params;
    let power = nsk_core::coeffs::CoefficientLaw::new(
        nsk_core::derive_exponents(1.0, -1.0, 2.0, 0.0).unwrap(),
    );
    group.bench_function("j_direct", |b| {
        b.iter(|| black_box(j_direct(&state.rho, &power).unwrap()))
    });
    group.bench_function("j_theta", |b| {
        b.iter(|| black_box(j_theta_form(&state.rho, &power.params).unwrap()))
    });
    group.bench_function("j_general", |b| {
        b.iter(|| black_box(j_general_form(&state.rho, &law, params.delta).unwrap()))
    });
    group.finish();
}

fn bench_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver");
    for n in [256usize, 512] {
        let (_, state, law) = fixture(n);
        let dt = stable_dt(&state, &law, 0.25);
        group.bench_with_input(BenchmarkId::new("rhs", n), &n, |b, _| {
            b.iter(|| black_box(rhs(&state.rho, &state.u, &law).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("rk4_step", n), &n, |b, _| {
            b.iter(|| black_box(step(&state, dt, &law).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_spectral, bench_functionals, bench_solver);
criterion_main!(benches);
