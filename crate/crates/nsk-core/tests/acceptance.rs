//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers (run with `-- --nocapture` to see them).
//!
//! Shared expensive artifacts (the reference trajectory, the epsilon
//! sequence) are computed once and reused across criteria.

use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use nsk_core::coeffs::{derive_exponents, CoefficientLaw};
use nsk_core::coercivity::{
    self, admissibility_map, boundary_distance, counterexample_search, Analytic, MapSpec, Point,
};
use nsk_core::config::RunConfig;
use nsk_core::diagnostics::{
    bd_residual_at_stride, energy_residual_at_stride, records_for, uniform_bounds_report,
    weak_residual_momentum, PressureExponent,
};
use nsk_core::functionals::{
    bernis_pair, general_bernis_pair, j_direct, j_general_form, j_theta_form,
    korteweg_decomposition_residuals,
};
use nsk_core::grid::Grid;
use nsk_core::harness::converge_report;
use nsk_core::solver::{run, Trajectory};

static REFERENCE: Lazy<(RunConfig, Trajectory)> = Lazy::new(|| {
    let cfg = RunConfig::reference();
    let traj = run(&cfg).expect("reference configuration is valid");
    assert!(traj.completed(), "reference run must complete");
    (cfg, traj)
});

static EPSILON_SEQUENCE: Lazy<Vec<(RunConfig, Trajectory)>> = Lazy::new(|| {
    [0.1, 0.05, 0.025]
        .iter()
        .map(|&eps| {
            let mut cfg = RunConfig::reference();
            cfg.params = derive_exponents(1.0, -1.0, 2.0, eps).unwrap();
            let traj = run(&cfg).expect("epsilon-sequence configuration is valid");
            assert!(traj.completed(), "epsilon-sequence run must complete");
            (cfg, traj)
        })
        .collect()
});

#[test]
fn criterion_01_coefficient_formula() {
    let cases = [
        (1.0, -1.0, 4.0 / 9.0),
        (2.0, 0.0, 0.0),
        (2.0, 4.0, -8.0 / 441.0),
    ];
    for (alpha, beta, expect) in cases {
        let c = coercivity::coefficient_1d(alpha, beta).unwrap();
        assert!(
            (c - expect).abs() <= 1e-14,
            "coefficient({alpha},{beta}) = {c}, expected {expect}"
        );
    }
    println!("criterion 01 PASS: coefficient formula exact at the three worked points");
}

#[test]
fn criterion_02_range_characterization() {
    let spec = MapSpec {
        samples_per_cell: 200,
        search_budget: Some(5000),
        seed: 1,
        ..MapSpec::default()
    };
    let verdicts = admissibility_map(&spec).unwrap();
    assert_eq!(verdicts.len(), 25 * 25);

    let mut admissible_cells = 0usize;
    let mut worst_norm = f64::INFINITY;
    for v in &verdicts {
        if v.analytic == Analytic::Admissible {
            admissible_cells += 1;
            let norm = v.sampled_min_j_normalized.unwrap();
            worst_norm = worst_norm.min(norm);
            assert!(
                norm >= -1e-10,
                "admissible cell {:?} sampled min J (normalized) = {norm}",
                v.point
            );
        }
    }

    let mut required = 0usize;
    let mut found = 0usize;
    let mut missing: Vec<(f64, f64, f64)> = Vec::new();
    for v in &verdicts {
        if v.analytic != Analytic::Inadmissible {
            continue;
        }
        let (alpha, beta) = match v.point {
            Point::AlphaBeta { alpha, beta } => (alpha, beta),
            _ => unreachable!(),
        };
        if boundary_distance(alpha, beta) < 0.5 {
            continue;
        }
        required += 1;
        if v.counterexample.is_some() {
            found += 1;
        } else {
            missing.push((alpha, beta, v.coefficient.unwrap_or(f64::NAN)));
        }
    }
    println!(
        "criterion 02: {admissible_cells} admissible cells all sampled nonnegative \
         (worst normalized min J = {worst_norm:.2e}); counterexamples certified on \
         {found}/{required} inadmissible cells at distance >= 0.5"
    );
    if !missing.is_empty() {
        missing.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
        println!(
            "criterion 02: cells without certificate (coefficient margin in parentheses, \
             all with |margin| < ~0.09 where certified negativity would need cusp scales \
             below e^-10, i.e. grids beyond any desk-scale resolution):"
        );
        for (a, b, c) in &missing {
            println!("    alpha = {a:.3}, beta = {b:.3} (coefficient {c:+.4})");
        }
    }
    assert_eq!(
        found, required,
        "counterexample_search certified {found} of {required} required cells; \
         the remaining cells sit where the coefficient margin degenerates along the \
         upper boundary and near-extremal profiles for the sharp constant are not \
         constructible at resolvable cusp scales (see the failure list above and \
         the repository notes)"
    );
    println!("criterion 02 PASS");
}

#[test]
fn criterion_03_delta_line() {
    let grid = Grid::new(256, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for eps in [0.0, 0.1] {
        let law = CoefficientLaw::new(derive_exponents(1.2, 0.0, 2.0, eps).unwrap());
        for delta in [-2.0, -1.0, 0.0, 0.5, 1.0] {
            let mut worst = f64::INFINITY;
            for _ in 0..500 {
                let rho = coercivity::random_positive_density(&grid, &mut rng);
                let j = j_general_form(&rho, &law, delta).unwrap();
                let scale = j.abs().max(1.0);
                worst = worst.min(j / scale);
                assert!(
                    j >= -1e-10 * scale,
                    "delta = {delta}, eps = {eps}: J = {j}"
                );
            }
        }
    }

    // counterexamples just outside the interval, in power-law mode through
    // delta = beta - 2 alpha + 2
    let cases = [(-2.5, 1.172), (1.5, 0.51)];
    for (delta, alpha) in cases {
        let beta = delta + 2.0 * alpha - 2.0;
        let profile = counterexample_search(alpha, beta, 5000, 3)
            .unwrap()
            .unwrap_or_else(|| panic!("no counterexample found for delta = {delta}"));
        assert!(profile.j_value < 0.0 && profile.j_refined < 0.0);
        // the certificate transfers to the general form: evaluate it
        let g = Grid::new(2 * profile.grid_n, 1.0).unwrap();
        let rho = profile.realize(&g);
        let law = CoefficientLaw::new(
            derive_exponents(alpha, beta, (alpha / 2.0).max(1.0) + 1.0, 0.0).unwrap(),
        );
        let jg = j_general_form(&rho, &law, delta).unwrap();
        assert!(jg < 0.0, "general form must certify delta = {delta}: {jg}");
    }
    println!(
        "criterion 03 PASS: J >= 0 on the delta interval for 500 profiles per point \
         (eps in {{0, 0.1}}); certified negative profiles at delta = -2.5 and 1.5"
    );
}

#[test]
fn criterion_04_bernis_inequalities() {
    let grid = Grid::new(256, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut sharpest: f64 = 0.0;
    for _ in 0..1000 {
        let rho = coercivity::random_positive_density(&grid, &mut rng);
        for theta in [0.5, 1.0, 2.0] {
            let (lhs, rhs) = bernis_pair(&rho, theta).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-10), "theta = {theta}: {lhs} > {rhs}");
            if rhs > 0.0 {
                sharpest = sharpest.max(lhs / rhs);
            }
        }
    }
    for eps in [0.0, 0.1] {
        let law = CoefficientLaw::new(derive_exponents(1.4, 0.0, 2.0, eps).unwrap());
        for delta in [-2.0, -1.0, 0.0, 0.5] {
            for _ in 0..250 {
                let rho = coercivity::random_positive_density(&grid, &mut rng);
                let (lhs, rhs) = general_bernis_pair(&rho, &law, delta).unwrap();
                assert!(
                    lhs <= rhs * (1.0 + 1e-10),
                    "generalized, delta = {delta}, eps = {eps}: {lhs} > {rhs}"
                );
            }
        }
    }
    println!(
        "criterion 04 PASS: Bernis pair on 1000 profiles x 3 thetas \
         (sharpest observed ratio {sharpest:.3}), generalized pair on 250 x 4 deltas x 2 eps"
    );
}

#[test]
fn criterion_05_cross_form_equivalence() {
    let grid = Grid::new(256, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    while checked < 200 {
        let alpha = rng.gen_range(0.6..3.0);
        let beta = rng.gen_range((2.0 * alpha - 4.0)..(2.0 * alpha - 1.0));
        let params = derive_exponents(alpha, beta, 2.0 * alpha.max(1.0), 0.0).unwrap();
        if params.theta.abs() < 0.05 {
            continue;
        }
        let rho = coercivity::random_positive_density(&grid, &mut rng);
        if !rho.is_resolved(1e-8) {
            continue;
        }
        let law = CoefficientLaw::new(params);
        let jd = j_direct(&rho, &law).unwrap();
        let jt = j_theta_form(&rho, &params).unwrap();
        let jg = j_general_form(&rho, &law, params.delta).unwrap();
        let scale = jt.abs().max(1e-12);
        let dt = (jd - jt).abs() / scale;
        let dg = (jd - jg).abs() / scale;
        assert!(dt <= 1e-7, "(alpha={alpha}, beta={beta}): |jd-jt|/|jt| = {dt}");
        assert!(dg <= 1e-7, "(alpha={alpha}, beta={beta}): |jd-jg|/|jt| = {dg}");
        worst = worst.max(dt).max(dg);
        checked += 1;
    }
    println!(
        "criterion 05 PASS: three J forms agree to {worst:.2e} (<= 1e-7 relative) \
         on 200 resolved profiles"
    );
}

#[test]
fn criterion_06_energy_identity() {
    let (cfg, traj) = &*REFERENCE;
    let law = cfg.law();
    let (tau1, r1) = energy_residual_at_stride(traj, &law, 1).unwrap();
    let (_, r2) = energy_residual_at_stride(traj, &law, 2).unwrap();
    let (_, r4) = energy_residual_at_stride(traj, &law, 4).unwrap();
    assert!(
        r1 <= 1e-5,
        "energy residual at reference settings: {r1:.3e} (tau = {tau1:.3e})"
    );
    let p1 = (r4 / r2).log2();
    let p2 = (r2 / r1).log2();
    assert!(
        p1 >= 1.7 && p2 >= 1.7,
        "refinement orders {p1:.2}, {p2:.2} should be >= 2 (with sampling slack)"
    );

    let records = records_for(traj, &law).unwrap();
    let e0 = records[0].energy;
    for w in records.windows(2) {
        assert!(
            w[1].energy <= w[0].energy + 1e-9 * e0,
            "energy must be nonincreasing: {} -> {}",
            w[0].energy,
            w[1].energy
        );
    }
    println!(
        "criterion 06 PASS: energy residual {r1:.2e} at tau = {tau1:.2e}, \
         refinement orders ({p1:.2}, {p2:.2}), energy monotone over {} samples",
        records.len()
    );
}

#[test]
fn criterion_07_bd_identity_and_typo_discrimination() {
    let (cfg, traj) = &*REFERENCE;
    let law = cfg.law();
    let (tau1, good1) =
        bd_residual_at_stride(traj, &law, 1, PressureExponent::Consistent).unwrap();
    let (_, good2) = bd_residual_at_stride(traj, &law, 2, PressureExponent::Consistent).unwrap();
    assert!(
        good1 <= 1e-4,
        "entropy residual at reference settings: {good1:.3e}"
    );
    assert!(
        good2 > 2.0 * good1,
        "entropy residual must improve under refinement: {good2:.3e} -> {good1:.3e}"
    );

    let (_, bad1) = bd_residual_at_stride(traj, &law, 1, PressureExponent::OffByOne).unwrap();
    let (_, bad2) = bd_residual_at_stride(traj, &law, 2, PressureExponent::OffByOne).unwrap();
    assert!(
        bad1 > 100.0 * good1,
        "misprinted exponent must leave an O(1) residual: {bad1:.3e} vs {good1:.3e}"
    );
    let stall = bad2 / bad1;
    assert!(
        (0.5..2.0).contains(&stall),
        "misprinted-exponent residual must not vanish under refinement (ratio {stall:.3})"
    );

    let records = records_for(traj, &law).unwrap();
    let f0 = records[0].bd_entropy;
    for w in records.windows(2) {
        assert!(
            w[1].bd_entropy <= w[0].bd_entropy + 1e-9 * f0,
            "entropy must be nonincreasing"
        );
    }
    println!(
        "criterion 07 PASS: entropy residual {good1:.2e} at tau = {tau1:.2e} \
         (improves {:.1}x under 2x refinement); misprinted exponent stalls at {bad1:.2e}",
        good2 / good1
    );
}

#[test]
fn criterion_08_conservation_and_convergence() {
    let (cfg, traj) = &*REFERENCE;
    let records = records_for(traj, &cfg.law()).unwrap();
    let m0 = records[0].mass;
    let mut worst_drift: f64 = 0.0;
    for r in &records {
        worst_drift = worst_drift.max((r.mass - m0).abs() / m0);
    }
    assert!(worst_drift <= 1e-11, "mass drift {worst_drift:.3e}");

    // The step-size triple runs on a coarser grid: at n = 256 the stable
    // step is so small that the RK4 error sits below roundoff and no order
    // is observable. Same equations, same data, same cfl.
    let mut cvg_cfg = cfg.clone();
    cvg_cfg.t_end = 0.005;
    cvg_cfg.n = 64;
    let report = converge_report(&cvg_cfg).unwrap();
    assert!(
        (report.dt_order - 4.0).abs() <= 0.2,
        "RK4 self-convergence order {:.3}",
        report.dt_order
    );
    let e64 = report.space_errors[0].1;
    let e128 = report.space_errors[1].1;
    assert!(
        e64 / e128 >= 1e3,
        "spectral refinement must drop the rhs error by >= 1e3: {e64:.3e} -> {e128:.3e}"
    );
    println!(
        "criterion 08 PASS: mass drift {worst_drift:.2e}, RK4 order {:.2}, \
         rhs error drop n=64 -> n=128: {:.1e}x",
        report.dt_order,
        e64 / e128
    );
}

#[test]
fn criterion_09_korteweg_weak_constants() {
    let grid = Grid::new(256, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for (alpha, beta) in [(1.0, -1.0), (2.0, 1.0), (0.75, -1.25)] {
        let params = derive_exponents(alpha, beta, 2.0 * alpha.max(1.0), 0.0).unwrap();
        for _ in 0..100 {
            let rho = coercivity::random_positive_density(&grid, &mut rng);
            let (r1, r2) = korteweg_decomposition_residuals(&rho, &params).unwrap();
            assert!(r1 <= 1e-8, "({alpha},{beta}) beta-form residual {r1:.3e}");
            assert!(r2 <= 1e-8, "({alpha},{beta}) theta-form residual {r2:.3e}");
            worst = worst.max(r1).max(r2);
        }
    }
    println!(
        "criterion 09 PASS: both decompositions close to {worst:.2e} \
         (<= 1e-8) on 100 profiles x 3 exponent pairs"
    );
}

#[test]
fn criterion_10_vacuum_ceiling_uniformity() {
    let runs = &*EPSILON_SEQUENCE;
    let report = uniform_bounds_report(runs).unwrap();
    assert_eq!(report.rows.len(), 3);
    for (col, _name) in nsk_core::diagnostics::UNIFORM_BOUND_COLUMNS.iter().enumerate() {
        let first = report.rows[0][col].max(1e-300);
        for row in &report.rows {
            assert!(
                row[col] <= 2.0 * first,
                "column {} grew beyond 2x its first-row value: {} vs {}",
                nsk_core::diagnostics::UNIFORM_BOUND_COLUMNS[col],
                row[col],
                first
            );
        }
    }
    assert!(
        report.flagged.is_empty(),
        "flagged columns: {:?}",
        report.flagged
    );
    for (cfg, traj) in runs {
        let records = records_for(traj, &cfg.law()).unwrap();
        let v0 = records[0].vacuum_bound;
        for r in &records {
            assert!(
                r.vacuum_bound < 10.0 * v0,
                "vacuum/ceiling monitor exceeded 10x its initial value"
            );
        }
    }
    println!(
        "criterion 10 PASS: all uniformity columns within 2x of the eps = 0.1 row \
         across eps = {:?}; vacuum/ceiling monitor below 10x everywhere",
        report.epsilons
    );
}

#[test]
fn criterion_11_weak_momentum_residual() {
    let (cfg, traj) = &*REFERENCE;
    let law = cfg.law();
    let fine = weak_residual_momentum(traj, &law, 8).unwrap();
    assert!(fine <= 1e-4, "weak momentum residual {fine:.3e}");

    // coarsened sampling must be worse: the residual decreases under
    // refinement of the sample interval
    let coarse_traj = Trajectory {
        samples: traj.samples.iter().step_by(2).cloned().collect(),
        termination: traj.termination.clone(),
        steps: traj.steps,
    };
    let coarse = weak_residual_momentum(&coarse_traj, &law, 8).unwrap();
    assert!(
        coarse > fine,
        "residual must decrease under sampling refinement: coarse {coarse:.3e} vs fine {fine:.3e}"
    );
    println!(
        "criterion 11 PASS: weak momentum residual {fine:.2e} with 8 test modes \
         (coarsened sampling gives {coarse:.2e})"
    );
}

#[test]
fn reference_trajectory_profile_sanity() {
    // not a numbered criterion: guards the shared fixture itself
    let (cfg, traj) = &*REFERENCE;
    assert!(traj.steps > 1000, "reference run should take many steps");
    assert!(traj.samples.len() > 100);
    let last = traj.final_state();
    assert!((last.t - cfg.t_end).abs() < 1e-12);
    assert!(last.rho.min() > 0.5, "no near-vacuum excursion expected");
    for w in traj.samples.windows(2) {
        assert!(w[1].state.t > w[0].state.t, "sample times strictly increase");
    }
    let records = records_for(traj, &cfg.law()).unwrap();
    assert_eq!(records.len(), traj.samples.len());
    // and the initial profile is the documented one
    let g = cfg.grid().unwrap();
    let rho0 = nsk_core::grid::PeriodicField::from_fn(&g, |x| 2.0 + 0.5 * (2.0 * PI * x).sin());
    assert!((&traj.samples[0].state.rho - &rho0).linf() < 1e-14);
}
