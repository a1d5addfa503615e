//! Per-sample monitoring: functional values, identity residuals, blow-up
//! monitors, uniformity reports across the regularization sequence, and
//! the weak-form residual of the momentum equation.

use crate::coeffs::CoefficientLaw;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::functionals::{
    bd_capillary_dissipation, bd_entropy, bernis_pair, energy, j_direct, mass,
    pressure_dissipation, visc_dissipation,
};
use crate::grid::PeriodicField;
use crate::solver::{State, Trajectory};

use std::f64::consts::PI;

/// One row of monitored quantities. `j_sc` is the strong-coercivity
/// functional; `j_bd` is the capillary dissipation entering the entropy
/// identity (they agree up to the factor `alpha` for pure power laws).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub energy: f64,
    pub bd_entropy: f64,
    pub j_sc: f64,
    pub j_bd: f64,
    pub visc_dissipation: f64,
    pub pressure_dissipation: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    /// `eps * max(rho^{-1/4}) + max(rho)`.
    pub vacuum_bound: f64,
    pub energy_residual: f64,
    pub bd_residual: f64,
    pub max_inv_rho: f64,
    pub max_dx_a: f64,
    pub max_dx_u: f64,
    pub max_dxx_u: f64,
    pub bernis_ratio: f64,
}

pub const RECORD_COLUMNS: [&str; 19] = [
    "t",
    "dt",
    "mass",
    "energy",
    "bd_entropy",
    "j_sc",
    "j_bd",
    "visc_dissipation",
    "pressure_dissipation",
    "min_rho",
    "max_rho",
    "vacuum_bound",
    "energy_residual",
    "bd_residual",
    "max_inv_rho",
    "max_dx_a",
    "max_dx_u",
    "max_dxx_u",
    "bernis_ratio",
];

impl DiagnosticsRecord {
    pub fn as_array(&self) -> [f64; 19] {
        [
            self.t,
            self.dt,
            self.mass,
            self.energy,
            self.bd_entropy,
            self.j_sc,
            self.j_bd,
            self.visc_dissipation,
            self.pressure_dissipation,
            self.min_rho,
            self.max_rho,
            self.vacuum_bound,
            self.energy_residual,
            self.bd_residual,
            self.max_inv_rho,
            self.max_dx_a,
            self.max_dx_u,
            self.max_dxx_u,
            self.bernis_ratio,
        ]
    }

    pub fn from_array(v: [f64; 19]) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t: v[0],
            dt: v[1],
            mass: v[2],
            energy: v[3],
            bd_entropy: v[4],
            j_sc: v[5],
            j_bd: v[6],
            visc_dissipation: v[7],
            pressure_dissipation: v[8],
            min_rho: v[9],
            max_rho: v[10],
            vacuum_bound: v[11],
            energy_residual: v[12],
            bd_residual: v[13],
            max_inv_rho: v[14],
            max_dx_a: v[15],
            max_dx_u: v[16],
            max_dxx_u: v[17],
            bernis_ratio: v[18],
        }
    }
}

/// Running accumulator turning sampled states into diagnostics rows.
/// Residual time integrals use the trapezoid rule over the sample times;
/// the first pushed sample defines the reference values, so its residuals
/// are exactly zero.
pub struct DiagnosticsAccumulator {
    law: CoefficientLaw,
    e0: Option<f64>,
    f0: Option<f64>,
    visc_integral: f64,
    bd_integral: f64,
    prev: Option<(f64, f64, f64)>, // (t, visc, press + j_bd)
}

impl DiagnosticsAccumulator {
    pub fn new(law: CoefficientLaw) -> DiagnosticsAccumulator {
        DiagnosticsAccumulator {
            law,
            e0: None,
            f0: None,
            visc_integral: 0.0,
            bd_integral: 0.0,
            prev: None,
        }
    }

    pub fn push(&mut self, state: &State, dt: f64) -> Result<DiagnosticsRecord> {
        let law = &self.law;
        let p = &law.params;
        law.ensure_positive(&state.rho)?;

        let e = energy(&state.rho, &state.u, law)?.total();
        let f = bd_entropy(&state.rho, &state.u, law)?.total();
        let j_sc = j_direct(&state.rho, law)?;
        let j_bd = bd_capillary_dissipation(&state.rho, law)?;
        let visc = visc_dissipation(&state.rho, &state.u, law)?;
        let press = pressure_dissipation(&state.rho, law)?;

        if let Some((tp, vp, bp)) = self.prev {
            let h = state.t - tp;
            self.visc_integral += 0.5 * h * (vp + visc);
            self.bd_integral += 0.5 * h * (bp + press + j_bd);
        }
        self.prev = Some((state.t, visc, press + j_bd));
        let e0 = *self.e0.get_or_insert(e);
        let f0 = *self.f0.get_or_insert(f);

        let min_rho = state.rho.min();
        let max_rho = state.rho.max();
        let vacuum_bound = p.epsilon * state.rho.map(|r| r.powf(-0.25)).max() + max_rho;

        let a = law.a_field(&state.rho)?;
        let theta = if p.log_branch() { 1.0 } else { p.theta };
        let (bl, br) = bernis_pair(&state.rho, theta)?;
        let bernis_ratio = if br > 1e-300 { bl / br } else { 0.0 };

        let rec = DiagnosticsRecord {
            t: state.t,
            dt,
            mass: mass(&state.rho),
            energy: e,
            bd_entropy: f,
            j_sc,
            j_bd,
            visc_dissipation: visc,
            pressure_dissipation: press,
            min_rho,
            max_rho,
            vacuum_bound,
            energy_residual: e + self.visc_integral - e0,
            bd_residual: f + self.bd_integral - f0,
            max_inv_rho: 1.0 / min_rho,
            max_dx_a: a.deriv(1)?.linf(),
            max_dx_u: state.u.deriv(1)?.linf(),
            max_dxx_u: state.u.deriv(2)?.linf(),
            bernis_ratio,
        };
        for (name, v) in RECORD_COLUMNS.iter().zip(rec.as_array()) {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("diagnostics column {name}")));
            }
        }
        Ok(rec)
    }
}

/// Diagnostics rows for every sample of a trajectory.
pub fn records_for(traj: &Trajectory, law: &CoefficientLaw) -> Result<Vec<DiagnosticsRecord>> {
    let mut acc = DiagnosticsAccumulator::new(*law);
    traj.samples
        .iter()
        .map(|s| acc.push(&s.state, s.dt))
        .collect()
}

/// Which power of `rho` multiplies `mu/rho` inside the pressure
/// dissipation. `Consistent` is the exponent the identity derivation
/// forces; `OffByOne` is the misprinted alternative, kept as a
/// discriminating test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PressureExponent {
    Consistent,
    OffByOne,
}

/// Entropy-identity residual at the final sample, recomputed from every
/// `stride`-th sample. Returns `(sample interval, |residual| / F(0))`.
pub fn bd_residual_at_stride(
    traj: &Trajectory,
    law: &CoefficientLaw,
    stride: usize,
    exponent: PressureExponent,
) -> Result<(f64, f64)> {
    let p = &law.params;
    let samples: Vec<&State> = traj
        .samples
        .iter()
        .step_by(stride.max(1))
        .map(|s| &s.state)
        .collect();
    if samples.len() < 3 {
        return Err(Error::SamplingDensity(
            "need at least three samples for a residual".into(),
        ));
    }
    let press = |rho: &PeriodicField| -> Result<f64> {
        match exponent {
            PressureExponent::Consistent => pressure_dissipation(rho, law),
            PressureExponent::OffByOne => {
                let dx = rho.deriv(1)?;
                let weight = rho.map(|r| law.big_phi_prime_scalar(r) * r.powf(p.gamma - 1.0));
                Ok(p.gamma * (&weight * &(&dx * &dx)).integrate())
            }
        }
    };
    let f0 = bd_entropy(&samples[0].rho, &samples[0].u, law)?.total();
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for s in &samples {
        let d = press(&s.rho)? + bd_capillary_dissipation(&s.rho, law)?;
        if let Some((tp, dp)) = prev {
            integral += 0.5 * (s.t - tp) * (dp + d);
        }
        prev = Some((s.t, d));
    }
    let last = samples.last().unwrap();
    let f_end = bd_entropy(&last.rho, &last.u, law)?.total();
    let tau = (last.t - samples[0].t) / (samples.len() - 1) as f64;
    Ok((tau, (f_end + integral - f0).abs() / f0))
}

/// Energy-identity residual at the final sample, from every `stride`-th
/// sample. Returns `(sample interval, |residual| / E(0))`.
pub fn energy_residual_at_stride(
    traj: &Trajectory,
    law: &CoefficientLaw,
    stride: usize,
) -> Result<(f64, f64)> {
    let samples: Vec<&State> = traj
        .samples
        .iter()
        .step_by(stride.max(1))
        .map(|s| &s.state)
        .collect();
    if samples.len() < 3 {
        return Err(Error::SamplingDensity(
            "need at least three samples for a residual".into(),
        ));
    }
    let e0 = energy(&samples[0].rho, &samples[0].u, law)?.total();
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for s in &samples {
        let d = visc_dissipation(&s.rho, &s.u, law)?;
        if let Some((tp, dp)) = prev {
            integral += 0.5 * (s.t - tp) * (dp + d);
        }
        prev = Some((s.t, d));
    }
    let last = samples.last().unwrap();
    let e_end = energy(&last.rho, &last.u, law)?.total();
    let tau = (last.t - samples[0].t) / (samples.len() - 1) as f64;
    Ok((tau, (e_end + integral - e0).abs() / e0))
}

/// Pointwise fields entering the weak momentum form, computed once per
/// sample. The capillary terms are the exact divergence-form decomposition
/// of the regularized Korteweg force: for `eps = 0` the coefficients reduce
/// to the power-law weak constants.
struct WeakFields {
    t: f64,
    momentum: PeriodicField,
    flux: PeriodicField,     // rho u^2 - mu dx u + rho^gamma + (dx psi capillary terms)
    cap_dxx: PeriodicField,  // multiplies dxx psi
}

fn weak_fields(state: &State, law: &CoefficientLaw) -> Result<WeakFields> {
    let p = &law.params;
    let inv_a2 = 1.0 / (p.alpha * p.alpha);
    let rho = &state.rho;
    let u = &state.u;
    let mu = law.mu(rho)?;
    let mu_x = mu.deriv(1)?;
    let rho_x = rho.deriv(1)?;

    let momentum = rho * u;
    let advect = &momentum * u;
    let viscous = &mu * &u.deriv(1)?;
    let pressure = rho.powf(p.gamma);

    let cap_dx_1 = (&rho.powf(p.delta) * &(&mu_x * &mu_x)).scale((p.delta + 3.0) / 2.0 * inv_a2);
    let cap_dx_2 = (&(&rho.powf(p.delta + 1.0) * &law.mu_double_prime(rho)?) * &(&rho_x * &mu_x))
        .scale(inv_a2);
    let flux = &(&(&advect - &viscous) + &pressure) + &(&cap_dx_1 + &cap_dx_2);

    let cap_dxx = (&(&rho.powf(p.delta + 1.0) * &law.mu_prime(rho)?) * &mu_x).scale(inv_a2);
    Ok(WeakFields {
        t: state.t,
        momentum,
        flux,
        cap_dxx,
    })
}

/// Smooth bump supported in `(0, 1)`; vanishes with all derivatives at the
/// endpoints, so the sampled test functions are compactly supported in time.
fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

fn bump_prime(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let phi = s * (1.0 - s);
        bump(s) * (1.0 - 2.0 * s) / (phi * phi)
    }
}

/// Normalized weak-form residual of the momentum equation over test
/// functions `psi = bump(t/T) * {cos, sin}(2 pi k x / L)`, `k <= mode_count`.
/// The result is the worst absolute weak integral over the test family,
/// normalized by the largest single term entering it.
pub fn weak_residual_momentum(
    traj: &Trajectory,
    law: &CoefficientLaw,
    mode_count: usize,
) -> Result<f64> {
    if law.params.log_branch() {
        return Err(Error::Unsupported(
            "the weak-form decomposition requires theta != 0".into(),
        ));
    }
    if traj.samples.len() < 8 {
        return Err(Error::SamplingDensity(format!(
            "weak residual needs a densely sampled trajectory, got {} samples",
            traj.samples.len()
        )));
    }
    let fields: Vec<WeakFields> = traj
        .samples
        .iter()
        .map(|s| weak_fields(&s.state, law))
        .collect::<Result<_>>()?;
    let t_end = fields.last().unwrap().t;
    let grid = traj.samples[0].state.rho.grid().clone();
    let length = grid.length();

    let mut worst: f64 = 0.0;
    for k in 1..=mode_count {
        for phase in [0.0, 0.5 * PI] {
            let kk = 2.0 * PI * k as f64 / length;
            let psi = PeriodicField::from_fn(&grid, |x| (kk * x + phase).cos());
            let psi_x = PeriodicField::from_fn(&grid, |x| -kk * (kk * x + phase).sin());
            let psi_xx = psi.scale(-kk * kk);

            // time trapezoid of the signed weak integral; term magnitudes
            // are accumulated in L1 so oscillatory cancellation within a
            // term cannot deflate the normalization
            let mut total = 0.0;
            let mut term_mags = [0.0f64; 3];
            let mut prev: Option<(f64, [f64; 3], [f64; 3])> = None;
            for f in &fields {
                let s = f.t / t_end;
                let ch = [
                    bump_prime(s) / t_end * (&f.momentum * &psi).integrate(),
                    bump(s) * (&f.flux * &psi_x).integrate(),
                    bump(s) * (&f.cap_dxx * &psi_xx).integrate(),
                ];
                let mag = [
                    (bump_prime(s) / t_end).abs()
                        * (&f.momentum * &psi).map(f64::abs).integrate(),
                    bump(s) * (&f.flux * &psi_x).map(f64::abs).integrate(),
                    bump(s) * (&f.cap_dxx * &psi_xx).map(f64::abs).integrate(),
                ];
                if let Some((tp, chp, magp)) = prev {
                    let h = f.t - tp;
                    for i in 0..3 {
                        term_mags[i] += 0.5 * h * (magp[i] + mag[i]);
                    }
                    total += 0.5 * h * ((chp[0] + chp[1] + chp[2]) + (ch[0] + ch[1] + ch[2]));
                }
                prev = Some((f.t, ch, mag));
            }
            let scale = term_mags.iter().fold(0.0f64, |m, v| m.max(*v));
            if scale > 1e-300 {
                worst = worst.max(total.abs() / scale);
            }
        }
    }
    Ok(worst)
}

pub const UNIFORM_BOUND_COLUMNS: [&str; 8] = [
    "sup_t_l2_sqrt_rho_u",
    "sup_t_l2_dx_rho_alpha_minus_half",
    "l2_tx_rho_alpha_half_dx_u",
    "l2_tx_dx_rho_gamma_alpha_pow",
    "l2_tx_dxx_rho_theta",
    "l4_tx_dx_rho_theta_half",
    "sup_t_linf_rho",
    "eps_linf_rho_inv_quarter",
];

#[derive(Clone, Debug)]
pub struct UniformBoundsReport {
    pub epsilons: Vec<f64>,
    /// One row per run, columns as in [`UNIFORM_BOUND_COLUMNS`].
    pub rows: Vec<[f64; 8]>,
    /// Columns growing monotonically by more than 2x across the sequence.
    pub flagged: Vec<&'static str>,
}

fn run_bounds(cfg: &RunConfig, traj: &Trajectory) -> Result<[f64; 8]> {
    let p = cfg.params;
    let mut sup_sqrt_rho_u: f64 = 0.0;
    let mut sup_dx_rho_am: f64 = 0.0;
    let mut sup_rho_inf: f64 = 0.0;
    let mut sup_inv: f64 = 0.0;
    let mut int_visc = 0.0;
    let mut int_press = 0.0;
    let mut int_curv = 0.0;
    let mut int_quart = 0.0;
    let mut prev: Option<(f64, [f64; 4])> = None;
    for s in &traj.samples {
        let rho = &s.state.rho;
        let u = &s.state.u;
        let l2sq = |f: &PeriodicField| (f * f).integrate();
        sup_sqrt_rho_u = sup_sqrt_rho_u.max(l2sq(&(&rho.powf(0.5) * u)).sqrt());
        sup_dx_rho_am = sup_dx_rho_am.max(l2sq(&rho.powf(p.alpha - 0.5).deriv(1)?).sqrt());
        sup_rho_inf = sup_rho_inf.max(rho.max());
        sup_inv = sup_inv.max(p.epsilon * rho.map(|r| r.powf(-0.25)).max());

        let visc = l2sq(&(&rho.powf(p.alpha / 2.0) * &u.deriv(1)?));
        let press = l2sq(&rho.powf((p.gamma + p.alpha - 1.0) / 2.0).deriv(1)?);
        let theta = if p.log_branch() { 1.0 } else { p.theta };
        let curv = l2sq(&rho.powf(theta).deriv(2)?);
        let q = rho.powf(theta / 2.0).deriv(1)?;
        let q2 = &q * &q;
        let quart = (&q2 * &q2).integrate();
        if let Some((tp, v)) = prev {
            let h = s.state.t - tp;
            int_visc += 0.5 * h * (v[0] + visc);
            int_press += 0.5 * h * (v[1] + press);
            int_curv += 0.5 * h * (v[2] + curv);
            int_quart += 0.5 * h * (v[3] + quart);
        }
        prev = Some((s.state.t, [visc, press, curv, quart]));
    }
    Ok([
        sup_sqrt_rho_u,
        sup_dx_rho_am,
        int_visc.sqrt(),
        int_press.sqrt(),
        int_curv.sqrt(),
        int_quart.powf(0.25),
        sup_rho_inf,
        sup_inv,
    ])
}

/// Uniformity report across a decreasing regularization sequence with
/// otherwise identical configurations.
pub fn uniform_bounds_report(runs: &[(RunConfig, Trajectory)]) -> Result<UniformBoundsReport> {
    if runs.is_empty() {
        return Err(Error::Config("uniform bounds report needs >= 1 run".into()));
    }
    let base = &runs[0].0;
    for (cfg, _) in runs.iter().skip(1) {
        let same = cfg.n == base.n
            && cfg.length == base.length
            && cfg.initial == base.initial
            && cfg.params.alpha == base.params.alpha
            && cfg.params.beta == base.params.beta
            && cfg.params.gamma == base.params.gamma;
        if !same {
            return Err(Error::Config(
                "uniform bounds report requires identical initial data and exponents across runs"
                    .into(),
            ));
        }
    }
    let epsilons: Vec<f64> = runs.iter().map(|(c, _)| c.params.epsilon).collect();
    if epsilons.windows(2).any(|w| w[1] >= w[0]) && epsilons.len() > 1 {
        return Err(Error::Config(
            "uniform bounds report requires a strictly decreasing epsilon list".into(),
        ));
    }
    let rows: Vec<[f64; 8]> = runs
        .iter()
        .map(|(c, t)| run_bounds(c, t))
        .collect::<Result<_>>()?;
    let mut flagged = Vec::new();
    if rows.len() > 1 {
        for (col, name) in UNIFORM_BOUND_COLUMNS.iter().enumerate() {
            let vals: Vec<f64> = rows.iter().map(|r| r[col]).collect();
            let monotone = vals.windows(2).all(|w| w[1] > w[0]);
            let first = vals[0].max(1e-300);
            if monotone && vals.last().unwrap() / first > 2.0 {
                flagged.push(*name);
            }
        }
    }
    Ok(UniformBoundsReport {
        epsilons,
        rows,
        flagged,
    })
}
