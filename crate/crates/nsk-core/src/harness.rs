//! Orchestration behind the CLI: run/check/map/converge/sweep drivers and
//! the CSV emission layer. Every artifact is written with 17 significant
//! digits and reparses bit-identically; sidecar files carry the resolved
//! configuration, seed and schema version.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::coercivity::{admissibility_map, AdmissibilityVerdict, Analytic, MapSpec, Point};
use crate::config::{apply_sweep_value, FullConfig, RunConfig, SweepSpec, SCHEMA_VERSION};
use crate::diagnostics::{
    records_for, uniform_bounds_report, DiagnosticsRecord, UniformBoundsReport, RECORD_COLUMNS,
    UNIFORM_BOUND_COLUMNS,
};
use crate::error::{Error, Result};
use crate::functionals;
use crate::grid::Grid;
use crate::solver::{integrate_fixed_dt, rhs, run, stable_dt, State, Trajectory};

/// Decimal text at 17 significant digits; residual studies must be
/// reproducible from the CSV alone.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::new();
    out.push_str(&RECORD_COLUMNS.join(","));
    out.push('\n');
    for r in records {
        let row: Vec<String> = r.as_array().iter().map(|v| fmt_g17(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty diagnostics csv".into(),
    })?;
    if header != RECORD_COLUMNS.join(",") {
        return Err(Error::Parse {
            line: 1,
            msg: "diagnostics csv header does not match the schema".into(),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != RECORD_COLUMNS.len() {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected {} columns, got {}", RECORD_COLUMNS.len(), fields.len()),
            });
        }
        let mut vals = [0.0f64; 19];
        for (slot, field) in vals.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line: i + 2,
                msg: format!("malformed number {field:?}"),
            })?;
        }
        records.push(DiagnosticsRecord::from_array(vals));
    }
    Ok(records)
}

fn sidecar(cfg: &RunConfig) -> String {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!(
        "# schema = {SCHEMA_VERSION}\n# seed = {}\n# written_unix = {stamp}\n{}",
        cfg.seed,
        cfg.to_ini()
    )
}

/// Integrate the configured run and write `diagnostics.csv` plus the
/// resolved-config sidecar into `dir`.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<Trajectory> {
    let traj = run(cfg)?;
    let records = records_for(&traj, &cfg.law())?;
    write_file(&dir.join("diagnostics.csv"), &diagnostics_csv(&records))?;
    write_file(&dir.join("config.resolved.ini"), &sidecar(cfg))?;
    Ok(traj)
}

/// One line of the identity-check report.
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub lines: Vec<CheckLine>,
}

impl CheckOutcome {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }
}

/// Run the cross-form identity suite on the configured initial profile.
pub fn check_report(cfg: &RunConfig) -> Result<CheckOutcome> {
    let law = cfg.law();
    let p = cfg.params;
    let (rho, u) = cfg.realize_initial()?;
    let mut lines = Vec::new();
    let mut push = |name: &'static str, value: f64, threshold: f64| {
        lines.push(CheckLine {
            name,
            value,
            threshold,
            pass: value <= threshold,
        });
    };

    let jd = functionals::j_direct(&rho, &law)?;
    let jg = functionals::j_general_form(&rho, &law, p.delta)?;
    let scale = jd.abs().max(1e-12);
    push("j_direct_vs_j_general", (jd - jg).abs() / scale, 1e-8);
    if law.is_power_law() && !p.log_branch() {
        let jt = functionals::j_theta_form(&rho, &p)?;
        push("j_direct_vs_j_theta", (jd - jt).abs() / scale, 1e-8);
    }

    let theta = if p.log_branch() { 1.0 } else { p.theta };
    let (bl, br) = functionals::bernis_pair(&rho, theta)?;
    push("bernis_lhs_over_rhs", if br > 0.0 { bl / br } else { 0.0 }, 1.0 + 1e-10);

    if p.delta != 1.0 {
        let (gl, gr) = functionals::general_bernis_pair(&rho, &law, p.delta)?;
        push(
            "general_bernis_lhs_over_rhs",
            if gr > 0.0 { gl / gr } else { 0.0 },
            1.0 + 1e-10,
        );
    }

    if law.is_power_law() && !p.log_branch() && !p.beta_excluded() {
        let (r1, r2) = functionals::korteweg_decomposition_residuals(&rho, &p)?;
        push("korteweg_decomposition_beta_residual", r1, 1e-8);
        push("korteweg_decomposition_theta_residual", r2, 1e-8);
    }

    // integration-by-parts identity in the power variable
    let g = rho.powf(theta);
    let gp = g.deriv(1)?;
    let gpp = g.deriv(2)?;
    let gp2 = &gp * &gp;
    let lhs = (&(&gp2 / &g) * &gpp).integrate();
    let rhs_v = (&(&gp2 * &gp2) / &(&g * &g)).integrate() / 3.0;
    push(
        "integration_by_parts_identity",
        (lhs - rhs_v).abs() / rhs_v.abs().max(1e-12),
        1e-8,
    );

    push(
        "modal_tail_fraction",
        rho.modal_tail_fraction(0.1),
        functionals::RESOLUTION_TAIL_TOL,
    );

    // the energy report must be self-consistent with its parts
    let e = functionals::energy(&rho, &u, &law)?;
    push(
        "energy_term_consistency",
        (e.total() - (e.kinetic + e.pressure + e.capillary)).abs(),
        1e-14 * e.total().abs().max(1.0),
    );

    Ok(CheckOutcome { lines })
}

pub const MAP_COLUMNS: [&str; 7] = [
    "alpha",
    "beta",
    "analytic",
    "coefficient",
    "sampled_min_J",
    "counterexample_found",
    "seed",
];

pub fn map_csv(verdicts: &[AdmissibilityVerdict]) -> String {
    let mut out = String::new();
    out.push_str(&MAP_COLUMNS.join(","));
    out.push('\n');
    for v in verdicts {
        let (alpha, beta) = match v.point {
            Point::AlphaBeta { alpha, beta } => (alpha, beta),
            Point::Delta { delta } => (f64::NAN, delta),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_g17(alpha),
            fmt_g17(beta),
            v.analytic.as_str(),
            fmt_g17(v.coefficient.unwrap_or(f64::NAN)),
            fmt_g17(v.sampled_min_j.unwrap_or(f64::NAN)),
            v.counterexample.is_some(),
            v.seed,
        ));
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct MapRow {
    pub alpha: f64,
    pub beta: f64,
    pub analytic: Analytic,
    pub coefficient: f64,
    pub sampled_min_j: f64,
    pub counterexample_found: bool,
    pub seed: u64,
}

pub fn parse_map_csv(text: &str) -> Result<Vec<MapRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty map csv".into(),
    })?;
    if header != MAP_COLUMNS.join(",") {
        return Err(Error::Parse {
            line: 1,
            msg: "map csv header does not match the schema".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != MAP_COLUMNS.len() {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected {} columns", MAP_COLUMNS.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: i + 2,
                msg: format!("malformed number {s:?}"),
            })
        };
        rows.push(MapRow {
            alpha: num(f[0])?,
            beta: num(f[1])?,
            analytic: f[2].parse()?,
            coefficient: num(f[3])?,
            sampled_min_j: num(f[4])?,
            counterexample_found: f[5] == "true",
            seed: f[6].parse().map_err(|_| Error::Parse {
                line: i + 2,
                msg: format!("malformed seed {:?}", f[6]),
            })?,
        });
    }
    Ok(rows)
}

/// Drive the admissibility raster and write `map.csv`.
pub fn map_to_dir(spec: &MapSpec, dir: &Path) -> Result<Vec<AdmissibilityVerdict>> {
    let verdicts = admissibility_map(spec)?;
    write_file(&dir.join("map.csv"), &map_csv(&verdicts))?;
    Ok(verdicts)
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub dt_error_coarse: f64,
    pub dt_error_fine: f64,
    pub dt_order: f64,
    /// `(n, relative rhs error vs the fine reference)`.
    pub space_errors: Vec<(usize, f64)>,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value\n");
        out.push_str(&format!("dt_error_coarse,{}\n", fmt_g17(self.dt_error_coarse)));
        out.push_str(&format!("dt_error_fine,{}\n", fmt_g17(self.dt_error_fine)));
        out.push_str(&format!("dt_order,{}\n", fmt_g17(self.dt_order)));
        for (n, e) in &self.space_errors {
            out.push_str(&format!("space_error_n{},{}\n", n, fmt_g17(*e)));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ConvergenceReport> {
        let mut report = ConvergenceReport {
            dt_error_coarse: f64::NAN,
            dt_error_fine: f64::NAN,
            dt_order: f64::NAN,
            space_errors: Vec::new(),
        };
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line.split_once(',').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected quantity,value, got {line:?}"),
            })?;
            let v: f64 = value.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("malformed number {value:?}"),
            })?;
            match key {
                "dt_error_coarse" => report.dt_error_coarse = v,
                "dt_error_fine" => report.dt_error_fine = v,
                "dt_order" => report.dt_order = v,
                _ => {
                    let n = key
                        .strip_prefix("space_error_n")
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::Parse {
                            line: i + 1,
                            msg: format!("unknown quantity {key:?}"),
                        })?;
                    report.space_errors.push((n, v));
                }
            }
        }
        Ok(report)
    }
}

/// Richardson triple in the step size plus a spectral space-refinement
/// check of the semidiscrete tendencies.
pub fn converge_report(cfg: &RunConfig) -> Result<ConvergenceReport> {
    let law = cfg.law();
    let (rho0, u0) = cfg.realize_initial()?;
    let state0 = State {
        t: 0.0,
        rho: rho0,
        u: u0,
    };
    let dt0 = stable_dt(&state0, &law, cfg.cfl);
    let steps = ((cfg.t_end / dt0).ceil() as usize).max(4);
    let dt = cfg.t_end / steps as f64;
    let fail = |e| Error::Config(format!("fixed-step integration failed: {e:?}"));
    let a = integrate_fixed_dt(&state0, &law, dt, steps).map_err(fail)?;
    let b = integrate_fixed_dt(&state0, &law, dt / 2.0, 2 * steps).map_err(fail)?;
    let c = integrate_fixed_dt(&state0, &law, dt / 4.0, 4 * steps).map_err(fail)?;
    let e1 = (&a.rho - &b.rho).linf() + (&a.u - &b.u).linf();
    let e2 = (&b.rho - &c.rho).linf() + (&b.u - &c.u).linf();
    let dt_order = (e1 / e2).log2();

    // manufactured band-limited pair, rough enough that truncation error is
    // visible at n = 64 and collapses spectrally by n = 128
    let mut space_errors = Vec::new();
    let fine = Grid::new(1024, cfg.length)?;
    let manufactured = |g: &std::sync::Arc<Grid>| {
        let length = g.length();
        (
            crate::grid::PeriodicField::from_fn(g, |x| {
                1.1 + (2.0 * std::f64::consts::PI * x / length).sin()
            }),
            crate::grid::PeriodicField::from_fn(g, |x| {
                0.5 * (2.0 * std::f64::consts::PI * x / length).cos()
            }),
        )
    };
    let (rho_f, u_f) = manufactured(&fine);
    let (_, du_ref) = rhs(&rho_f, &u_f, &law)?;
    for n in [64usize, 128] {
        let g = Grid::new(n, cfg.length)?;
        let (rho_n, u_n) = manufactured(&g);
        let (_, du_n) = rhs(&rho_n, &u_n, &law)?;
        let err = (&du_n.resample(&fine)? - &du_ref).linf() / du_ref.linf();
        space_errors.push((n, err));
    }
    Ok(ConvergenceReport {
        dt_error_coarse: e1,
        dt_error_fine: e2,
        dt_order,
        space_errors,
    })
}

pub fn converge_to_dir(cfg: &RunConfig, dir: &Path) -> Result<ConvergenceReport> {
    let report = converge_report(cfg)?;
    write_file(&dir.join("convergence.csv"), &report.to_csv())?;
    write_file(&dir.join("config.resolved.ini"), &sidecar(cfg))?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub configs: Vec<RunConfig>,
    pub terminations: Vec<crate::solver::TerminationReason>,
    pub run_dirs: Vec<PathBuf>,
    pub uniform_bounds: Option<UniformBoundsReport>,
}

pub fn uniform_bounds_csv(report: &UniformBoundsReport) -> String {
    let mut out = String::from("epsilon,");
    out.push_str(&UNIFORM_BOUND_COLUMNS.join(","));
    out.push('\n');
    for (eps, row) in report.epsilons.iter().zip(&report.rows) {
        let mut fields = vec![fmt_g17(*eps)];
        fields.extend(row.iter().map(|v| fmt_g17(*v)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// `(epsilon, columns)` rows of a uniformity table.
pub fn parse_uniform_bounds_csv(text: &str) -> Result<Vec<(f64, [f64; 8])>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty uniform-bounds csv".into(),
    })?;
    if header != format!("epsilon,{}", UNIFORM_BOUND_COLUMNS.join(",")) {
        return Err(Error::Parse {
            line: 1,
            msg: "uniform-bounds csv header does not match the schema".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected 9 columns, got {}", fields.len()),
            });
        }
        let mut vals = [0.0f64; 9];
        for (slot, field) in vals.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line: i + 2,
                msg: format!("malformed number {field:?}"),
            })?;
        }
        let mut row = [0.0f64; 8];
        row.copy_from_slice(&vals[1..]);
        rows.push((vals[0], row));
    }
    Ok(rows)
}

/// Run the configured matrix; runs are independent and execute in
/// parallel (never within a run). An epsilon sweep additionally emits the
/// uniformity report.
pub fn sweep_to_dir(base: &RunConfig, sweep: &SweepSpec, dir: &Path) -> Result<SweepOutcome> {
    let configs: Vec<RunConfig> = sweep
        .values
        .iter()
        .map(|v| apply_sweep_value(base, &sweep.key, *v))
        .collect::<Result<_>>()?;
    let trajectories: Vec<Trajectory> = configs
        .par_iter()
        .map(run)
        .collect::<Result<_>>()?;
    let mut run_dirs = Vec::new();
    for (i, (cfg, traj)) in configs.iter().zip(&trajectories).enumerate() {
        let sub = dir.join(format!("run_{i:03}"));
        let records = records_for(traj, &cfg.law())?;
        write_file(&sub.join("diagnostics.csv"), &diagnostics_csv(&records))?;
        write_file(&sub.join("config.resolved.ini"), &sidecar(cfg))?;
        run_dirs.push(sub);
    }
    let uniform_bounds = if sweep.key == "exponents.epsilon"
        && trajectories.iter().all(|t| t.completed())
    {
        let pairs: Vec<(RunConfig, Trajectory)> = configs
            .iter()
            .cloned()
            .zip(trajectories.iter().cloned())
            .collect();
        let report = uniform_bounds_report(&pairs)?;
        write_file(&dir.join("uniform_bounds.csv"), &uniform_bounds_csv(&report))?;
        Some(report)
    } else {
        None
    };
    Ok(SweepOutcome {
        terminations: trajectories.iter().map(|t| t.termination.clone()).collect(),
        configs,
        run_dirs,
        uniform_bounds,
    })
}

/// Convenience entry for the CLI: run every driver named by the config.
pub fn full_config_summary(full: &FullConfig) -> String {
    let mut s = format!(
        "n = {}, alpha = {}, beta = {}, gamma = {}, epsilon = {}\n",
        full.run.n,
        full.run.params.alpha,
        full.run.params.beta,
        full.run.params.gamma,
        full.run.params.epsilon
    );
    if let Some(sweep) = &full.sweep {
        s.push_str(&format!("sweep {} over {:?}\n", sweep.key, sweep.values));
    }
    s
}
