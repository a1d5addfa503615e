//! `nsk` — runs, identity checks, admissibility maps, convergence studies
//! and parameter sweeps for the 1D periodic Navier-Stokes-Korteweg system.
//!
//! Exit codes: 0 success, 2 validation/configuration error, 3 solver
//! termination (positivity or stability failure).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nsk_core::config::{parse_full_config, FullConfig};
use nsk_core::harness;
use nsk_core::solver::TerminationReason;
use nsk_core::Error;

#[derive(Parser)]
#[command(name = "nsk", version, about = "1D periodic Navier-Stokes-Korteweg toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (key = value with [section] headers)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV artifacts
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for maps and sweeps (runs stay single-threaded)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configured run and write diagnostics.csv
    Run(Common),
    /// Evaluate the functional identity suite on the configured profile
    Check(Common),
    /// Raster the admissibility map over the (alpha, beta) plane
    Map(Common),
    /// Step-size and spatial refinement study
    Converge(Common),
    /// Run the configured sweep matrix (parallel across runs)
    Sweep(Common),
}

fn load(common: &Common) -> Result<FullConfig, Error> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("{}: {e}", common.config.display())))?;
    let mut full = parse_full_config(&text)?;
    if let Some(seed) = common.seed {
        full.run.seed = seed;
        full.map.seed = seed;
    }
    Ok(full)
}

fn configure_pool(jobs: usize) {
    if jobs > 0 {
        // ignore failure: the global pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
}

fn dispatch(cmd: &Command) -> Result<i32, Error> {
    match cmd {
        Command::Run(c) => {
            let full = load(c)?;
            let traj = harness::run_to_dir(&full.run, &c.out)?;
            let last = traj.final_state();
            println!(
                "run: {} after {} steps at t = {:.6e} (min rho {:.6e})",
                traj.termination.as_str(),
                traj.steps,
                last.t,
                last.rho.min()
            );
            println!("wrote {}", c.out.join("diagnostics.csv").display());
            Ok(traj.termination.exit_code())
        }
        Command::Check(c) => {
            let full = load(c)?;
            let outcome = harness::check_report(&full.run)?;
            for line in &outcome.lines {
                println!(
                    "{:<40} {:>12.4e}  (<= {:.1e})  {}",
                    line.name,
                    line.value,
                    line.threshold,
                    if line.pass { "ok" } else { "FAIL" }
                );
            }
            if outcome.all_pass() {
                println!("all identity checks passed");
                Ok(0)
            } else {
                println!("identity checks FAILED");
                Ok(2)
            }
        }
        Command::Map(c) => {
            configure_pool(c.jobs);
            let full = load(c)?;
            let verdicts = harness::map_to_dir(&full.map, &c.out)?;
            let found = verdicts.iter().filter(|v| v.counterexample.is_some()).count();
            println!(
                "map: {} cells rastered, {} counterexamples certified",
                verdicts.len(),
                found
            );
            println!("wrote {}", c.out.join("map.csv").display());
            Ok(0)
        }
        Command::Converge(c) => {
            let full = load(c)?;
            let report = harness::converge_to_dir(&full.run, &c.out)?;
            println!(
                "dt refinement: e(dt) = {:.4e}, e(dt/2) = {:.4e}, order = {:.2}",
                report.dt_error_coarse, report.dt_error_fine, report.dt_order
            );
            for (n, e) in &report.space_errors {
                println!("space n = {n:4}: relative rhs error {e:.4e}");
            }
            println!("wrote {}", c.out.join("convergence.csv").display());
            Ok(0)
        }
        Command::Sweep(c) => {
            configure_pool(c.jobs);
            let full = load(c)?;
            let sweep = full.sweep.clone().ok_or_else(|| {
                Error::Config("sweep command requires a [sweep] section".into())
            })?;
            let outcome = harness::sweep_to_dir(&full.run, &sweep, &c.out)?;
            let mut code = 0;
            for (cfg, term) in outcome.configs.iter().zip(&outcome.terminations) {
                println!(
                    "{} = {:e}: {}",
                    sweep.key,
                    match sweep.key.as_str() {
                        "exponents.epsilon" => cfg.params.epsilon,
                        "exponents.alpha" => cfg.params.alpha,
                        "exponents.beta" => cfg.params.beta,
                        "exponents.gamma" => cfg.params.gamma,
                        "integrator.cfl" => cfg.cfl,
                        "integrator.t_end" => cfg.t_end,
                        _ => cfg.n as f64,
                    },
                    term.as_str()
                );
                if !matches!(term, TerminationReason::Completed) {
                    code = 3;
                }
            }
            if outcome.uniform_bounds.is_some() {
                println!("wrote {}", c.out.join("uniform_bounds.csv").display());
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
