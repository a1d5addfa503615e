//! Run configuration: plain `key = value` text with `[section]` headers,
//! validated into a fully resolved [`RunConfig`]. The resolved form
//! serializes back to the same format (the sidecar written next to every
//! run) and reparses to an identical configuration.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::coeffs::{derive_exponents, CoefficientLaw, ExponentParams};
use crate::coercivity::MapSpec;
use crate::error::{Error, Result};
use crate::grid::{Grid, PeriodicField};

pub const SCHEMA_VERSION: &str = "nsk-csv-1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Trig {
    Sin,
    Cos,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub kind: Trig,
    pub k: u32,
    pub amp: f64,
}

/// `constant + sum of amp * trig(2 pi k x / L)` terms.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSpec {
    pub constant: f64,
    pub modes: Vec<Mode>,
}

impl FieldSpec {
    pub fn constant(c: f64) -> FieldSpec {
        FieldSpec {
            constant: c,
            modes: vec![],
        }
    }

    pub fn realize(&self, grid: &Arc<Grid>) -> PeriodicField {
        let length = grid.length();
        PeriodicField::from_fn(grid, |x| {
            let mut v = self.constant;
            for m in &self.modes {
                let arg = 2.0 * PI * m.k as f64 * x / length;
                v += m.amp
                    * match m.kind {
                        Trig::Sin => arg.sin(),
                        Trig::Cos => arg.cos(),
                    };
            }
            v
        })
    }

    /// Parse `"2.0 + 0.5 sin 1 + 0.1 cos 3"`.
    fn parse(text: &str, line: usize) -> Result<FieldSpec> {
        let mut spec = FieldSpec {
            constant: 0.0,
            modes: vec![],
        };
        for term in text.split('+') {
            let toks: Vec<&str> = term.split_whitespace().collect();
            match toks.as_slice() {
                [c] => {
                    spec.constant += parse_f64(c, line)?;
                }
                [amp, kind, k] => {
                    let kind = match *kind {
                        "sin" => Trig::Sin,
                        "cos" => Trig::Cos,
                        other => {
                            return Err(Error::Parse {
                                line,
                                msg: format!("expected sin or cos, got {other:?}"),
                            })
                        }
                    };
                    let k: u32 = k.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("malformed mode number {k:?}"),
                    })?;
                    spec.modes.push(Mode {
                        kind,
                        k,
                        amp: parse_f64(amp, line)?,
                    });
                }
                [] => {
                    return Err(Error::Parse {
                        line,
                        msg: "empty term in field expression".into(),
                    })
                }
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("cannot parse field term {term:?}"),
                    })
                }
            }
        }
        Ok(spec)
    }

    fn format(&self) -> String {
        let mut s = format!("{:e}", self.constant);
        for m in &self.modes {
            let kind = match m.kind {
                Trig::Sin => "sin",
                Trig::Cos => "cos",
            };
            s.push_str(&format!(" + {:e} {} {}", m.amp, kind, m.k));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialDataSpec {
    pub rho0: FieldSpec,
    pub u0: FieldSpec,
    /// Required lower bound on the realized initial density.
    pub floor: f64,
}

impl InitialDataSpec {
    /// Standard well-resolved initial pair used throughout the test suite.
    pub fn reference() -> InitialDataSpec {
        InitialDataSpec {
            rho0: FieldSpec {
                constant: 2.0,
                modes: vec![Mode {
                    kind: Trig::Sin,
                    k: 1,
                    amp: 0.5,
                }],
            },
            u0: FieldSpec {
                constant: 0.0,
                modes: vec![Mode {
                    kind: Trig::Sin,
                    k: 1,
                    amp: 0.1,
                }],
            },
            floor: 1e-6,
        }
    }

    pub fn preset(name: &str) -> Result<InitialDataSpec> {
        match name {
            "reference" => Ok(InitialDataSpec::reference()),
            "equilibrium" => Ok(InitialDataSpec {
                rho0: FieldSpec::constant(1.0),
                u0: FieldSpec::constant(0.0),
                floor: 1e-6,
            }),
            other => Err(Error::Config(format!("unknown initial-data preset {other:?}"))),
        }
    }
}

/// Fully resolved experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub length: f64,
    pub params: ExponentParams,
    pub initial: InitialDataSpec,
    pub cfl: f64,
    pub t_end: f64,
    pub sample_every: usize,
    pub precision: usize,
    pub seed: u64,
}

impl RunConfig {
    /// Reference configuration: `n = 256`, quantum-case exponents, small
    /// regularization, `t_end = 0.05`, `cfl = 0.25`.
    pub fn reference() -> RunConfig {
        RunConfig {
            n: 256,
            length: 1.0,
            params: derive_exponents(1.0, -1.0, 2.0, 0.01).unwrap(),
            initial: InitialDataSpec::reference(),
            cfl: 0.25,
            t_end: 0.05,
            sample_every: 10,
            precision: 17,
            seed: 0,
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.n, self.length)
    }

    pub fn law(&self) -> CoefficientLaw {
        CoefficientLaw::new(self.params)
    }

    /// Realize the initial pair and enforce the density floor.
    pub fn realize_initial(&self) -> Result<(PeriodicField, PeriodicField)> {
        let grid = self.grid()?;
        let rho0 = self.initial.rho0.realize(&grid);
        let u0 = self.initial.u0.realize(&grid);
        let min = rho0.min();
        if min < self.initial.floor {
            return Err(Error::Config(format!(
                "initial density minimum {min:.6e} violates the floor {:.6e}",
                self.initial.floor
            )));
        }
        Ok((rho0, u0))
    }

    fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "requires 0 < cfl <= 1, got cfl = {}",
                self.cfl
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Config(format!(
                "requires t_end > 0, got t_end = {}",
                self.t_end
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::Config("requires sample_every >= 1".into()));
        }
        if !(self.initial.floor > 0.0) {
            return Err(Error::Config(format!(
                "requires floor > 0, got floor = {}",
                self.initial.floor
            )));
        }
        self.realize_initial()?;
        Ok(())
    }

    /// Resolved configuration in the input format; reparses identically.
    pub fn to_ini(&self) -> String {
        let p = &self.params;
        format!(
            "[grid]\nn = {}\nlength = {:e}\n\n[exponents]\nalpha = {:e}\nbeta = {:e}\ngamma = {:e}\nepsilon = {:e}\n\n[initial]\nrho0 = {}\nu0 = {}\nfloor = {:e}\n\n[integrator]\ncfl = {:e}\nt_end = {:e}\nsample_every = {}\n\n[output]\nprecision = {}\nseed = {}\n",
            self.n,
            self.length,
            p.alpha,
            p.beta,
            p.gamma,
            p.epsilon,
            self.initial.rho0.format(),
            self.initial.u0.format(),
            self.initial.floor,
            self.cfl,
            self.t_end,
            self.sample_every,
            self.precision,
            self.seed,
        )
    }
}

/// Sweep description: one configuration key swept over a value list.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub key: String,
    pub values: Vec<f64>,
}

/// Everything a config file can describe.
#[derive(Clone, Debug)]
pub struct FullConfig {
    pub run: RunConfig,
    pub map: MapSpec,
    pub sweep: Option<SweepSpec>,
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("malformed number {s:?}"),
    })
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("malformed integer {s:?}"),
    })
}

fn parse_u64(s: &str, line: usize) -> Result<u64> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("malformed integer {s:?}"),
    })
}

fn parse_bool(s: &str, line: usize) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Parse {
            line,
            msg: format!("malformed boolean {other:?}"),
        }),
    }
}

/// Parse and validate a full configuration file.
pub fn parse_full_config(text: &str) -> Result<FullConfig> {
    let mut section = String::new();
    let mut alpha: Option<f64> = None;
    let mut beta: Option<f64> = None;
    let mut gamma = 2.0;
    let mut epsilon = 0.01;
    let mut n = 256usize;
    let mut length = 1.0;
    let mut rho0: Option<FieldSpec> = None;
    let mut u0: Option<FieldSpec> = None;
    let mut floor = 1e-6;
    let mut preset: Option<String> = None;
    let mut cfl = 0.25;
    let mut t_end = 0.05;
    let mut sample_every = 10usize;
    let mut precision = 17usize;
    let mut seed = 0u64;
    let mut map = MapSpec::default();
    let mut search = map.search_budget.is_some();
    let mut budget = map.search_budget.unwrap_or(5000);
    let mut sweep_key: Option<String> = None;
    let mut sweep_values: Option<Vec<f64>> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find(['#', ';']) {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("malformed section header {line:?}"),
                });
            }
            section = line[1..line.len() - 1].trim().to_string();
            match section.as_str() {
                "grid" | "exponents" | "initial" | "integrator" | "output" | "map" | "sweep" => {}
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unknown section [{other}]"),
                    })
                }
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("expected key = value, got {line:?}"),
        })?;
        let key = key.trim();
        let value = value.trim();
        match (section.as_str(), key) {
            ("grid", "n") => n = parse_usize(value, lineno)?,
            ("grid", "length") => length = parse_f64(value, lineno)?,
            ("exponents", "alpha") => alpha = Some(parse_f64(value, lineno)?),
            ("exponents", "beta") => beta = Some(parse_f64(value, lineno)?),
            ("exponents", "gamma") => gamma = parse_f64(value, lineno)?,
            ("exponents", "epsilon") => epsilon = parse_f64(value, lineno)?,
            ("initial", "rho0") => rho0 = Some(FieldSpec::parse(value, lineno)?),
            ("initial", "u0") => u0 = Some(FieldSpec::parse(value, lineno)?),
            ("initial", "floor") => floor = parse_f64(value, lineno)?,
            ("initial", "preset") => preset = Some(value.to_string()),
            ("integrator", "cfl") => cfl = parse_f64(value, lineno)?,
            ("integrator", "t_end") => t_end = parse_f64(value, lineno)?,
            ("integrator", "sample_every") => sample_every = parse_usize(value, lineno)?,
            ("output", "precision") => precision = parse_usize(value, lineno)?,
            ("output", "seed") => seed = parse_u64(value, lineno)?,
            ("map", "alpha_min") => map.alpha_min = parse_f64(value, lineno)?,
            ("map", "alpha_max") => map.alpha_max = parse_f64(value, lineno)?,
            ("map", "beta_min") => map.beta_min = parse_f64(value, lineno)?,
            ("map", "beta_max") => map.beta_max = parse_f64(value, lineno)?,
            ("map", "resolution") => map.resolution = parse_usize(value, lineno)?,
            ("map", "samples_per_cell") => map.samples_per_cell = parse_usize(value, lineno)?,
            ("map", "search") => search = parse_bool(value, lineno)?,
            ("map", "budget") => budget = parse_u64(value, lineno)?,
            ("sweep", "key") => sweep_key = Some(value.to_string()),
            ("sweep", "values") => {
                let vals: Result<Vec<f64>> = value
                    .split(',')
                    .map(|v| parse_f64(v, lineno))
                    .collect();
                sweep_values = Some(vals?);
            }
            (sec, key) => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: if sec.is_empty() {
                        format!("unknown key {key:?} outside any section")
                    } else {
                        format!("unknown key {key:?} in section [{sec}]")
                    },
                })
            }
        }
    }

    let alpha = alpha.ok_or_else(|| Error::Config("missing required key exponents.alpha".into()))?;
    let beta = beta.ok_or_else(|| Error::Config("missing required key exponents.beta".into()))?;
    let params = derive_exponents(alpha, beta, gamma, epsilon)?;

    let initial = if let Some(name) = preset {
        if rho0.is_some() || u0.is_some() {
            return Err(Error::Config(
                "initial.preset cannot be combined with explicit rho0/u0".into(),
            ));
        }
        let mut spec = InitialDataSpec::preset(&name)?;
        spec.floor = floor;
        spec
    } else {
        let base = InitialDataSpec::reference();
        InitialDataSpec {
            rho0: rho0.unwrap_or(base.rho0),
            u0: u0.unwrap_or(base.u0),
            floor,
        }
    };

    let run = RunConfig {
        n,
        length,
        params,
        initial,
        cfl,
        t_end,
        sample_every,
        precision,
        seed,
    };
    run.validate()?;
    map.search_budget = if search { Some(budget) } else { None };
    map.seed = seed;

    let sweep = match (sweep_key, sweep_values) {
        (Some(key), Some(values)) => {
            if values.is_empty() {
                return Err(Error::Config("sweep.values must not be empty".into()));
            }
            Some(SweepSpec { key, values })
        }
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "sweep requires both sweep.key and sweep.values".into(),
            ))
        }
    };

    Ok(FullConfig { run, map, sweep })
}

/// Parse and validate a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    Ok(parse_full_config(text)?.run)
}

/// Apply one swept value to a copy of the base configuration.
pub fn apply_sweep_value(base: &RunConfig, key: &str, value: f64) -> Result<RunConfig> {
    let mut cfg = base.clone();
    let p = cfg.params;
    match key {
        "exponents.alpha" => cfg.params = derive_exponents(value, p.beta, p.gamma, p.epsilon)?,
        "exponents.beta" => cfg.params = derive_exponents(p.alpha, value, p.gamma, p.epsilon)?,
        "exponents.gamma" => cfg.params = derive_exponents(p.alpha, p.beta, value, p.epsilon)?,
        "exponents.epsilon" => cfg.params = derive_exponents(p.alpha, p.beta, p.gamma, value)?,
        "integrator.cfl" => cfg.cfl = value,
        "integrator.t_end" => cfg.t_end = value,
        "grid.n" => cfg.n = value as usize,
        other => {
            return Err(Error::Config(format!(
                "unknown sweep key {other:?}; expected exponents.*, integrator.cfl, integrator.t_end or grid.n"
            )))
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
