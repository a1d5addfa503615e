//! One-dimensional periodic Navier-Stokes-Korteweg simulator and
//! functional-analysis toolkit: spectral substrate, coefficient laws,
//! energy/entropy functionals, exponent-range admissibility analysis,
//! explicit time integration with identity-residual diagnostics, and the
//! configuration/orchestration layer behind the CLI.

pub mod coeffs;
pub mod coercivity;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod harness;
pub mod solver;

pub use coeffs::{derive_exponents, CoefficientLaw, ExponentParams};
pub use config::{parse_config, parse_full_config, RunConfig};
pub use error::{Error, Result};
pub use grid::{Grid, PeriodicField};
pub use solver::{State, TerminationReason, Trajectory};
