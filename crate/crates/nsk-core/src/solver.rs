//! Explicit time integration of the regularized system on the torus:
//! conservative mass transport, velocity-form momentum update, classical
//! RK4 with a three-way advective/viscous/capillary time-step restriction,
//! strict positivity guarding (never clamped), and periodic sampling.

use crate::coeffs::CoefficientLaw;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::grid::PeriodicField;

/// A `(rho, u)` pair at one time instant.
#[derive(Clone, Debug)]
pub struct State {
    pub t: f64,
    pub rho: PeriodicField,
    pub u: PeriodicField,
}

impl State {
    pub fn min_rho(&self) -> f64 {
        self.rho.min()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TerminationReason {
    Completed,
    PositivityFailure { t: f64, stage: u8, min_rho: f64 },
    StabilityFailure { t: f64 },
}

impl TerminationReason {
    pub fn exit_code(&self) -> i32 {
        match self {
            TerminationReason::Completed => 0,
            _ => 3,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::Completed => "completed",
            TerminationReason::PositivityFailure { .. } => "positivity_failure",
            TerminationReason::StabilityFailure { .. } => "stability_failure",
        }
    }
}

/// One sampled state together with the step size that produced it.
#[derive(Clone, Debug)]
pub struct Sample {
    pub state: State,
    pub dt: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub termination: TerminationReason,
    pub steps: usize,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.termination == TerminationReason::Completed
    }

    pub fn final_state(&self) -> &State {
        &self.samples.last().expect("trajectory holds >= 1 sample").state
    }
}

/// Stage-resolved step failure; `run` converts these into termination
/// reasons rather than errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepFailure {
    Positivity { stage: u8, min: f64 },
    NonFinite { stage: u8 },
}

/// Tendencies of the regularized system in velocity form. The continuity
/// tendency is conservative (an exact spectral divergence), so the mean of
/// `rho` is preserved to roundoff. All products are dealiased.
pub fn rhs(rho: &PeriodicField, u: &PeriodicField, law: &CoefficientLaw) -> Result<(PeriodicField, PeriodicField)> {
    law.ensure_positive(rho)?;
    let p = &law.params;
    let inv_a2 = 1.0 / (p.alpha * p.alpha);

    let momentum = (rho * u).dealias();
    let d_rho = momentum.deriv(1)?.scale(-1.0);

    let advection = (&momentum * u).dealias().deriv(1)?;
    let viscous = (&law.mu(rho)? * &u.deriv(1)?).dealias().deriv(1)?;
    let pressure = rho.powf(p.gamma).dealias().deriv(1)?;

    // Korteweg force in the two-term form of the regularized system.
    let mu = law.mu(rho)?;
    let mu_x = mu.deriv(1)?;
    let mu_xx = mu.deriv(2)?;
    let g1 = (&(&rho.powf(p.delta) * &law.mu_prime(rho)?) * &mu_xx).dealias();
    let k_1 = (rho * &g1.deriv(1)?).dealias().scale(inv_a2);
    let g2 = (&rho.powf(p.delta - 1.0) * &(&mu_x * &mu_x)).dealias();
    let k_2 = (rho * &g2.deriv(1)?)
        .dealias()
        .scale(0.5 * p.delta * inv_a2);

    // d_u = [-dx(rho u^2) + dx(mu dx u) - dx rho^gamma + K - u d_rho] / rho
    let transport = (u * &d_rho).dealias();
    let numerator = &(&(&(&(&advection.scale(-1.0) + &viscous) - &pressure) + &k_1) + &k_2)
        - &transport;
    let d_u = (&numerator / rho).dealias();
    d_rho.ensure_finite("continuity tendency")?;
    d_u.ensure_finite("momentum tendency")?;
    Ok((d_rho, d_u))
}

/// Three-way explicit step restriction
/// `dt = cfl * min(dx/max|u|, dx^2/max(mu/rho), dx^2/max(sqrt(rho k)))`.
/// Returns a `1e-12` floor when the fields are degenerate; the following
/// step then surfaces as a stability failure.
pub fn stable_dt(state: &State, law: &CoefficientLaw, cfl: f64) -> f64 {
    let dx = state.rho.grid().spacing();
    let umax = state.u.linf();
    let mut bound = f64::INFINITY;
    if umax > 0.0 {
        bound = bound.min(dx / umax);
    }
    let mut diffusivity: f64 = 0.0;
    for &r in state.rho.values() {
        if !(r > 0.0) {
            return 1e-12;
        }
        diffusivity = diffusivity
            .max(law.mu_bar_scalar(r))
            .max(law.mu_tilde_scalar(r));
    }
    if diffusivity > 0.0 {
        bound = bound.min(dx * dx / diffusivity);
    }
    let dt = cfl * bound;
    if dt.is_finite() && dt > 0.0 {
        dt
    } else {
        1e-12
    }
}

fn stage_state(
    base: &State,
    d_rho: &PeriodicField,
    d_u: &PeriodicField,
    dt: f64,
    t: f64,
    stage: u8,
) -> std::result::Result<State, StepFailure> {
    let rho = (&base.rho + &d_rho.scale(dt)).dealias();
    let u = (&base.u + &d_u.scale(dt)).dealias();
    if !rho.is_finite() || !u.is_finite() {
        return Err(StepFailure::NonFinite { stage });
    }
    let min = rho.min();
    if !(min > 0.0) {
        return Err(StepFailure::Positivity { stage, min });
    }
    Ok(State { t, rho, u })
}

fn tendencies(
    state: &State,
    law: &CoefficientLaw,
    stage: u8,
) -> std::result::Result<(PeriodicField, PeriodicField), StepFailure> {
    match rhs(&state.rho, &state.u, law) {
        Ok(t) => Ok(t),
        Err(Error::Positivity { min }) => Err(StepFailure::Positivity { stage, min }),
        Err(_) => Err(StepFailure::NonFinite { stage }),
    }
}

/// Classical RK4 update; fields are dealiased and positivity-checked after
/// every stage.
pub fn step(state: &State, dt: f64, law: &CoefficientLaw) -> std::result::Result<State, StepFailure> {
    assert!(dt > 0.0, "step called with nonpositive dt");
    let (k1r, k1u) = tendencies(state, law, 1)?;
    let s2 = stage_state(state, &k1r, &k1u, dt / 2.0, state.t + dt / 2.0, 1)?;
    let (k2r, k2u) = tendencies(&s2, law, 2)?;
    let s3 = stage_state(state, &k2r, &k2u, dt / 2.0, state.t + dt / 2.0, 2)?;
    let (k3r, k3u) = tendencies(&s3, law, 3)?;
    let s4 = stage_state(state, &k3r, &k3u, dt, state.t + dt, 3)?;
    let (k4r, k4u) = tendencies(&s4, law, 4)?;

    let combine = |k1: &PeriodicField, k2: &PeriodicField, k3: &PeriodicField, k4: &PeriodicField| {
        &(&(k1 + &k2.scale(2.0)) + &k3.scale(2.0)) + k4
    };
    stage_state(
        state,
        &combine(&k1r, &k2r, &k3r, &k4r),
        &combine(&k1u, &k2u, &k3u, &k4u),
        dt / 6.0,
        state.t + dt,
        4,
    )
}

/// Fixed-step integration, used by the convergence studies.
pub fn integrate_fixed_dt(
    state0: &State,
    law: &CoefficientLaw,
    dt: f64,
    steps: usize,
) -> std::result::Result<State, StepFailure> {
    let mut state = state0.clone();
    for _ in 0..steps {
        state = step(&state, dt, law)?;
    }
    Ok(state)
}

const MAX_STEPS: usize = 20_000_000;

/// Integrate the configured problem to `t_end` with adaptive explicit
/// stepping, sampling every `sample_every` steps. Positivity loss and
/// nonfinite fields terminate the run with the corresponding reason; they
/// are recorded, not raised.
pub fn run(config: &RunConfig) -> Result<Trajectory> {
    let law = config.law();
    let (rho0, u0) = config.realize_initial()?;
    let mut state = State {
        t: 0.0,
        rho: rho0,
        u: u0,
    };
    let mut samples = vec![Sample {
        state: state.clone(),
        dt: 0.0,
    }];
    let mut steps = 0usize;
    let termination = loop {
        if state.t >= config.t_end * (1.0 - 1e-14) {
            break TerminationReason::Completed;
        }
        if steps >= MAX_STEPS {
            break TerminationReason::StabilityFailure { t: state.t };
        }
        let dt = stable_dt(&state, &law, config.cfl).min(config.t_end - state.t);
        match step(&state, dt, &law) {
            Ok(next) => {
                state = next;
                steps += 1;
                let done = state.t >= config.t_end * (1.0 - 1e-14);
                if steps % config.sample_every == 0 || done {
                    samples.push(Sample {
                        state: state.clone(),
                        dt,
                    });
                }
            }
            Err(StepFailure::Positivity { stage, min }) => {
                break TerminationReason::PositivityFailure {
                    t: state.t,
                    stage,
                    min_rho: min,
                };
            }
            Err(StepFailure::NonFinite { .. }) => {
                break TerminationReason::StabilityFailure { t: state.t };
            }
        }
    };
    Ok(Trajectory {
        samples,
        termination,
        steps,
    })
}
