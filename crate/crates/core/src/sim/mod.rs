//! Fixed-step closed-loop simulation.

pub mod metrics;

use std::ops::ControlFlow;

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{self, GainSet, LqrDesign, LqrError, LqrWeights};
use crate::dynamics::{ControlInput, CraneModel, DynamicsError};
use crate::model::{Assumption, CraneParams, CraneState, Reference};

pub use metrics::{compute_metrics, Metrics};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("row {row}: state left the model's validity region, {which} violated")]
    AssumptionViolated { row: usize, which: Assumption },
    #[error("row {row}: non-finite state or input")]
    NonFinite { row: usize },
    #[error("row {row}: {source}")]
    Dynamics { row: usize, source: DynamicsError },
    #[error("LQR design failed: {0}")]
    Design(#[from] LqrError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Rk4,
    SemiImplicitEuler,
}

/// One piece of a piecewise-constant open-loop input, active from `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub t: f64,
    pub u: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    Nonlinear(GainSet),
    Lqr(LqrWeights),
    /// Entries sorted by start time; before the first entry the input is zero.
    OpenLoop(Vec<ScheduleEntry>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub initial: CraneState,
    pub reference: Reference,
    pub controller: ControllerSpec,
    pub integrator: Integrator,
    /// Symmetric per-channel clamp `|u_i| ≤ bound_i`.
    pub saturation: Option<[f64; 4]>,
    /// Gains of the Lyapunov function recorded in the trajectory. For the
    /// nonlinear controller these should be its own gains.
    pub monitor_gains: GainSet,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return bad(format!("t_final must be ≥ dt (got {})", self.t_final));
        }
        if !self.initial.is_finite() {
            return bad("initial state must be finite".into());
        }
        if let Some(which) = self.initial.violated_assumption() {
            return bad(format!("initial state violates {which}"));
        }
        if let Err(which) = self.reference.validate() {
            return bad(format!("reference violates {which}"));
        }
        if let Some(bounds) = self.saturation {
            if bounds.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
                return bad("saturation bounds must be positive".into());
            }
        }
        match &self.controller {
            ControllerSpec::Nonlinear(g) => g.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?,
            ControllerSpec::Lqr(w) => w.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?,
            ControllerSpec::OpenLoop(s) => {
                if s.windows(2).any(|w| !(w[0].t < w[1].t)) {
                    return bad("open-loop schedule times must be strictly increasing".into());
                }
                if s.iter().flat_map(|e| e.u).any(|v| !v.is_finite()) {
                    return bad("open-loop inputs must be finite".into());
                }
            }
        }
        self.monitor_gains.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    /// Number of integration steps; rows recorded are `steps() + 1`.
    pub fn steps(&self) -> usize {
        // Tolerate t_final/dt landing a hair below an integer.
        (self.t_final / self.dt * (1.0 + 1e-12)).floor() as usize
    }
}

/// Controller ready to be queried once per step.
#[derive(Debug, Clone)]
pub enum Controller {
    Nonlinear { gains: GainSet, reference: Reference },
    Lqr(Box<LqrDesign>),
    OpenLoop(Vec<ScheduleEntry>),
}

impl Controller {
    pub fn build<M: CraneModel + ?Sized>(
        spec: &ControllerSpec,
        reference: &Reference,
        model: &M,
    ) -> Result<Self, SimError> {
        Ok(match spec {
            ControllerSpec::Nonlinear(gains) => Controller::Nonlinear { gains: *gains, reference: *reference },
            ControllerSpec::Lqr(weights) => {
                Controller::Lqr(Box::new(LqrDesign::new(reference, weights, model)?))
            }
            ControllerSpec::OpenLoop(schedule) => Controller::OpenLoop(schedule.clone()),
        })
    }

    pub fn input(&self, t: f64, state: &CraneState, params: &CraneParams) -> ControlInput {
        match self {
            Controller::Nonlinear { gains, reference } => {
                control::nonlinear_control(state, reference, gains, params)
            }
            Controller::Lqr(design) => control::lqr_control(state, design),
            Controller::OpenLoop(schedule) => schedule
                .iter()
                .take_while(|e| e.t <= t)
                .last()
                .map(|e| ControlInput::from(e.u))
                .unwrap_or_else(ControlInput::zeros),
        }
    }
}

/// Clamp each channel to `±bound`.
pub fn saturate(u: &ControlInput, bounds: Option<[f64; 4]>) -> ControlInput {
    match bounds {
        Some(b) => ControlInput::from_fn(|i, _| u[i].clamp(-b[i], b[i])),
        None => *u,
    }
}

fn derivative<M: CraneModel + ?Sized>(
    model: &M,
    state: &CraneState,
    u: &ControlInput,
) -> Result<(Vector6<f64>, Vector6<f64>), DynamicsError> {
    Ok((state.qdot, model.forward_dynamics(state, u)?))
}

fn offset(state: &CraneState, k: &(Vector6<f64>, Vector6<f64>), h: f64) -> CraneState {
    CraneState::new(state.q + k.0 * h, state.qdot + k.1 * h)
}

/// One integrator step with `u` held constant over the step.
pub fn step<M: CraneModel + ?Sized>(
    model: &M,
    state: &CraneState,
    u: &ControlInput,
    dt: f64,
    integrator: Integrator,
) -> Result<CraneState, DynamicsError> {
    step_with(model, state, |_| *u, dt, integrator)
}

/// One integrator step where the input is re-evaluated from the state at
/// every stage (continuous-time feedback rather than a zero-order hold).
pub fn step_with<M, F>(
    model: &M,
    state: &CraneState,
    law: F,
    dt: f64,
    integrator: Integrator,
) -> Result<CraneState, DynamicsError>
where
    M: CraneModel + ?Sized,
    F: Fn(&CraneState) -> ControlInput,
{
    match integrator {
        Integrator::Rk4 => {
            let k1 = derivative(model, state, &law(state))?;
            let s2 = offset(state, &k1, 0.5 * dt);
            let k2 = derivative(model, &s2, &law(&s2))?;
            let s3 = offset(state, &k2, 0.5 * dt);
            let k3 = derivative(model, &s3, &law(&s3))?;
            let s4 = offset(state, &k3, dt);
            let k4 = derivative(model, &s4, &law(&s4))?;
            let w = dt / 6.0;
            Ok(CraneState::new(
                state.q + (k1.0 + (k2.0 + k3.0) * 2.0 + k4.0) * w,
                state.qdot + (k1.1 + (k2.1 + k3.1) * 2.0 + k4.1) * w,
            ))
        }
        Integrator::SemiImplicitEuler => {
            let qddot = model.forward_dynamics(state, &law(state))?;
            let qdot = state.qdot + qddot * dt;
            Ok(CraneState::new(state.q + qdot * dt, qdot))
        }
    }
}

/// One recorded sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub q: [f64; 6],
    pub qdot: [f64; 6],
    pub u: [f64; 4],
    /// Crane energy.
    pub energy: f64,
    /// Lyapunov function value.
    pub lyapunov: f64,
    /// Lyapunov derivative for the applied input.
    pub lyapunov_rate: f64,
}

impl TrajectoryRow {
    pub fn state(&self) -> CraneState {
        CraneState::new(Vector6::from(self.q), Vector6::from(self.qdot))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub config_hash: String,
    pub params: CraneParams,
    pub controller: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub meta: TrajectoryMeta,
}

fn record(
    row_index: usize,
    dt: f64,
    state: &CraneState,
    u: &ControlInput,
    cfg: &SimConfig,
    params: &CraneParams,
) -> Result<TrajectoryRow, SimError> {
    if !state.is_finite() || u.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite { row: row_index });
    }
    if let Some(which) = state.violated_assumption() {
        return Err(SimError::AssumptionViolated { row: row_index, which });
    }
    Ok(TrajectoryRow {
        t: row_index as f64 * dt,
        q: state.q.into(),
        qdot: state.qdot.into(),
        u: (*u).into(),
        energy: control::energy(state, params),
        lyapunov: control::lyapunov_value(state, &cfg.reference, &cfg.monitor_gains, params),
        lyapunov_rate: control::lyapunov_rate(state, &cfg.reference, &cfg.monitor_gains, params, u),
    })
}

/// Runs the closed loop, handing each row to `observer` as soon as it is
/// recorded. Returning `ControlFlow::Break` stops the run early.
pub fn simulate_with<M, F>(cfg: &SimConfig, model: &M, mut observer: F) -> Result<(), SimError>
where
    M: CraneModel + ?Sized,
    F: FnMut(&TrajectoryRow) -> ControlFlow<()>,
{
    cfg.validate()?;
    let params = *model.params();
    let controller = Controller::build(&cfg.controller, &cfg.reference, model)?;
    let mut state = cfg.initial;
    let steps = cfg.steps();
    for row in 0..=steps {
        let t = row as f64 * cfg.dt;
        let u = saturate(&controller.input(t, &state, &params), cfg.saturation);
        let sample = record(row, cfg.dt, &state, &u, cfg, &params)?;
        if observer(&sample).is_break() || row == steps {
            break;
        }
        state = step(model, &state, &u, cfg.dt, cfg.integrator)
            .map_err(|source| SimError::Dynamics { row: row + 1, source })?;
    }
    Ok(())
}

/// Full run over `[0, t_final]`.
pub fn simulate<M: CraneModel + ?Sized>(
    cfg: &SimConfig,
    model: &M,
    meta: TrajectoryMeta,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.steps() + 1);
    simulate_with(cfg, model, |row| {
        rows.push(*row);
        ControlFlow::Continue(())
    })?;
    Ok(Trajectory { rows, meta })
}

/// Reference scenario used by the CLI defaults and the comparison tests:
/// boom and jib raised, tower slewed, rope shortened to 5 m, starting from
/// rest with a small swing.
pub fn default_scenario(controller: ControllerSpec) -> SimConfig {
    SimConfig {
        dt: 1e-3,
        t_final: 60.0,
        initial: CraneState::at_rest(Vector6::new(0.0, 0.2, 0.1, 6.0, 0.05, 0.05)),
        reference: Reference::new(0.5, 0.4, 0.3, 5.0),
        controller,
        integrator: Integrator::Rk4,
        saturation: None,
        monitor_gains: GainSet::default(),
    }
}
