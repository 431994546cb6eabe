//! Energy-based set-point controller and its Lyapunov function.

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{self, ControlInput};
use crate::model::{coord, CraneParams, CraneState, Reference};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("gain `{name}` must be strictly positive and finite (got {value})")]
pub struct GainError {
    pub name: &'static str,
    pub value: f64,
}

/// Proportional and derivative gains of the four actuated channels.
///
/// Construct through [`GainSet::new`] or deserialization followed by
/// [`GainSet::validate`]; all gains must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainSet {
    pub kp_alpha: f64,
    pub kp_beta: f64,
    pub kp_gamma: f64,
    pub kp_d: f64,
    pub kd_alpha: f64,
    pub kd_beta: f64,
    pub kd_gamma: f64,
    pub kd_d: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        Self {
            kp_alpha: 30.0,
            kp_beta: 10.0,
            kp_gamma: 10.0,
            kp_d: 1.0,
            kd_alpha: 50.0,
            kd_beta: 30.0,
            kd_gamma: 50.0,
            kd_d: 10.0,
        }
    }
}

impl GainSet {
    /// `kp` and `kd` in channel order (slew, boom, jib, hoist).
    pub fn new(kp: [f64; 4], kd: [f64; 4]) -> Result<Self, GainError> {
        let gains = Self {
            kp_alpha: kp[0],
            kp_beta: kp[1],
            kp_gamma: kp[2],
            kp_d: kp[3],
            kd_alpha: kd[0],
            kd_beta: kd[1],
            kd_gamma: kd[2],
            kd_d: kd[3],
        };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<(), GainError> {
        let named = [
            ("kp_alpha", self.kp_alpha),
            ("kp_beta", self.kp_beta),
            ("kp_gamma", self.kp_gamma),
            ("kp_d", self.kp_d),
            ("kd_alpha", self.kd_alpha),
            ("kd_beta", self.kd_beta),
            ("kd_gamma", self.kd_gamma),
            ("kd_d", self.kd_d),
        ];
        match named.into_iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            Some((name, value)) => Err(GainError { name, value }),
            None => Ok(()),
        }
    }

    pub fn kp(&self) -> [f64; 4] {
        [self.kp_alpha, self.kp_beta, self.kp_gamma, self.kp_d]
    }

    pub fn kd(&self) -> [f64; 4] {
        [self.kd_alpha, self.kd_beta, self.kd_gamma, self.kd_d]
    }
}

/// Set-point errors `e = reference − actual` for the actuated coordinates.
pub fn tracking_errors(state: &CraneState, reference: &Reference) -> [f64; 4] {
    [
        reference.alpha - state.alpha(),
        reference.beta - state.beta(),
        reference.gamma - state.gamma(),
        reference.d - state.rope(),
    ]
}

/// Feed-forward that cancels boom and jib gravity and the payload weight on
/// the hoist. With this input alone the plant conserves [`energy`].
pub fn gravity_feedforward(q: &Vector6<f64>, p: &CraneParams) -> ControlInput {
    ControlInput::new(
        0.0,
        p.g * p.l_b * q[coord::BETA].cos() * (p.m + 0.5 * p.m_b + p.m_j),
        p.g * p.l_j * q[coord::GAMMA].cos() * (p.m + 0.5 * p.m_j),
        -p.m * p.g,
    )
}

/// PD on each actuated channel plus [`gravity_feedforward`].
pub fn nonlinear_control(
    state: &CraneState,
    reference: &Reference,
    gains: &GainSet,
    p: &CraneParams,
) -> ControlInput {
    let e = tracking_errors(state, reference);
    let kp = gains.kp();
    let kd = gains.kd();
    let ff = gravity_feedforward(&state.q, p);
    ControlInput::from_fn(|i, _| kp[i] * e[i] - kd[i] * state.qdot[i] + ff[i])
}

/// Crane energy: kinetic energy plus the payload swing potential
/// `m g d (1 − cos θ1 cos θ2)`.
pub fn energy(state: &CraneState, p: &CraneParams) -> f64 {
    let hang = state.theta1().cos() * state.theta2().cos();
    crate::model::kinetic_energy(state, p) + p.m * p.g * state.rope() * (1.0 - hang)
}

/// [`energy`] plus the proportional-gain spring terms on the errors.
pub fn lyapunov_value(
    state: &CraneState,
    reference: &Reference,
    gains: &GainSet,
    p: &CraneParams,
) -> f64 {
    let e = tracking_errors(state, reference);
    let springs: f64 = gains.kp().iter().zip(e).map(|(k, e)| 0.5 * k * e * e).sum();
    energy(state, p) + springs
}

/// Time derivative of [`lyapunov_value`] along the plant for an arbitrary
/// input `u`.
///
/// With `u = nonlinear_control(..)` this reduces to
/// `−Σ kd·q̇ᵢ² − q̇ᵀF ≤ 0`.
pub fn lyapunov_rate(
    state: &CraneState,
    reference: &Reference,
    gains: &GainSet,
    p: &CraneParams,
    u: &ControlInput,
) -> f64 {
    let e = tracking_errors(state, reference);
    let kp = gains.kp();
    let ff = gravity_feedforward(&state.q, p);
    let actuated: f64 = (0..4).map(|i| state.qdot[i] * (u[i] - kp[i] * e[i] - ff[i])).sum();
    let dissipation = state.qdot.dot(&dynamics::friction_vector(&state.q, &state.qdot, p));
    actuated - dissipation
}
