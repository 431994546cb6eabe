//! Euler–Lagrange ground truth built only from world-frame positions.
//!
//! Nothing here touches the analytic Jacobians of [`crate::model`]: body
//! velocities come from complex-step differentiation of independently
//! written position formulas, and every matrix or vector is recovered from
//! scalar energies by finite differences. The analytic `M`, `C`, `g` are
//! checked against these values.

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;

use super::{friction_vector, input_map, ControlInput};
use crate::model::CraneParams;

/// Complex-step size; any tiny value works because no subtraction occurs.
const COMPLEX_STEP: f64 = 1e-30;
/// Central-difference step in `q` for `∂L/∂q`.
const POSITION_STEP: f64 = 1e-6;
/// Central-difference step in time for `d/dt (∂L/∂q̇)`.
const TIME_STEP: f64 = 1e-6;
/// `T` is exactly quadratic in `q̇`, so central differences in velocity are
/// exact for any step; a unit step keeps rounding negligible.
const VELOCITY_STEP: f64 = 1.0;

type C3 = [Complex64; 3];

/// Boom COM, jib COM, payload in world coordinates.
fn world_points(q: &[Complex64; 6], p: &CraneParams) -> [C3; 3] {
    let [alpha, beta, gamma, d, th1, th2] = *q;
    let (ca, sa) = (alpha.cos(), alpha.sin());
    let (cb, sb) = (beta.cos(), beta.sin());
    let (cg, sg) = (gamma.cos(), gamma.sin());
    let half = 0.5;

    let boom_reach = cb * p.l_b * half;
    let boom = [boom_reach * ca, boom_reach * sa, sb * p.l_b * half];

    let jib_reach = cb * p.l_b + cg * p.l_j * half;
    let jib = [jib_reach * ca, jib_reach * sa, sb * p.l_b + sg * p.l_j * half];

    let tip_reach = cb * p.l_b + cg * p.l_j;
    let (c1, s1) = (th1.cos(), th1.sin());
    let (c2, s2) = (th2.cos(), th2.sin());
    let payload = [
        tip_reach * ca + d * (ca * s2 - sa * c2 * s1),
        tip_reach * sa + d * (sa * s2 + ca * c2 * s1),
        sb * p.l_b + sg * p.l_j - d * c1 * c2,
    ];
    [boom, jib, payload]
}

fn complexify(q: &Vector6<f64>, dir: &Vector6<f64>, h: f64) -> [Complex64; 6] {
    std::array::from_fn(|i| Complex64::new(q[i], h * dir[i]))
}

/// Kinetic energy from the three point-mass velocities plus the rotational
/// inertia terms.
pub fn kinetic_energy(q: &Vector6<f64>, qdot: &Vector6<f64>, p: &CraneParams) -> f64 {
    let pts = world_points(&complexify(q, qdot, COMPLEX_STEP), p);
    let masses = [p.m_b, p.m_j, p.m];
    let translational: f64 = pts
        .iter()
        .zip(masses)
        .map(|(pt, mass)| {
            let v2: f64 = pt.iter().map(|c| (c.im / COMPLEX_STEP).powi(2)).sum();
            0.5 * mass * v2
        })
        .sum();
    translational
        + 0.5 * (p.i_tot * qdot[0].powi(2) + p.i_b * qdot[1].powi(2) + p.i_j * qdot[2].powi(2))
}

/// `g · Σ mass · height` from the world positions.
pub fn potential_energy(q: &Vector6<f64>, p: &CraneParams) -> f64 {
    let pts = world_points(&complexify(q, &Vector6::zeros(), 0.0), p);
    p.g * (p.m_b * pts[0][2].re + p.m_j * pts[1][2].re + p.m * pts[2][2].re)
}

fn lagrangian(q: &Vector6<f64>, qdot: &Vector6<f64>, p: &CraneParams) -> f64 {
    kinetic_energy(q, qdot, p) - potential_energy(q, p)
}

/// Mass matrix as the velocity Hessian of the oracle kinetic energy.
pub fn mass_matrix(q: &Vector6<f64>, p: &CraneParams) -> Matrix6<f64> {
    let e = |i: usize| Vector6::ith(i, 1.0);
    Matrix6::from_fn(|i, j| {
        if i == j {
            2.0 * kinetic_energy(q, &e(i), p)
        } else {
            0.5 * (kinetic_energy(q, &(e(i) + e(j)), p) - kinetic_energy(q, &(e(i) - e(j)), p))
        }
    })
}

/// `∂T/∂q̇`.
pub fn momentum(q: &Vector6<f64>, qdot: &Vector6<f64>, p: &CraneParams) -> Vector6<f64> {
    Vector6::from_fn(|i, _| {
        let step = Vector6::ith(i, VELOCITY_STEP);
        (kinetic_energy(q, &(qdot + step), p) - kinetic_energy(q, &(qdot - step), p))
            / (2.0 * VELOCITY_STEP)
    })
}

fn gradient(f: impl Fn(&Vector6<f64>) -> f64, q: &Vector6<f64>) -> Vector6<f64> {
    Vector6::from_fn(|i, _| {
        let step = Vector6::ith(i, POSITION_STEP);
        (f(&(q + step)) - f(&(q - step))) / (2.0 * POSITION_STEP)
    })
}

/// `∂U/∂q` from the kinematic potential.
pub fn potential_gradient(q: &Vector6<f64>, p: &CraneParams) -> Vector6<f64> {
    gradient(|x| potential_energy(x, p), q)
}

/// `d/dt(∂L/∂q̇) − ∂L/∂q` along the path `q + q̇ t + ½ q̈ t²`, evaluated at
/// `t = 0`.
pub fn euler_lagrange_lhs(
    q: &Vector6<f64>,
    qdot: &Vector6<f64>,
    qddot: &Vector6<f64>,
    p: &CraneParams,
) -> Vector6<f64> {
    let h = TIME_STEP;
    let at = |t: f64| (q + qdot * t + qddot * (0.5 * t * t), qdot + qddot * t);
    let (q_plus, v_plus) = at(h);
    let (q_minus, v_minus) = at(-h);
    let momentum_rate = (momentum(&q_plus, &v_plus, p) - momentum(&q_minus, &v_minus, p)) / (2.0 * h);
    momentum_rate - gradient(|x| lagrangian(x, qdot, p), q)
}

/// Velocity-product terms `C(q, q̇) q̇` recovered from the Lagrangian with
/// zero acceleration.
pub fn coriolis_forces(q: &Vector6<f64>, qdot: &Vector6<f64>, p: &CraneParams) -> Vector6<f64> {
    let h = TIME_STEP;
    let momentum_rate =
        (momentum(&(q + qdot * h), qdot, p) - momentum(&(q - qdot * h), qdot, p)) / (2.0 * h);
    momentum_rate - gradient(|x| kinetic_energy(x, qdot, p), q)
}

/// Euler–Lagrange residual `d/dt(∂L/∂q̇) − ∂L/∂q − (B u − F)`.
pub fn el_oracle_residual(
    q: &Vector6<f64>,
    qdot: &Vector6<f64>,
    qddot: &Vector6<f64>,
    u: &ControlInput,
    p: &CraneParams,
) -> Vector6<f64> {
    euler_lagrange_lhs(q, qdot, qddot, p) - (input_map(u) - friction_vector(q, qdot, p))
}
