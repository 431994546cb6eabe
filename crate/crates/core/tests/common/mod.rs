//! Test-side oracles written directly from the world-frame geometry.
//!
//! Velocities are central differences of positions along `q̇`; nothing here
//! calls the library's Jacobians or matrices.

#![allow(dead_code)]

use knuckle_crane::model::CraneParams;
use nalgebra::{Matrix6, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-6;

/// Boom COM, jib COM and payload positions.
pub fn world_points(q: &Vector6<f64>, p: &CraneParams) -> [Vector3<f64>; 3] {
    let (a, b, c, d, t1, t2) = (q[0], q[1], q[2], q[3], q[4], q[5]);
    let radial = Vector3::new(a.cos(), a.sin(), 0.0);
    let tangential = Vector3::new(-a.sin(), a.cos(), 0.0);
    let up = Vector3::z();
    let boom = radial * (0.5 * p.l_b * b.cos()) + up * (0.5 * p.l_b * b.sin());
    let elbow = radial * (p.l_b * b.cos()) + up * (p.l_b * b.sin());
    let jib = elbow + radial * (0.5 * p.l_j * c.cos()) + up * (0.5 * p.l_j * c.sin());
    let tip = elbow + radial * (p.l_j * c.cos()) + up * (p.l_j * c.sin());
    // θ1 swings the rope in the tangential direction, θ2 in the radial one.
    let rope = radial * t2.sin() + tangential * (t1.sin() * t2.cos()) - up * (t1.cos() * t2.cos());
    [boom, jib, tip + rope * d]
}

pub fn masses(p: &CraneParams) -> [f64; 3] {
    [p.m_b, p.m_j, p.m]
}

/// Point velocities by central differences of the positions.
pub fn world_velocities(q: &Vector6<f64>, qdot: &Vector6<f64>, p: &CraneParams) -> [Vector3<f64>; 3] {
    let plus = world_points(&(q + qdot * FD_STEP), p);
    let minus = world_points(&(q - qdot * FD_STEP), p);
    std::array::from_fn(|k| (plus[k] - minus[k]) / (2.0 * FD_STEP))
}

pub fn kinetic_energy(q: &Vector6<f64>, qdot: &Vector6<f64>, p: &CraneParams) -> f64 {
    let v = world_velocities(q, qdot, p);
    let translational: f64 = masses(p).iter().zip(v.iter()).map(|(m, v)| 0.5 * m * v.norm_squared()).sum();
    translational
        + 0.5 * p.i_tot * qdot[0] * qdot[0]
        + 0.5 * p.i_b * qdot[1] * qdot[1]
        + 0.5 * p.i_j * qdot[2] * qdot[2]
}

pub fn potential_energy(q: &Vector6<f64>, p: &CraneParams) -> f64 {
    let pts = world_points(q, p);
    p.g * masses(p).iter().zip(pts.iter()).map(|(m, x)| m * x.z).sum::<f64>()
}

pub fn gradient(f: impl Fn(&Vector6<f64>) -> f64, q: &Vector6<f64>) -> Vector6<f64> {
    Vector6::from_fn(|i, _| {
        let e = Vector6::ith(i, FD_STEP);
        (f(&(q + e)) - f(&(q - e))) / (2.0 * FD_STEP)
    })
}

/// Hessian of `T` in `q̇` by four-point central differences with unit
/// velocity steps.
pub fn mass_hessian(q: &Vector6<f64>, p: &CraneParams) -> Matrix6<f64> {
    let t = |v: Vector6<f64>| kinetic_energy(q, &v, p);
    let e = |i: usize| Vector6::ith(i, 1.0);
    Matrix6::from_fn(|i, j| (t(e(i) + e(j)) - t(e(i) - e(j)) - t(e(j) - e(i)) + t(-e(i) - e(j))) / 4.0)
}

pub fn inf_norm(m: &Matrix6<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Random `(q, q̇)` with `d ∈ [0.5, 20]` and `|θ| < π/2 − 0.1`.
pub fn random_state(rng: &mut ChaCha8Rng) -> (Vector6<f64>, Vector6<f64>) {
    let swing = std::f64::consts::FRAC_PI_2 - 0.1;
    let q = Vector6::new(
        rng.random_range(-3.0..3.0),
        rng.random_range(-1.4..1.4),
        rng.random_range(-1.4..1.4),
        rng.random_range(0.5..20.0),
        rng.random_range(-swing..swing),
        rng.random_range(-swing..swing),
    );
    let qdot = Vector6::from_fn(|_, _| rng.random_range(-1.0..1.0));
    (q, qdot)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
