//! Equations of motion `M(q) q̈ + C(q, q̇) q̇ + F(q, q̇) + g(q) = B u`.
//!
//! The mass matrix is assembled from the point-mass Jacobians of the boom
//! and jib centres of mass and the payload, plus the three rotational
//! inertias. The Coriolis matrix is `Σ m Jᵀ J̇`, which for point masses is
//! exactly the Christoffel-symbol factorization, so `½Ṁ − C` is skew
//! symmetric by construction.

pub mod oracle;

use nalgebra::{Cholesky, Matrix3, Matrix6, Vector4, Vector6};
use thiserror::Error;

use crate::model::{self, coord, CraneParams, CraneState};

pub type MassMatrix = Matrix6<f64>;
pub type CoriolisMatrix = Matrix6<f64>;
pub type GravityVector = Vector6<f64>;
pub type FrictionVector = Vector6<f64>;
/// `[u1 slew torque, u2 boom torque, u3 jib torque, u4 hoist force]`.
pub type ControlInput = Vector4<f64>;

/// Pivots of the mass-matrix factorization below this are treated as singular.
pub const PD_PIVOT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("mass matrix is not positive definite at q = {q:?}")]
    SingularMass { q: [f64; 6] },
}

/// A crane plant: everything forward dynamics and the controllers need.
///
/// [`KnuckleCrane`] is the implementation shipped here; wrappers can
/// override single terms (used by the validation fixtures).
pub trait CraneModel {
    fn params(&self) -> &CraneParams;
    fn mass_matrix(&self, q: &Vector6<f64>) -> MassMatrix;
    fn coriolis_matrix(&self, q: &Vector6<f64>, qdot: &Vector6<f64>) -> CoriolisMatrix;
    fn gravity_vector(&self, q: &Vector6<f64>) -> GravityVector;
    fn friction_vector(&self, q: &Vector6<f64>, qdot: &Vector6<f64>) -> FrictionVector;
    fn potential_energy(&self, q: &Vector6<f64>) -> f64;

    fn forward_dynamics(
        &self,
        state: &CraneState,
        u: &ControlInput,
    ) -> Result<Vector6<f64>, DynamicsError> {
        let m = self.mass_matrix(&state.q);
        let rhs = input_map(u)
            - self.coriolis_matrix(&state.q, &state.qdot) * state.qdot
            - self.friction_vector(&state.q, &state.qdot)
            - self.gravity_vector(&state.q);
        solve_spd(m, &rhs).ok_or(DynamicsError::SingularMass { q: state.q.into() })
    }
}

/// The six-coordinate knuckle boom crane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnuckleCrane {
    pub params: CraneParams,
}

impl KnuckleCrane {
    pub fn new(params: CraneParams) -> Self {
        Self { params }
    }
}

impl CraneModel for KnuckleCrane {
    fn params(&self) -> &CraneParams {
        &self.params
    }
    fn mass_matrix(&self, q: &Vector6<f64>) -> MassMatrix {
        mass_matrix(q, &self.params)
    }
    fn coriolis_matrix(&self, q: &Vector6<f64>, qdot: &Vector6<f64>) -> CoriolisMatrix {
        coriolis_matrix(q, qdot, &self.params)
    }
    fn gravity_vector(&self, q: &Vector6<f64>) -> GravityVector {
        gravity_vector(q, &self.params)
    }
    fn friction_vector(&self, q: &Vector6<f64>, qdot: &Vector6<f64>) -> FrictionVector {
        friction_vector(q, qdot, &self.params)
    }
    fn potential_energy(&self, q: &Vector6<f64>) -> f64 {
        model::potential_energy(q, &self.params)
    }
}

/// `[I₄; 0]·u`: inputs act on the first four coordinates only.
pub fn input_map(u: &ControlInput) -> Vector6<f64> {
    Vector6::new(u[0], u[1], u[2], u[3], 0.0, 0.0)
}

/// Cholesky solve that refuses pivots at or below [`PD_PIVOT_THRESHOLD`].
pub(crate) fn solve_spd(m: Matrix6<f64>, rhs: &Vector6<f64>) -> Option<Vector6<f64>> {
    let chol = Cholesky::new(m)?;
    if chol.l_dirty().diagonal().iter().any(|&pivot| !(pivot > PD_PIVOT_THRESHOLD)) {
        return None;
    }
    Some(chol.solve(rhs))
}

pub fn mass_matrix(q: &Vector6<f64>, p: &CraneParams) -> MassMatrix {
    let mut m = Matrix6::from_diagonal(&Vector6::new(p.i_tot, p.i_b, p.i_j, 0.0, 0.0, 0.0));
    for point in model::local_points(q, p) {
        m += point.mass * point.jac.transpose() * point.jac;
    }
    // The products above are symmetric only up to rounding.
    (m + m.transpose()) * 0.5
}

pub fn coriolis_matrix(q: &Vector6<f64>, qdot: &Vector6<f64>, p: &CraneParams) -> CoriolisMatrix {
    // Derivative of the slew rotation: Rᵀ Ṙ = α̇ [e_z]×.
    let spin = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0) * qdot[coord::ALPHA];
    let points = model::local_points(q, p);
    let rates = model::local_jacobian_rates(q, qdot, p);
    let mut c = Matrix6::zeros();
    for (point, rate) in points.iter().zip(rates.iter()) {
        c += point.mass * point.jac.transpose() * (spin * point.jac + rate);
    }
    c
}

pub fn gravity_vector(q: &Vector6<f64>, p: &CraneParams) -> GravityVector {
    let (s1, c1) = q[coord::THETA1].sin_cos();
    let (s2, c2) = q[coord::THETA2].sin_cos();
    let d = q[coord::D];
    Vector6::new(
        0.0,
        0.5 * p.g * p.l_b * q[coord::BETA].cos() * (2.0 * p.m + p.m_b + 2.0 * p.m_j),
        0.5 * p.g * p.l_j * q[coord::GAMMA].cos() * (2.0 * p.m + p.m_j),
        -p.g * p.m * c1 * c2,
        p.g * p.m * d * c2 * s1,
        p.g * p.m * d * c1 * s2,
    )
}

/// Velocity-dependent swing damping; vanishes at zero swing.
pub fn friction_vector(q: &Vector6<f64>, qdot: &Vector6<f64>, p: &CraneParams) -> FrictionVector {
    let theta1 = q[coord::THETA1];
    let theta2 = q[coord::THETA2];
    let c2 = theta2.cos();
    Vector6::new(
        0.0,
        0.0,
        0.0,
        0.0,
        p.d_theta1 * c2 * c2 * theta1.abs() * qdot[coord::THETA1],
        p.d_theta2 * theta2.abs() * qdot[coord::THETA2],
    )
}

/// `q̈` for the knuckle crane with parameters `p`.
pub fn forward_dynamics(
    state: &CraneState,
    u: &ControlInput,
    p: &CraneParams,
) -> Result<Vector6<f64>, DynamicsError> {
    KnuckleCrane::new(*p).forward_dynamics(state, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_q() -> Vector6<f64> {
        Vector6::new(0.3, 0.4, -0.2, 4.5, 0.25, -0.15)
    }

    #[test]
    fn hoist_and_boom_diagonal_entries() {
        let p = CraneParams::default();
        let m = mass_matrix(&sample_q(), &p);
        assert_relative_eq!(m[(3, 3)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(m[(1, 1)], 112.5 + p.i_b, epsilon = 1e-12);
    }

    #[test]
    fn no_tangential_swing_decouples_slew_from_boom_jib_and_hoist() {
        let p = CraneParams::default();
        let mut q = sample_q();
        q[coord::THETA1] = 0.0;
        let m = mass_matrix(&q, &p);
        for j in 1..4 {
            assert!(m[(0, j)].abs() < 1e-13, "M_1{} = {}", j + 1, m[(0, j)]);
        }
    }

    #[test]
    fn sparsity_of_rope_and_swing_block() {
        let p = CraneParams::default();
        let m = mass_matrix(&sample_q(), &p);
        for (i, j) in [(3, 4), (3, 5), (4, 5)] {
            assert!(m[(i, j)].abs() < 1e-13);
            assert!(m[(j, i)].abs() < 1e-13);
        }
    }

    #[test]
    fn coriolis_vanishes_at_rest() {
        let p = CraneParams::default();
        assert_eq!(coriolis_matrix(&sample_q(), &Vector6::zeros(), &p), Matrix6::zeros());
    }

    #[test]
    fn gravity_entries() {
        let p = CraneParams::default();
        let g = gravity_vector(&Vector6::new(1.0, 0.0, 0.0, 5.0, 0.0, 0.0), &p);
        assert_eq!(g[0], 0.0);
        assert_relative_eq!(g[1], 245.25, epsilon = 1e-12);
        assert_relative_eq!(g[2], 98.1, epsilon = 1e-12);
        assert_relative_eq!(g[3], -9.81, epsilon = 1e-14);
        assert_eq!(g[4], 0.0);
        assert_eq!(g[5], 0.0);
    }

    #[test]
    fn friction_entries() {
        let p = CraneParams::default();
        let mut q = sample_q();
        let qdot = Vector6::new(1.0, 1.0, 1.0, 1.0, 0.5, -0.3);
        assert_eq!(friction_vector(&q, &Vector6::zeros(), &p), Vector6::zeros());
        q[coord::THETA1] = 0.1;
        q[coord::THETA2] = 0.2;
        let f = friction_vector(&q, &qdot, &p);
        assert_relative_eq!(f[4], 0.2 * 0.2f64.cos().powi(2) * 0.1 * 0.5, epsilon = 1e-15);
        assert_relative_eq!(f[5], 0.2 * 0.2 * -0.3, epsilon = 1e-15);
        assert!(f.fixed_rows::<4>(0).iter().all(|&v| v == 0.0));
        q[coord::THETA1] = 0.0;
        assert_eq!(friction_vector(&q, &qdot, &p)[4], 0.0);
    }

    #[test]
    fn gravity_compensation_holds_equilibrium() {
        let p = CraneParams::default();
        let state = CraneState::at_rest(Vector6::new(0.5, 0.4, 0.3, 5.0, 0.0, 0.0));
        let g = gravity_vector(&state.q, &p);
        let u = Vector4::new(g[0], g[1], g[2], g[3]);
        let qddot = forward_dynamics(&state, &u, &p).unwrap();
        assert!(qddot.amax() < 1e-13, "{qddot}");
    }

    #[test]
    fn substitute_back_residual() {
        let p = CraneParams::default();
        let state = CraneState::new(sample_q(), Vector6::new(0.2, -0.1, 0.3, 0.4, -0.5, 0.6));
        let u = Vector4::new(3.0, 200.0, 80.0, -7.0);
        let qddot = forward_dynamics(&state, &u, &p).unwrap();
        let lhs = mass_matrix(&state.q, &p) * qddot
            + coriolis_matrix(&state.q, &state.qdot, &p) * state.qdot
            + friction_vector(&state.q, &state.qdot, &p)
            + gravity_vector(&state.q, &p);
        assert!((lhs - input_map(&u)).amax() < 1e-8);
    }

    #[test]
    fn zero_rope_is_singular() {
        let p = CraneParams::default();
        let mut q = sample_q();
        q[coord::D] = 0.0;
        let err = forward_dynamics(&CraneState::at_rest(q), &Vector4::zeros(), &p).unwrap_err();
        assert!(matches!(err, DynamicsError::SingularMass { .. }));
    }
}
