//! LQR baseline designed on the crane linearized at the set-point.

use nalgebra::{SMatrix, SVector, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::care::{self, CareError};
use crate::dynamics::{ControlInput, CraneModel, DynamicsError};
use crate::model::{CraneState, Reference};

pub type StateMatrix = SMatrix<f64, 12, 12>;
pub type InputMatrix = SMatrix<f64, 12, 4>;
pub type GainMatrix = SMatrix<f64, 4, 12>;
pub type StateVector = SVector<f64, 12>;

/// Equilibrium check threshold on `‖f(x*, u_eq)‖∞`.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;
const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LqrError {
    #[error("reference is not an equilibrium (residual {residual:e})")]
    NotAnEquilibrium { residual: f64 },
    #[error("reference violates the rope-length assumption (d_d must be > 0)")]
    InvalidReference,
    #[error("LQR weight `{name}` index {index} is invalid ({value}); Q needs ≥ 0, R needs > 0")]
    InvalidWeight { name: &'static str, index: usize, value: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Care(#[from] CareError),
}

/// Diagonal LQR weights over `x = [q; q̇]` and `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqrWeights {
    pub q_diag: [f64; 12],
    pub r_diag: [f64; 4],
}

impl Default for LqrWeights {
    fn default() -> Self {
        Self {
            q_diag: [25.0, 400.0, 450.0, 200.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 120.0, 120.0],
            r_diag: [0.1, 0.1, 0.1, 1.0],
        }
    }
}

impl LqrWeights {
    pub fn validate(&self) -> Result<(), LqrError> {
        for (index, &value) in self.q_diag.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(LqrError::InvalidWeight { name: "q_diag", index, value });
            }
        }
        for (index, &value) in self.r_diag.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(LqrError::InvalidWeight { name: "r_diag", index, value });
            }
        }
        Ok(())
    }

    pub fn q(&self) -> StateMatrix {
        StateMatrix::from_diagonal(&StateVector::from_row_slice(&self.q_diag))
    }

    pub fn r(&self) -> SMatrix<f64, 4, 4> {
        SMatrix::<f64, 4, 4>::from_diagonal(&Vector4::from_row_slice(&self.r_diag))
    }
}

/// Linearized plant `δẋ = A δx + B δu` around `(x*, u_eq)`.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub a: StateMatrix,
    pub b: InputMatrix,
    pub u_eq: ControlInput,
    pub x_eq: StateVector,
}

/// Solved LQR design: immutable once built.
#[derive(Debug, Clone)]
pub struct LqrDesign {
    pub q: StateMatrix,
    pub r: SMatrix<f64, 4, 4>,
    pub a: StateMatrix,
    pub b: InputMatrix,
    pub k: GainMatrix,
    pub p: StateMatrix,
    pub u_eq: ControlInput,
    pub x_eq: StateVector,
    pub care_residual: f64,
}

fn state_derivative<M: CraneModel + ?Sized>(
    model: &M,
    x: &StateVector,
    u: &ControlInput,
) -> Result<StateVector, DynamicsError> {
    let state = CraneState::from_stacked(x);
    let qddot = model.forward_dynamics(&state, u)?;
    let mut dx = StateVector::zeros();
    dx.fixed_rows_mut::<6>(0).copy_from(&state.qdot);
    dx.fixed_rows_mut::<6>(6).copy_from(&qddot);
    Ok(dx)
}

/// Central-difference Jacobians of the state equation at the set-point,
/// with the gravity-compensating equilibrium input.
pub fn linearize<M: CraneModel + ?Sized>(
    reference: &Reference,
    model: &M,
) -> Result<Linearization, LqrError> {
    reference.validate().map_err(|_| LqrError::InvalidReference)?;
    let x_eq = CraneState::at_reference(reference).stacked();
    let g = model.gravity_vector(&reference.target_q());
    let u_eq = ControlInput::new(g[0], g[1], g[2], g[3]);

    let residual = state_derivative(model, &x_eq, &u_eq)?.amax();
    if !(residual <= EQUILIBRIUM_TOL) {
        return Err(LqrError::NotAnEquilibrium { residual });
    }

    let h = JACOBIAN_STEP;
    let mut a = StateMatrix::zeros();
    for j in 0..12 {
        let step = StateVector::ith(j, h);
        let plus = state_derivative(model, &(x_eq + step), &u_eq)?;
        let minus = state_derivative(model, &(x_eq - step), &u_eq)?;
        a.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    let mut b = InputMatrix::zeros();
    for j in 0..4 {
        let step = ControlInput::ith(j, h);
        let plus = state_derivative(model, &x_eq, &(u_eq + step))?;
        let minus = state_derivative(model, &x_eq, &(u_eq - step))?;
        b.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    // The kinematic rows are exact: q̇ depends on nothing but q̇.
    a.fixed_rows_mut::<6>(0).fill(0.0);
    a.fixed_view_mut::<6, 6>(0, 6).fill_with_identity();
    b.fixed_rows_mut::<6>(0).fill(0.0);

    Ok(Linearization { a, b, u_eq, x_eq })
}

impl LqrDesign {
    pub fn new<M: CraneModel + ?Sized>(
        reference: &Reference,
        weights: &LqrWeights,
        model: &M,
    ) -> Result<Self, LqrError> {
        weights.validate()?;
        let lin = linearize(reference, model)?;
        let (q, r) = (weights.q(), weights.r());
        let sol = care::solve_care(&lin.a, &lin.b, &q, &r)?;
        Ok(Self {
            q,
            r,
            a: lin.a,
            b: lin.b,
            k: sol.k,
            p: sol.p,
            u_eq: lin.u_eq,
            x_eq: lin.x_eq,
            care_residual: sol.residual,
        })
    }

    pub fn closed_loop(&self) -> StateMatrix {
        self.a - self.b * self.k
    }
}

/// `u = u_eq − K (x − x*)`.
pub fn lqr_control(state: &CraneState, design: &LqrDesign) -> ControlInput {
    design.u_eq - design.k * (state.stacked() - design.x_eq)
}
