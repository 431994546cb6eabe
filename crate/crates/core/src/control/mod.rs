//! Controllers: the energy-based set-point law and the LQR baseline.

pub mod care;
pub mod lqr;
pub mod nonlinear;

pub use care::{solve_care, CareError};
pub use lqr::{linearize, lqr_control, LqrDesign, LqrError, LqrWeights};
pub use nonlinear::{
    energy, gravity_feedforward, lyapunov_rate, lyapunov_value, nonlinear_control, GainError, GainSet,
};
