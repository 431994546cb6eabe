//! Structural property checks of a [`CraneModel`] at seeded random states.
//!
//! Every check compares the model against either an algebraic identity or
//! the independent oracle in [`crate::dynamics::oracle`]. The suite works on
//! `&dyn CraneModel`, so a wrapped or deliberately broken model can be
//! passed in.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use nalgebra::{Matrix6, SymmetricEigen, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{input_map, oracle, ControlInput, CraneModel};
use crate::model::CraneState;

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const SKEW_TOL: f64 = 1e-6;
pub const GRAVITY_TOL: f64 = 1e-6;
pub const SUBSTITUTE_TOL: f64 = 1e-8;
pub const MASS_ORACLE_TOL: f64 = 1e-6;
pub const EL_TOL: f64 = 1e-5;

/// Step of the directional difference used for `Ṁ`.
const MDOT_STEP: f64 = 1e-6;

pub const ROPE_RANGE: (f64, f64) = (0.5, 20.0);
/// Swing angles are sampled in `|θ| < π/2 − SWING_MARGIN`.
pub const SWING_MARGIN: f64 = 0.1;

/// A sampled test point: the state, a probe vector and an input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: CraneState,
    pub z: Vector6<f64>,
    pub u: ControlInput,
}

pub fn sample_states(seed: u64, count: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let swing = FRAC_PI_2 - SWING_MARGIN;
    (0..count)
        .map(|_| {
            let q = Vector6::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-1.4..1.4),
                rng.random_range(-1.4..1.4),
                rng.random_range(ROPE_RANGE.0..ROPE_RANGE.1),
                rng.random_range(-swing..swing),
                rng.random_range(-swing..swing),
            );
            let qdot = Vector6::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let z = Vector6::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let u = ControlInput::from_fn(|i, _| {
                let scale = if i == 3 { 20.0 } else { 300.0 };
                rng.random_range(-scale..scale)
            });
            Sample { state: CraneState::new(q, qdot), z, u }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    MassSymmetry,
    MassPositiveDefinite,
    SkewSymmetry,
    GravityGradient,
    SubstituteBack,
    MassOracle,
    EulerLagrange,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::MassSymmetry,
        Property::MassPositiveDefinite,
        Property::SkewSymmetry,
        Property::GravityGradient,
        Property::SubstituteBack,
        Property::MassOracle,
        Property::EulerLagrange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::MassSymmetry => "mass matrix symmetry",
            Property::MassPositiveDefinite => "mass matrix positive definite",
            Property::SkewSymmetry => "skew symmetry of M_dot/2 - C",
            Property::GravityGradient => "gravity equals grad U",
            Property::SubstituteBack => "forward dynamics substitute-back",
            Property::MassOracle => "M matches kinetic-energy Hessian",
            Property::EulerLagrange => "Euler-Lagrange oracle residual",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Property::MassSymmetry => SYMMETRY_TOL,
            // Measured as the negated smallest eigenvalue, which must stay below 0.
            Property::MassPositiveDefinite => 0.0,
            Property::SkewSymmetry => SKEW_TOL,
            Property::GravityGradient => GRAVITY_TOL,
            Property::SubstituteBack => SUBSTITUTE_TOL,
            Property::MassOracle => MASS_ORACLE_TOL,
            Property::EulerLagrange => EL_TOL,
        }
    }

    /// Error measure at one sample; the property holds when it is at most
    /// [`Property::tolerance`] (strictly below for positive definiteness).
    pub fn measure(self, model: &dyn CraneModel, s: &Sample) -> f64 {
        let p = model.params();
        let (q, qdot) = (&s.state.q, &s.state.qdot);
        match self {
            Property::MassSymmetry => {
                let m = model.mass_matrix(q);
                (m - m.transpose()).amax()
            }
            Property::MassPositiveDefinite => {
                let m = model.mass_matrix(q);
                -SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.min()
            }
            Property::SkewSymmetry => {
                let h = MDOT_STEP;
                let mdot: Matrix6<f64> =
                    (model.mass_matrix(&(q + qdot * h)) - model.mass_matrix(&(q - qdot * h))) / (2.0 * h);
                let n = mdot * 0.5 - model.coriolis_matrix(q, qdot);
                (s.z.dot(&(n * s.z))).abs() / s.z.norm_squared()
            }
            Property::GravityGradient => {
                (model.gravity_vector(q) - oracle::potential_gradient(q, p)).amax()
            }
            Property::SubstituteBack => match model.forward_dynamics(&s.state, &s.u) {
                Ok(qddot) => (model.mass_matrix(q) * qddot
                    + model.coriolis_matrix(q, qdot) * qdot
                    + model.friction_vector(q, qdot)
                    + model.gravity_vector(q)
                    - input_map(&s.u))
                .amax(),
                Err(_) => f64::INFINITY,
            },
            Property::MassOracle => {
                let m = model.mass_matrix(q);
                let scale = 1.0 + inf_norm(&m);
                inf_norm(&(m - oracle::mass_matrix(q, p))) / scale
            }
            Property::EulerLagrange => match model.forward_dynamics(&s.state, &s.u) {
                Ok(qddot) => oracle::el_oracle_residual(q, qdot, &qddot, &s.u, p).amax(),
                Err(_) => f64::INFINITY,
            },
        }
    }

    fn holds(self, value: f64) -> bool {
        match self {
            Property::MassPositiveDefinite => value < 0.0,
            _ => value <= self.tolerance(),
        }
    }
}

fn inf_norm(m: &Matrix6<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Outcome of one property over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub property: Property,
    pub samples: usize,
    /// Largest error measure seen.
    pub worst: f64,
    /// Sample at which `worst` occurred.
    pub worst_sample: Option<Sample>,
    /// First failing sample, if any.
    pub failure: Option<(usize, Sample, f64)>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {} (worst {:.3e}, tol {:.0e}, {} samples)",
            self.property.name(),
            self.worst,
            self.property.tolerance(),
            self.samples
        )?;
        if let Some((index, s, value)) = &self.failure {
            write!(
                f,
                "\n     first failure at sample {index}: value {value:.6e}\n     q = {:?}\n     qdot = {:?}\n     z = {:?}\n     u = {:?}",
                s.state.q.as_slice(),
                s.state.qdot.as_slice(),
                s.z.as_slice(),
                s.u.as_slice()
            )?;
        }
        Ok(())
    }
}

pub fn check(model: &dyn CraneModel, property: Property, samples: &[Sample]) -> PropertyReport {
    let mut report = PropertyReport { property, samples: samples.len(), worst: f64::NEG_INFINITY, worst_sample: None, failure: None };
    for (index, s) in samples.iter().enumerate() {
        let value = property.measure(model, s);
        let value = if value.is_nan() { f64::INFINITY } else { value };
        if value > report.worst {
            report.worst = value;
            report.worst_sample = Some(*s);
        }
        if report.failure.is_none() && !property.holds(value) {
            report.failure = Some((index, *s, value));
        }
    }
    report
}

/// Every [`Property`] at `count` states drawn from `seed`.
pub fn run_suite(model: &dyn CraneModel, seed: u64, count: usize) -> Vec<PropertyReport> {
    let samples = sample_states(seed, count);
    Property::ALL.iter().map(|&p| check(model, p, &samples)).collect()
}
