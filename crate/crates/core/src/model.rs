//! Physical parameters, crane configuration, forward kinematics and the
//! scalar energy functions of the knuckle boom crane.
//!
//! Generalized coordinates are `q = [alpha, beta, gamma, d, theta1, theta2]`:
//! slew of the tower, luff of the boom and of the jib (both measured from the
//! horizontal plane, the jib angle absolute rather than relative to the boom),
//! rope length, and the tangential / radial payload swing.

use nalgebra::{Matrix3, Matrix3x6, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics;

/// Index of each generalized coordinate inside `q`.
pub mod coord {
    pub const ALPHA: usize = 0;
    pub const BETA: usize = 1;
    pub const GAMMA: usize = 2;
    pub const D: usize = 3;
    pub const THETA1: usize = 4;
    pub const THETA2: usize = 5;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` must be strictly positive (got {value})")]
    NotPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be non-negative (got {value})")]
    Negative { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be finite (got {value})")]
    NotFinite { name: &'static str, value: f64 },
}

/// Masses, lengths, inertias and friction coefficients of the crane.
///
/// `Default` gives the 2 kg / 3 kg / 1 kg, 5 m / 4 m reference crane with
/// uniform-rod luff inertias, a 10 kg·m² tower and 0.2 swing friction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CraneParams {
    /// Boom mass (kg).
    pub m_b: f64,
    /// Jib mass (kg).
    pub m_j: f64,
    /// Payload mass (kg).
    pub m: f64,
    /// Boom length (m).
    pub l_b: f64,
    /// Jib length (m).
    pub l_j: f64,
    /// Tower slew inertia (kg·m²).
    pub i_tot: f64,
    /// Boom luff inertia about its centre of mass (kg·m²).
    pub i_b: f64,
    /// Jib luff inertia about its centre of mass (kg·m²).
    pub i_j: f64,
    /// Tangential swing friction (N·m·s/rad).
    pub d_theta1: f64,
    /// Radial swing friction (N·m·s/rad).
    pub d_theta2: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
}

impl Default for CraneParams {
    fn default() -> Self {
        Self::with_rod_inertias(2.0, 3.0, 1.0, 5.0, 4.0)
    }
}

impl CraneParams {
    /// Builds a parameter set whose luff inertias are those of uniform rods
    /// about their centres (`m·l²/12`), keeping the remaining defaults.
    pub fn with_rod_inertias(m_b: f64, m_j: f64, m: f64, l_b: f64, l_j: f64) -> Self {
        Self {
            m_b,
            m_j,
            m,
            l_b,
            l_j,
            i_tot: 10.0,
            i_b: m_b * l_b * l_b / 12.0,
            i_j: m_j * l_j * l_j / 12.0,
            d_theta1: 0.2,
            d_theta2: 0.2,
            g: 9.81,
        }
    }

    /// Same crane with both swing friction coefficients set to zero.
    pub fn frictionless(mut self) -> Self {
        self.d_theta1 = 0.0;
        self.d_theta2 = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("m_b", self.m_b),
            ("m_j", self.m_j),
            ("m", self.m),
            ("l_b", self.l_b),
            ("l_j", self.l_j),
            ("i_tot", self.i_tot),
            ("i_b", self.i_b),
            ("i_j", self.i_j),
            ("g", self.g),
        ];
        let non_negative = [("d_theta1", self.d_theta1), ("d_theta2", self.d_theta2)];
        for (name, value) in positive.into_iter().chain(non_negative) {
            if !value.is_finite() {
                return Err(ParamError::NotFinite { name, value });
            }
        }
        for (name, value) in positive {
            if value <= 0.0 {
                return Err(ParamError::NotPositive { name, value });
            }
        }
        for (name, value) in non_negative {
            if value < 0.0 {
                return Err(ParamError::Negative { name, value });
            }
        }
        Ok(())
    }
}

/// Which modelling assumption a state breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assumption {
    /// Both swing angles strictly inside (−π/2, π/2).
    SwingBound,
    /// Rope length strictly positive.
    PositiveRope,
}

impl std::fmt::Display for Assumption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Assumption::SwingBound => write!(f, "swing-bound assumption (|theta1|, |theta2| < pi/2)"),
            Assumption::PositiveRope => write!(f, "positive-rope assumption (rope length d > 0)"),
        }
    }
}

/// Generalized coordinates and their rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CraneState {
    pub q: Vector6<f64>,
    pub qdot: Vector6<f64>,
}

impl CraneState {
    pub fn new(q: Vector6<f64>, qdot: Vector6<f64>) -> Self {
        Self { q, qdot }
    }

    pub fn at_rest(q: Vector6<f64>) -> Self {
        Self { q, qdot: Vector6::zeros() }
    }

    /// Configuration hanging still at the reference set-point.
    pub fn at_reference(reference: &Reference) -> Self {
        Self::at_rest(reference.target_q())
    }

    pub fn alpha(&self) -> f64 {
        self.q[coord::ALPHA]
    }
    pub fn beta(&self) -> f64 {
        self.q[coord::BETA]
    }
    pub fn gamma(&self) -> f64 {
        self.q[coord::GAMMA]
    }
    pub fn rope(&self) -> f64 {
        self.q[coord::D]
    }
    pub fn theta1(&self) -> f64 {
        self.q[coord::THETA1]
    }
    pub fn theta2(&self) -> f64 {
        self.q[coord::THETA2]
    }

    /// First violated assumption, if any.
    pub fn violated_assumption(&self) -> Option<Assumption> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(self.theta1().abs() < half_pi && self.theta2().abs() < half_pi) {
            return Some(Assumption::SwingBound);
        }
        if !(self.rope() > 0.0) {
            return Some(Assumption::PositiveRope);
        }
        None
    }

    pub fn in_assumption_region(&self) -> bool {
        self.violated_assumption().is_none()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }

    /// Stacked state `[q; qdot]`.
    pub fn stacked(&self) -> nalgebra::SVector<f64, 12> {
        let mut x = nalgebra::SVector::<f64, 12>::zeros();
        x.fixed_rows_mut::<6>(0).copy_from(&self.q);
        x.fixed_rows_mut::<6>(6).copy_from(&self.qdot);
        x
    }

    pub fn from_stacked(x: &nalgebra::SVector<f64, 12>) -> Self {
        Self {
            q: x.fixed_rows::<6>(0).into_owned(),
            qdot: x.fixed_rows::<6>(6).into_owned(),
        }
    }
}

/// Constant set-point for the four actuated coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub d: f64,
}

impl Reference {
    pub fn new(alpha: f64, beta: f64, gamma: f64, d: f64) -> Self {
        Self { alpha, beta, gamma, d }
    }

    /// Target configuration: actuated coordinates at the set-point, payload
    /// hanging vertically.
    pub fn target_q(&self) -> Vector6<f64> {
        Vector6::new(self.alpha, self.beta, self.gamma, self.d, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), Assumption> {
        let finite = [self.alpha, self.beta, self.gamma, self.d].iter().all(|v| v.is_finite());
        if !finite || !(self.d > 0.0) {
            return Err(Assumption::PositiveRope);
        }
        Ok(())
    }
}

/// Point mass expressed in the frame that slews with the tower.
///
/// `pos` is the position in (radial, tangential, vertical) components and
/// `jac` its Jacobian with respect to `q`, so that the world velocity is
/// `R(alpha) * jac * qdot`. Column 0 is `e_z × pos`; the local position
/// never depends on `alpha` itself.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalPoint {
    pub mass: f64,
    pub pos: Vector3<f64>,
    pub jac: Matrix3x6<f64>,
}

struct Trig {
    sb: f64,
    cb: f64,
    sg: f64,
    cg: f64,
    s1: f64,
    c1: f64,
    s2: f64,
    c2: f64,
}

impl Trig {
    fn of(q: &Vector6<f64>) -> Self {
        let (sb, cb) = q[coord::BETA].sin_cos();
        let (sg, cg) = q[coord::GAMMA].sin_cos();
        let (s1, c1) = q[coord::THETA1].sin_cos();
        let (s2, c2) = q[coord::THETA2].sin_cos();
        Self { sb, cb, sg, cg, s1, c1, s2, c2 }
    }
}

fn slew_column(jac: &mut Matrix3x6<f64>, pos: &Vector3<f64>) {
    jac[(0, 0)] = -pos.y;
    jac[(1, 0)] = pos.x;
    jac[(2, 0)] = 0.0;
}

/// Boom centre of mass, jib centre of mass and payload, in that order.
pub(crate) fn local_points(q: &Vector6<f64>, p: &CraneParams) -> [LocalPoint; 3] {
    let t = Trig::of(q);
    let d = q[coord::D];
    let (lb, lj) = (p.l_b, p.l_j);

    let boom_pos = Vector3::new(0.5 * lb * t.cb, 0.0, 0.5 * lb * t.sb);
    let mut boom_jac = Matrix3x6::zeros();
    boom_jac.set_column(1, &Vector3::new(-0.5 * lb * t.sb, 0.0, 0.5 * lb * t.cb));
    slew_column(&mut boom_jac, &boom_pos);

    let jib_pos = Vector3::new(lb * t.cb + 0.5 * lj * t.cg, 0.0, lb * t.sb + 0.5 * lj * t.sg);
    let mut jib_jac = Matrix3x6::zeros();
    jib_jac.set_column(1, &Vector3::new(-lb * t.sb, 0.0, lb * t.cb));
    jib_jac.set_column(2, &Vector3::new(-0.5 * lj * t.sg, 0.0, 0.5 * lj * t.cg));
    slew_column(&mut jib_jac, &jib_pos);

    let offset = Vector3::new(t.s2, t.c2 * t.s1, -t.c1 * t.c2);
    let tip = Vector3::new(lb * t.cb + lj * t.cg, 0.0, lb * t.sb + lj * t.sg);
    let payload_pos = tip + d * offset;
    let mut payload_jac = Matrix3x6::zeros();
    payload_jac.set_column(1, &Vector3::new(-lb * t.sb, 0.0, lb * t.cb));
    payload_jac.set_column(2, &Vector3::new(-lj * t.sg, 0.0, lj * t.cg));
    payload_jac.set_column(3, &offset);
    payload_jac.set_column(4, &Vector3::new(0.0, d * t.c2 * t.c1, d * t.s1 * t.c2));
    payload_jac.set_column(5, &Vector3::new(d * t.c2, -d * t.s2 * t.s1, d * t.c1 * t.s2));
    slew_column(&mut payload_jac, &payload_pos);

    [
        LocalPoint { mass: p.m_b, pos: boom_pos, jac: boom_jac },
        LocalPoint { mass: p.m_j, pos: jib_pos, jac: jib_jac },
        LocalPoint { mass: p.m, pos: payload_pos, jac: payload_jac },
    ]
}

/// Time derivative of each local Jacobian along `qdot`, same order as
/// [`local_points`].
pub(crate) fn local_jacobian_rates(
    q: &Vector6<f64>,
    qdot: &Vector6<f64>,
    p: &CraneParams,
) -> [Matrix3x6<f64>; 3] {
    let t = Trig::of(q);
    let d = q[coord::D];
    let (lb, lj) = (p.l_b, p.l_j);
    let (db, dg, dd, d1, d2) = (
        qdot[coord::BETA],
        qdot[coord::GAMMA],
        qdot[coord::D],
        qdot[coord::THETA1],
        qdot[coord::THETA2],
    );

    let mut boom = Matrix3x6::zeros();
    boom.set_column(1, &Vector3::new(-0.5 * lb * t.cb * db, 0.0, -0.5 * lb * t.sb * db));

    let mut jib = Matrix3x6::zeros();
    jib.set_column(1, &Vector3::new(-lb * t.cb * db, 0.0, -lb * t.sb * db));
    jib.set_column(2, &Vector3::new(-0.5 * lj * t.cg * dg, 0.0, -0.5 * lj * t.sg * dg));

    let mut payload = Matrix3x6::zeros();
    payload.set_column(1, &Vector3::new(-lb * t.cb * db, 0.0, -lb * t.sb * db));
    payload.set_column(2, &Vector3::new(-lj * t.cg * dg, 0.0, -lj * t.sg * dg));
    payload.set_column(
        3,
        &Vector3::new(
            t.c2 * d2,
            t.c2 * t.c1 * d1 - t.s2 * t.s1 * d2,
            t.s1 * t.c2 * d1 + t.c1 * t.s2 * d2,
        ),
    );
    payload.set_column(
        4,
        &Vector3::new(
            0.0,
            dd * t.c2 * t.c1 - d * t.c2 * t.s1 * d1 - d * t.s2 * t.c1 * d2,
            dd * t.s1 * t.c2 + d * t.c1 * t.c2 * d1 - d * t.s1 * t.s2 * d2,
        ),
    );
    payload.set_column(
        5,
        &Vector3::new(
            dd * t.c2 - d * t.s2 * d2,
            -dd * t.s2 * t.s1 - d * t.s2 * t.c1 * d1 - d * t.c2 * t.s1 * d2,
            dd * t.c1 * t.s2 - d * t.s1 * t.s2 * d1 + d * t.c1 * t.c2 * d2,
        ),
    );

    // The slew column is e_z × pos, so its rate is e_z × (local position rate).
    let points = local_points(q, p);
    let mut out = [boom, jib, payload];
    for (rate, point) in out.iter_mut().zip(points.iter()) {
        let mut q_no_slew = *qdot;
        q_no_slew[coord::ALPHA] = 0.0;
        let pos_rate = point.jac * q_no_slew;
        slew_column(rate, &pos_rate);
    }
    out
}

fn slew_rotation(alpha: f64) -> Matrix3<f64> {
    let (s, c) = alpha.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// World position of the jib tip.
pub fn tip_position(q: &Vector6<f64>, p: &CraneParams) -> Vector3<f64> {
    let (sa, ca) = q[coord::ALPHA].sin_cos();
    let reach = p.l_b * q[coord::BETA].cos() + p.l_j * q[coord::GAMMA].cos();
    Vector3::new(
        reach * ca,
        reach * sa,
        p.l_b * q[coord::BETA].sin() + p.l_j * q[coord::GAMMA].sin(),
    )
}

/// Unit vector from the jib tip to the payload.
///
/// The radial component is `sin(theta2)` and the tangential one
/// `cos(theta2)·sin(theta1)`, so `theta1` swings the payload sideways and
/// `theta2` in and out.
pub fn rope_direction(q: &Vector6<f64>) -> Vector3<f64> {
    let (sa, ca) = q[coord::ALPHA].sin_cos();
    let (s1, c1) = q[coord::THETA1].sin_cos();
    let (s2, c2) = q[coord::THETA2].sin_cos();
    Vector3::new(ca * s2 - sa * c2 * s1, sa * s2 + ca * c2 * s1, -c1 * c2)
}

/// World position of the payload.
pub fn payload_position(q: &Vector6<f64>, p: &CraneParams) -> Vector3<f64> {
    tip_position(q, p) + q[coord::D] * rope_direction(q)
}

/// World positions of boom COM, jib COM and payload.
pub fn body_positions(q: &Vector6<f64>, p: &CraneParams) -> [Vector3<f64>; 3] {
    let rot = slew_rotation(q[coord::ALPHA]);
    local_points(q, p).map(|pt| rot * pt.pos)
}

/// Gravitational potential energy (J), zero with all links horizontal and
/// the rope of zero length.
pub fn potential_energy(q: &Vector6<f64>, p: &CraneParams) -> f64 {
    let sb = q[coord::BETA].sin();
    let sg = q[coord::GAMMA].sin();
    let d = q[coord::D];
    let hang = q[coord::THETA1].cos() * q[coord::THETA2].cos();
    p.g * p.m * (p.l_b * sb + p.l_j * sg - hang * d)
        + p.g * p.m_j * (p.l_b * sb + 0.5 * p.l_j * sg)
        + 0.5 * p.g * p.l_b * p.m_b * sb
}

/// Kinetic energy `½ q̇ᵀ M(q) q̇` (J).
pub fn kinetic_energy(state: &CraneState, p: &CraneParams) -> f64 {
    let m = dynamics::mass_matrix(&state.q, p);
    0.5 * state.qdot.dot(&(m * state.qdot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn q(values: [f64; 6]) -> Vector6<f64> {
        Vector6::from_row_slice(&values)
    }

    #[test]
    fn tip_lies_along_x_when_links_horizontal() {
        let p = CraneParams::default();
        let tip = tip_position(&q([0.0, 0.0, 0.0, 3.0, 0.0, 0.0]), &p);
        assert_relative_eq!(tip, Vector3::new(9.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn tip_stacks_vertically() {
        let p = CraneParams::default();
        let tip = tip_position(&q([0.3, FRAC_PI_2, FRAC_PI_2, 3.0, 0.0, 0.0]), &p);
        assert_relative_eq!(tip, Vector3::new(0.0, 0.0, 9.0), epsilon = 1e-14);
    }

    #[test]
    fn tip_hand_evaluated() {
        let p = CraneParams::default();
        // reach = 5 cos 0.3 + 4 cos 0.5 = 4.776682... + 3.510330... ;
        // height = 5 sin 0.3 + 4 sin 0.5.
        let reach = 5.0 * 0.955_336_489_125_606_f64 + 4.0 * 0.877_582_561_890_372_7;
        let height = 5.0 * 0.295_520_206_661_339_6 + 4.0 * 0.479_425_538_604_203;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let tip = tip_position(&q([FRAC_PI_4, 0.3, 0.5, 1.0, 0.0, 0.0]), &p);
        assert_relative_eq!(tip, Vector3::new(reach * h, reach * h, height), epsilon = 1e-12);
    }

    #[test]
    fn payload_hangs_below_tip() {
        let p = CraneParams::default();
        let qq = q([0.7, 0.4, 0.2, 5.0, 0.0, 0.0]);
        let diff = payload_position(&qq, &p) - tip_position(&qq, &p);
        assert_relative_eq!(diff, Vector3::new(0.0, 0.0, -5.0), epsilon = 1e-14);
    }

    #[test]
    fn swing_angles_are_tangential_and_radial() {
        let p = CraneParams::default();
        let base = q([0.0, 0.3, 0.2, 4.0, 0.0, 0.0]);
        let mut tangential = base;
        tangential[coord::THETA1] = 0.1;
        let mut radial = base;
        radial[coord::THETA2] = 0.1;
        let tan_shift = payload_position(&tangential, &p) - payload_position(&base, &p);
        let rad_shift = payload_position(&radial, &p) - payload_position(&base, &p);
        // alpha = 0: radial is +x, tangential is +y.
        assert_relative_eq!(tan_shift.x, 0.0, epsilon = 1e-14);
        assert!(tan_shift.y > 0.0);
        assert_relative_eq!(rad_shift.y, 0.0, epsilon = 1e-14);
        assert!(rad_shift.x > 0.0);
    }

    #[test]
    fn potential_at_horizontal_links() {
        let p = CraneParams::default();
        let u = potential_energy(&q([0.0, 0.0, 0.0, 5.0, 0.0, 0.0]), &p);
        assert_relative_eq!(u, -49.05, epsilon = 1e-12);
    }

    #[test]
    fn sideways_payload_has_no_potential() {
        let p = CraneParams::default();
        for d in [0.5, 5.0, 17.0] {
            let u = potential_energy(&q([0.0, 0.0, 0.0, d, FRAC_PI_2, 0.2]), &p);
            assert!(u.abs() < 1e-12);
        }
    }

    #[test]
    fn pure_hoist_kinetic_energy() {
        let p = CraneParams::default();
        let state = CraneState::new(
            q([0.4, 0.3, -0.2, 6.0, 0.0, 0.0]),
            q([0.0, 0.0, 0.0, 1.7, 0.0, 0.0]),
        );
        assert_relative_eq!(kinetic_energy(&state, &p), 0.5 * 1.7 * 1.7, epsilon = 1e-13);
        let rest = CraneState::at_rest(state.q);
        assert_eq!(kinetic_energy(&rest, &p), 0.0);
    }

    #[test]
    fn assumption_region_edges() {
        let mut s = CraneState::at_rest(q([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]));
        assert!(s.in_assumption_region());
        s.q[coord::THETA2] = FRAC_PI_2;
        assert_eq!(s.violated_assumption(), Some(Assumption::SwingBound));
        s.q[coord::THETA2] = 0.0;
        s.q[coord::D] = 0.0;
        assert_eq!(s.violated_assumption(), Some(Assumption::PositiveRope));
        s.q[coord::D] = f64::NAN;
        assert_eq!(s.violated_assumption(), Some(Assumption::PositiveRope));
    }

    #[test]
    fn params_reject_bad_values() {
        let mut p = CraneParams::default();
        assert!(p.validate().is_ok());
        p.m_b = -1.0;
        assert_eq!(p.validate(), Err(ParamError::NotPositive { name: "m_b", value: -1.0 }));
        let mut p = CraneParams::default();
        p.d_theta2 = -0.1;
        assert!(matches!(p.validate(), Err(ParamError::Negative { name: "d_theta2", .. })));
        let mut p = CraneParams::default();
        p.d_theta1 = 0.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn default_rod_inertias() {
        let p = CraneParams::default();
        assert_relative_eq!(p.i_b, 2.0 * 25.0 / 12.0);
        assert_relative_eq!(p.i_j, 3.0 * 16.0 / 12.0);
    }
}
