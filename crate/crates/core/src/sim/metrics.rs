//! Summary metrics of a recorded run.

use serde::Serialize;

use super::Trajectory;
use crate::model::{coord, Reference};

/// Settling band as a fraction of the step size `|reference − initial|`.
pub const SETTLING_BAND: f64 = 0.02;
/// Objective tolerance on `|q − q_d|` at the final sample (rad or m).
pub const OBJECTIVE_POSITION_TOL: f64 = 1e-2;
/// Objective tolerance on `|q̇|` at the final sample (rad/s or m/s).
pub const OBJECTIVE_VELOCITY_TOL: f64 = 1e-2;
/// Fraction of the run, counted from the end, used for the residual swing.
pub const RESIDUAL_WINDOW: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// Slew, boom, jib, rope settling times (s).
    pub settling_time: [f64; 4],
    pub peak_theta1: f64,
    pub peak_theta2: f64,
    /// RMS swing over the trailing window.
    pub residual_rms_theta1: f64,
    pub residual_rms_theta2: f64,
    pub max_abs_u: [f64; 4],
    /// `max |q − q_d|` at the final sample.
    pub final_position_error: f64,
    /// `max |q̇|` at the final sample.
    pub final_velocity: f64,
    pub objective_met: bool,
}

impl Metrics {
    /// `(name, value)` pairs in a fixed order, for tabular output.
    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        let s = &self.settling_time;
        let u = &self.max_abs_u;
        vec![
            ("settling_time_alpha", s[0]),
            ("settling_time_beta", s[1]),
            ("settling_time_gamma", s[2]),
            ("settling_time_d", s[3]),
            ("peak_theta1", self.peak_theta1),
            ("peak_theta2", self.peak_theta2),
            ("residual_rms_theta1", self.residual_rms_theta1),
            ("residual_rms_theta2", self.residual_rms_theta2),
            ("max_abs_u1", u[0]),
            ("max_abs_u2", u[1]),
            ("max_abs_u3", u[2]),
            ("max_abs_u4", u[3]),
            ("final_position_error", self.final_position_error),
            ("final_velocity", self.final_velocity),
            ("objective_met", if self.objective_met { 1.0 } else { 0.0 }),
        ]
    }
}

fn rms(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    (values.map(|v| v * v).sum::<f64>() / n as f64).sqrt()
}

/// Number of trailing rows forming the residual window.
pub fn residual_window_len(rows: usize) -> usize {
    ((rows as f64 * RESIDUAL_WINDOW).ceil() as usize).clamp(rows.min(1), rows)
}

pub fn compute_metrics(traj: &Trajectory, reference: &Reference) -> Metrics {
    let rows = &traj.rows;
    let target = reference.target_q();
    let Some(first) = rows.first() else {
        return Metrics {
            settling_time: [0.0; 4],
            peak_theta1: 0.0,
            peak_theta2: 0.0,
            residual_rms_theta1: 0.0,
            residual_rms_theta2: 0.0,
            max_abs_u: [0.0; 4],
            final_position_error: 0.0,
            final_velocity: 0.0,
            objective_met: false,
        };
    };

    let t0 = first.t;
    let settling_time = std::array::from_fn(|i| {
        let band = SETTLING_BAND * (target[i] - first.q[i]).abs();
        rows.iter()
            .rev()
            .find(|r| (r.q[i] - target[i]).abs() > band)
            .map_or(0.0, |r| r.t - t0)
    });

    let peak = |c: usize| rows.iter().map(|r| r.q[c].abs()).fold(0.0, f64::max);
    let tail = &rows[rows.len() - residual_window_len(rows.len())..];
    let mut max_abs_u = [0.0f64; 4];
    for r in rows {
        for (m, u) in max_abs_u.iter_mut().zip(r.u) {
            *m = m.max(u.abs());
        }
    }

    let last = rows.last().unwrap_or(first);
    let final_position_error = (0..6).map(|i| (last.q[i] - target[i]).abs()).fold(0.0, f64::max);
    let final_velocity = last.qdot.iter().map(|v| v.abs()).fold(0.0, f64::max);

    Metrics {
        settling_time,
        peak_theta1: peak(coord::THETA1),
        peak_theta2: peak(coord::THETA2),
        residual_rms_theta1: rms(tail.iter().map(|r| r.q[coord::THETA1])),
        residual_rms_theta2: rms(tail.iter().map(|r| r.q[coord::THETA2])),
        max_abs_u,
        final_position_error,
        final_velocity,
        objective_met: final_position_error <= OBJECTIVE_POSITION_TOL
            && final_velocity <= OBJECTIVE_VELOCITY_TOL,
    }
}
