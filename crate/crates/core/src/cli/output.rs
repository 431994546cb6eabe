//! File formats: trajectory CSV, metric summaries, comparison matrix.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::model::CraneParams;
use crate::sim::{Metrics, TrajectoryRow};

pub const TRAJECTORY_COLUMNS: [&str; 20] = [
    "t", "alpha", "beta", "gamma", "d", "theta1", "theta2", "alpha_dot", "beta_dot", "gamma_dot", "d_dot",
    "theta1_dot", "theta2_dot", "u1", "u2", "u3", "u4", "E", "V", "Vdot",
];

/// `printf("%.12g")` without locale: twelve significant digits, trailing
/// zeros removed, exponent form outside `[1e-4, 1e12)`.
pub fn format_g12(x: f64) -> String {
    const PRECISION: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= PRECISION {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 20 * 16 + 128);
    out.push_str(&TRAJECTORY_COLUMNS.join(","));
    out.push('\n');
    for r in rows {
        let values = std::iter::once(r.t)
            .chain(r.q)
            .chain(r.qdot)
            .chain(r.u)
            .chain([r.energy, r.lyapunov, r.lyapunov_rate]);
        for (i, v) in values.enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_g12(v));
        }
        out.push('\n');
    }
    out
}

/// Run outcome recorded next to the metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "detail")]
pub enum RunStatus {
    Complete,
    /// The run stopped early; metrics cover the recorded prefix only.
    Aborted(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsSummary<'a> {
    pub controller: &'a str,
    pub scenario: &'a str,
    pub config_hash: &'a str,
    pub status: RunStatus,
    pub rows: usize,
    pub params: CraneParams,
    pub metrics: &'a Metrics,
}

pub fn metrics_json(summary: &MetricsSummary<'_>) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("metrics serialize");
    s.push('\n');
    s
}

/// `metric,<name1>,<name2>,...` followed by one line per metric, then a
/// `complete` line (1 or 0).
pub fn comparison_csv(columns: &[(&str, &Metrics, bool)]) -> String {
    let mut out = String::from("metric");
    for (name, _, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let tables: Vec<_> = columns.iter().map(|(_, m, _)| m.named_values()).collect();
    let Some(first) = tables.first() else {
        return out;
    };
    for (row, (metric, _)) in first.iter().enumerate() {
        out.push_str(metric);
        for table in &tables {
            let _ = write!(out, ",{}", format_g12(table[row].1));
        }
        out.push('\n');
    }
    out.push_str("complete");
    for (_, _, complete) in columns {
        out.push_str(if *complete { ",1" } else { ",0" });
    }
    out.push('\n');
    out
}

pub fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    std::fs::write(path, contents.as_bytes())
}
