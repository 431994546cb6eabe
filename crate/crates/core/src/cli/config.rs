//! Experiment configuration files (TOML).
//!
//! Every section is optional and falls back to the reference crane and the
//! declared default scenario. Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::control::{GainSet, LqrWeights};
use crate::model::{CraneParams, CraneState, Reference};
use crate::sim::{self, ControllerSpec, Integrator, ScheduleEntry, SimConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

/// `[crane]`. Omitted luff inertias follow the uniform-rod formula for the
/// configured masses and lengths.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CraneSection {
    pub m_b: Option<f64>,
    pub m_j: Option<f64>,
    pub m: Option<f64>,
    pub l_b: Option<f64>,
    pub l_j: Option<f64>,
    pub i_tot: Option<f64>,
    pub i_b: Option<f64>,
    pub i_j: Option<f64>,
    pub d_theta1: Option<f64>,
    pub d_theta2: Option<f64>,
    pub g: Option<f64>,
}

impl CraneSection {
    pub fn params(&self) -> Result<CraneParams, ConfigError> {
        let base = CraneParams::default();
        let mut p = CraneParams::with_rod_inertias(
            self.m_b.unwrap_or(base.m_b),
            self.m_j.unwrap_or(base.m_j),
            self.m.unwrap_or(base.m),
            self.l_b.unwrap_or(base.l_b),
            self.l_j.unwrap_or(base.l_j),
        );
        let overrides = [
            (&mut p.i_tot, self.i_tot),
            (&mut p.i_b, self.i_b),
            (&mut p.i_j, self.i_j),
            (&mut p.d_theta1, self.d_theta1),
            (&mut p.d_theta2, self.d_theta2),
            (&mut p.g, self.g),
        ];
        for (slot, value) in overrides {
            if let Some(v) = value {
                *slot = v;
            }
        }
        p.validate().map_err(|e| invalid("crane", e.to_string()))?;
        Ok(p)
    }
}

/// `[scenario]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    /// Free-form label copied into every output.
    pub label: String,
    pub dt: f64,
    pub t_final: f64,
    /// `[alpha, beta, gamma, d, theta1, theta2]`, radians and metres.
    pub initial_q: [f64; 6],
    pub initial_qdot: [f64; 6],
    pub reference: Reference,
    pub integrator: Integrator,
    /// Optional symmetric clamp on `[u1, u2, u3, u4]`.
    pub saturation: Option<[f64; 4]>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let d = sim::default_scenario(ControllerSpec::OpenLoop(Vec::new()));
        Self {
            label: "declared default scenario".into(),
            dt: d.dt,
            t_final: d.t_final,
            initial_q: d.initial.q.into(),
            initial_qdot: d.initial.qdot.into(),
            reference: d.reference,
            integrator: d.integrator,
            saturation: d.saturation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Nonlinear,
    Lqr,
    OpenLoop,
}

/// One `[[controllers]]` entry. Only the fields belonging to `kind` may be
/// given; the rest default to the reference gains and weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerEntry {
    pub name: String,
    pub kind: ControllerKind,
    pub gains: Option<GainSet>,
    pub q_diag: Option<[f64; 12]>,
    pub r_diag: Option<[f64; 4]>,
    pub schedule: Option<Vec<ScheduleEntry>>,
}

impl ControllerEntry {
    pub fn spec(&self, index: usize) -> Result<ControllerSpec, ConfigError> {
        let field = |f: &str| format!("controllers[{index}] ({}).{f}", self.name);
        let reject = |present: bool, f: &str| {
            if present {
                Err(invalid(field(f), format!("not allowed for kind {:?}", self.kind)))
            } else {
                Ok(())
            }
        };
        match self.kind {
            ControllerKind::Nonlinear => {
                reject(self.q_diag.is_some(), "q_diag")?;
                reject(self.r_diag.is_some(), "r_diag")?;
                reject(self.schedule.is_some(), "schedule")?;
                let gains = self.gains.unwrap_or_default();
                gains.validate().map_err(|e| invalid(field("gains"), e.to_string()))?;
                Ok(ControllerSpec::Nonlinear(gains))
            }
            ControllerKind::Lqr => {
                reject(self.gains.is_some(), "gains")?;
                reject(self.schedule.is_some(), "schedule")?;
                let base = LqrWeights::default();
                let weights = LqrWeights {
                    q_diag: self.q_diag.unwrap_or(base.q_diag),
                    r_diag: self.r_diag.unwrap_or(base.r_diag),
                };
                weights.validate().map_err(|e| invalid(field("weights"), e.to_string()))?;
                Ok(ControllerSpec::Lqr(weights))
            }
            ControllerKind::OpenLoop => {
                reject(self.gains.is_some(), "gains")?;
                reject(self.q_diag.is_some(), "q_diag")?;
                reject(self.r_diag.is_some(), "r_diag")?;
                Ok(ControllerSpec::OpenLoop(self.schedule.clone().unwrap_or_default()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// `[output]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Used when `--out` is not given.
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec![OutputFormat::Csv, OutputFormat::Json] }
    }
}

/// `[validation]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSection {
    pub seed: u64,
    pub samples: usize,
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self { seed: 0, samples: 50 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub crane: CraneSection,
    pub scenario: ScenarioSection,
    pub controllers: Vec<ControllerEntry>,
    pub output: OutputSection,
    pub validation: ValidationSection,
}

/// A controller ready to simulate.
#[derive(Debug, Clone)]
pub struct Run {
    pub name: String,
    pub sim: SimConfig,
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub params: CraneParams,
    pub runs: Vec<Run>,
    /// SHA-256 over the canonical form of the parsed configuration.
    pub hash: String,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path)
    }

    pub fn canonical_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every section and builds one [`SimConfig`] per controller.
    pub fn resolve(self) -> Result<Experiment, ConfigError> {
        let params = self.crane.params()?;
        let s = &self.scenario;
        let initial = CraneState::new(Vector6::from(s.initial_q), Vector6::from(s.initial_qdot));

        let mut names = BTreeSet::new();
        let mut runs = Vec::with_capacity(self.controllers.len());
        for (index, entry) in self.controllers.iter().enumerate() {
            if entry.name.is_empty() || !entry.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(invalid(
                    format!("controllers[{index}].name"),
                    format!("`{}` must be non-empty and use only [A-Za-z0-9_-]", entry.name),
                ));
            }
            if !names.insert(entry.name.clone()) {
                return Err(invalid(format!("controllers[{index}].name"), format!("duplicate name `{}`", entry.name)));
            }
            let controller = entry.spec(index)?;
            let monitor_gains = match controller {
                ControllerSpec::Nonlinear(g) => g,
                _ => GainSet::default(),
            };
            let sim = SimConfig {
                dt: s.dt,
                t_final: s.t_final,
                initial,
                reference: s.reference,
                controller,
                integrator: s.integrator,
                saturation: s.saturation,
                monitor_gains,
            };
            sim.validate().map_err(|e| invalid("scenario", e.to_string()))?;
            runs.push(Run { name: entry.name.clone(), sim });
        }

        // Scenario checks still apply when no controller is listed.
        if runs.is_empty() {
            let probe = SimConfig {
                dt: s.dt,
                t_final: s.t_final,
                initial,
                reference: s.reference,
                controller: ControllerSpec::OpenLoop(Vec::new()),
                integrator: s.integrator,
                saturation: s.saturation,
                monitor_gains: GainSet::default(),
            };
            probe.validate().map_err(|e| invalid("scenario", e.to_string()))?;
        }

        let hash = self.canonical_hash();
        Ok(Experiment { config: self, params, runs, hash })
    }
}

impl Experiment {
    pub fn run(&self, name: &str) -> Option<&Run> {
        self.runs.iter().find(|r| r.name == name)
    }
}
