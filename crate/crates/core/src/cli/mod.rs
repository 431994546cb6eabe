//! Command-line front end: `simulate`, `compare`, `validate`.
//!
//! Exit codes: 0 success, 1 property failure, 2 configuration error,
//! 3 simulation abort.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dynamics::{CraneModel, KnuckleCrane};
use crate::sim::{self, compute_metrics, Metrics, SimError, Trajectory, TrajectoryMeta, TrajectoryRow};
use crate::validation;
use config::{Experiment, ExperimentConfig, OutputFormat, Run};
use output::{MetricsSummary, RunStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

/// Environment variable capping the number of parallel runs in `compare`.
pub const THREADS_ENV: &str = "KNUCKLE_SIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "knuckle-sim", version, about = "Knuckle boom crane simulation and control experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one controller and write its trajectory and metrics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        controller: String,
        /// Output directory (default: `[output] directory`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every configured controller on the same scenario.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check structural properties of the dynamics at random states.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    execute(&cli.command, &mut stdout, &mut stderr)
}

pub fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match command {
        Command::Simulate { config, controller, out: dir } => cmd_simulate(config, controller, dir.as_deref(), out, err),
        Command::Compare { config, out: dir } => cmd_compare(config, dir.as_deref(), out, err),
        Command::Validate { config, seed, samples } => cmd_validate(config, *seed, *samples, out, err),
    }
}

fn load(path: &Path, err: &mut dyn Write) -> Option<Experiment> {
    match ExperimentConfig::load(path).and_then(ExperimentConfig::resolve) {
        Ok(e) => Some(e),
        Err(e) => {
            let _ = writeln!(err, "error: config {}: {e}", path.display());
            None
        }
    }
}

fn output_dir(experiment: &Experiment, cli_out: Option<&Path>, err: &mut dyn Write) -> Option<PathBuf> {
    let dir = cli_out.map(Path::to_path_buf).unwrap_or_else(|| experiment.config.output.directory.clone());
    match std::fs::create_dir_all(&dir) {
        Ok(()) => Some(dir),
        Err(e) => {
            let _ = writeln!(err, "error: cannot create output directory {}: {e}", dir.display());
            None
        }
    }
}

/// Result of one controller run, possibly cut short.
pub struct RunOutcome {
    pub name: String,
    pub trajectory: Trajectory,
    pub metrics: Metrics,
    pub error: Option<SimError>,
}

impl RunOutcome {
    pub fn status(&self) -> RunStatus {
        match &self.error {
            None => RunStatus::Complete,
            Some(e) => RunStatus::Aborted(e.to_string()),
        }
    }
}

pub fn execute_run(experiment: &Experiment, run: &Run) -> RunOutcome {
    let model = KnuckleCrane::new(experiment.params);
    let mut rows: Vec<TrajectoryRow> = Vec::with_capacity(run.sim.steps() + 1);
    let error = sim::simulate_with(&run.sim, &model, |row| {
        rows.push(*row);
        ControlFlow::Continue(())
    })
    .err();
    let trajectory = Trajectory {
        rows,
        meta: TrajectoryMeta {
            config_hash: experiment.hash.clone(),
            params: experiment.params,
            controller: run.name.clone(),
        },
    };
    let metrics = compute_metrics(&trajectory, &run.sim.reference);
    RunOutcome { name: run.name.clone(), trajectory, metrics, error }
}

fn write_outcome(experiment: &Experiment, dir: &Path, outcome: &RunOutcome) -> std::io::Result<()> {
    let formats = &experiment.config.output.formats;
    if formats.contains(&OutputFormat::Csv) {
        let path = dir.join(format!("trajectory_{}.csv", outcome.name));
        output::write_file(&path, &output::trajectory_csv(&outcome.trajectory.rows))?;
    }
    if formats.contains(&OutputFormat::Json) {
        let summary = MetricsSummary {
            controller: &outcome.name,
            scenario: &experiment.config.scenario.label,
            config_hash: &experiment.hash,
            status: outcome.status(),
            rows: outcome.trajectory.rows.len(),
            params: experiment.params,
            metrics: &outcome.metrics,
        };
        let path = dir.join(format!("metrics_{}.json", outcome.name));
        output::write_file(&path, &output::metrics_json(&summary))?;
    }
    Ok(())
}

fn report_abort(outcome: &RunOutcome, err: &mut dyn Write) {
    if let Some(e) = &outcome.error {
        let _ = writeln!(
            err,
            "error: controller `{}` aborted: {e} (partial results: {} rows)",
            outcome.name,
            outcome.trajectory.rows.len()
        );
    }
}

pub fn cmd_simulate(
    config: &Path,
    controller: &str,
    cli_out: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(experiment) = load(config, err) else {
        return EXIT_CONFIG;
    };
    let Some(run) = experiment.run(controller) else {
        let known: Vec<_> = experiment.runs.iter().map(|r| r.name.as_str()).collect();
        let _ = writeln!(err, "error: config {}: no controller named `{controller}` (have: {known:?})", config.display());
        return EXIT_CONFIG;
    };
    let Some(dir) = output_dir(&experiment, cli_out, err) else {
        return EXIT_CONFIG;
    };
    let outcome = execute_run(&experiment, run);
    if let Err(e) = write_outcome(&experiment, &dir, &outcome) {
        let _ = writeln!(err, "error: writing results to {}: {e}", dir.display());
        return EXIT_ABORT;
    }
    report_abort(&outcome, err);
    let m = &outcome.metrics;
    let _ = writeln!(
        out,
        "{}: {} rows, objective_met = {}, peak |theta1| = {}, peak |theta2| = {} [{}]",
        outcome.name,
        outcome.trajectory.rows.len(),
        m.objective_met,
        output::format_g12(m.peak_theta1),
        output::format_g12(m.peak_theta2),
        experiment.config.scenario.label
    );
    if outcome.error.is_some() {
        EXIT_ABORT
    } else {
        EXIT_OK
    }
}

/// Worker count for `compare`: the environment cap if set, otherwise the
/// available parallelism, never more than `jobs`.
pub fn worker_count(jobs: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.min(jobs).max(1)
}

fn run_all(experiment: &Experiment) -> Vec<RunOutcome> {
    let jobs = experiment.runs.len();
    let workers = worker_count(jobs);
    let mut slots: Vec<Option<RunOutcome>> = (0..jobs).map(|_| None).collect();
    for (batch_runs, batch_slots) in experiment.runs.chunks(workers).zip(slots.chunks_mut(workers)) {
        std::thread::scope(|scope| {
            for (run, slot) in batch_runs.iter().zip(batch_slots.iter_mut()) {
                scope.spawn(move || *slot = Some(execute_run(experiment, run)));
            }
        });
    }
    slots.into_iter().map(|s| s.expect("every run finishes")).collect()
}

fn ranking_key(m: &Metrics) -> (f64, f64) {
    (m.peak_theta1.max(m.peak_theta2), m.settling_time.iter().copied().fold(0.0, f64::max))
}

pub fn cmd_compare(config: &Path, cli_out: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(experiment) = load(config, err) else {
        return EXIT_CONFIG;
    };
    if experiment.runs.len() < 2 {
        let _ = writeln!(
            err,
            "error: config {}: compare needs at least 2 controllers (found {})",
            config.display(),
            experiment.runs.len()
        );
        return EXIT_CONFIG;
    }
    let Some(dir) = output_dir(&experiment, cli_out, err) else {
        return EXIT_CONFIG;
    };
    let outcomes = run_all(&experiment);
    for outcome in &outcomes {
        if let Err(e) = write_outcome(&experiment, &dir, outcome) {
            let _ = writeln!(err, "error: writing results to {}: {e}", dir.display());
            return EXIT_ABORT;
        }
        report_abort(outcome, err);
    }
    let columns: Vec<_> =
        outcomes.iter().map(|o| (o.name.as_str(), &o.metrics, o.error.is_none())).collect();
    if let Err(e) = output::write_file(&dir.join("comparison.csv"), &output::comparison_csv(&columns)) {
        let _ = writeln!(err, "error: writing comparison.csv: {e}");
        return EXIT_ABORT;
    }

    let mut order: Vec<_> = outcomes.iter().collect();
    order.sort_by(|a, b| ranking_key(&a.metrics).partial_cmp(&ranking_key(&b.metrics)).unwrap_or(std::cmp::Ordering::Equal));
    let _ = writeln!(out, "scenario: {}", experiment.config.scenario.label);
    let _ = writeln!(
        out,
        "{:<4} {:<16} {:>14} {:>14} {:>14} {:>10} {:>9}",
        "rank", "controller", "peak_theta1", "peak_theta2", "settling_max", "objective", "status"
    );
    for (rank, o) in order.iter().enumerate() {
        let m = &o.metrics;
        let flag = if o.error.is_none() { "complete" } else { "PARTIAL" };
        let _ = writeln!(
            out,
            "{:<4} {:<16} {:>14} {:>14} {:>14} {:>10} {:>9}",
            rank + 1,
            o.name,
            output::format_g12(m.peak_theta1),
            output::format_g12(m.peak_theta2),
            output::format_g12(ranking_key(m).1),
            m.objective_met,
            flag
        );
    }
    if outcomes.iter().any(|o| o.error.is_some()) {
        EXIT_ABORT
    } else {
        EXIT_OK
    }
}

/// Runs the property suite against `model` and prints one line per property.
pub fn validate_model(model: &dyn CraneModel, seed: u64, samples: usize, out: &mut dyn Write) -> i32 {
    let reports = validation::run_suite(model, seed, samples);
    let _ = writeln!(out, "validation: seed {seed}, {samples} samples");
    for report in &reports {
        let _ = writeln!(out, "{report}");
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed == 0 {
        let _ = writeln!(out, "all {} properties pass", reports.len());
        EXIT_OK
    } else {
        let _ = writeln!(out, "{failed} of {} properties FAIL", reports.len());
        EXIT_PROPERTY_FAILURE
    }
}

pub fn cmd_validate(
    config: &Path,
    seed: Option<u64>,
    samples: Option<usize>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(experiment) = load(config, err) else {
        return EXIT_CONFIG;
    };
    let section = experiment.config.validation;
    let samples = samples.unwrap_or(section.samples);
    if samples == 0 {
        let _ = writeln!(err, "error: validation.samples must be at least 1");
        return EXIT_CONFIG;
    }
    validate_model(&KnuckleCrane::new(experiment.params), seed.unwrap_or(section.seed), samples, out)
}
