use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use knuckle_crane::cli::{self, output::TRAJECTORY_COLUMNS};
use knuckle_crane::dynamics::{CoriolisMatrix, CraneModel, FrictionVector, GravityVector, KnuckleCrane, MassMatrix};
use knuckle_crane::model::CraneParams;
use nalgebra::Vector6;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_knuckle-sim"))
}

fn shipped_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const SHORT: &str = r#"
[scenario]
dt = 0.01
t_final = 2.0
initial_q = [0.0, 0.2, 0.1, 6.0, 0.05, 0.05]

[scenario.reference]
alpha = 0.5
beta = 0.4
gamma = 0.3
d = 5.0

[[controllers]]
name = "nl"
kind = "nonlinear"

[[controllers]]
name = "lqr"
kind = "lqr"
"#;

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_passes_on_shipped_defaults() {
    let o = bin().args(["validate", "--config"]).arg(shipped_config()).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 7);
}

#[test]
fn validate_rejects_negative_boom_mass_before_checking() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[crane]\nm_b = -1.0\n");
    let o = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m_b"), "{}", stderr(&o));
    assert!(!stdout(&o).contains("PASS"));
}

#[test]
fn validate_seed_and_samples_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[validation]\nseed = 5\nsamples = 3\n");
    let a = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert!(stdout(&a).contains("seed 5, 3 samples"));
    let b = bin().args(["validate", "--seed", "9", "--samples", "4", "--config"]).arg(&cfg).output().unwrap();
    assert!(stdout(&b).contains("seed 9, 4 samples"));
    let c = bin().args(["validate", "--seed", "9", "--samples", "4", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(b.stdout, c.stdout);
}

#[test]
fn simulate_writes_expected_rows_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let out = dir.path().join("run");
    let o = bin().args(["simulate", "--controller", "nl", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("trajectory_nl.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), TRAJECTORY_COLUMNS.join(","));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().all(|r| r.split(',').count() == TRAJECTORY_COLUMNS.len()));
    assert!(rows[0].starts_with("0,0,0.2,0.1,6,0.05,0.05,"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics_nl.json")).unwrap()).unwrap();
    assert_eq!(json["rows"], 201);
    assert_eq!(json["status"]["state"], "complete");
    assert_eq!(json["scenario"], "declared default scenario");
}

#[test]
fn simulate_with_negative_reference_rope_names_the_rope_assumption() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SHORT.replace("d = 5.0", "d = -1.0"));
    let o = bin().args(["simulate", "--controller", "nl", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("positive-rope assumption"), "{}", stderr(&o));
}

#[test]
fn unknown_controller_and_unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let o = bin().args(["simulate", "--controller", "nope", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), &format!("{SHORT}\n[output]\ncolour = \"red\"\n"));
    let o = bin().args(["compare", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
    let o = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runaway_hoist_exits_with_abort_and_keeps_partial_rows() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
[scenario]
dt = 0.001
t_final = 5.0
initial_q = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0]

[[controllers]]
name = "yank"
kind = "open-loop"
schedule = [{ t = 0.0, u = [0.0, 245.25, 98.1, -60.0] }]
"#;
    let cfg = write_config(dir.path(), body);
    let o = bin().args(["simulate", "--controller", "yank", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("row"), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics_yank.json")).unwrap()).unwrap();
    assert_eq!(json["status"]["state"], "aborted");
    let rows = json["rows"].as_u64().unwrap();
    assert!(rows > 1 && rows < 5001);
}

#[test]
fn compare_needs_two_controllers() {
    let dir = tempfile::tempdir().unwrap();
    let single = SHORT.split("[[controllers]]\nname = \"lqr\"").next().unwrap();
    let cfg = write_config(dir.path(), single);
    let o = bin().args(["compare", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

fn compare_into(cfg: &Path, out: &Path, threads: Option<&str>) -> Output {
    let mut cmd = bin();
    cmd.args(["compare", "--config"]).arg(cfg).arg("--out").arg(out);
    match threads {
        Some(n) => cmd.env(cli::THREADS_ENV, n),
        None => cmd.env_remove(cli::THREADS_ENV),
    };
    cmd.output().unwrap()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn compare_reruns_are_byte_identical_for_any_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let oa = compare_into(&cfg, &a, None);
    let ob = compare_into(&cfg, &b, None);
    let oc = compare_into(&cfg, &c, Some("1"));
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(oa.stdout, oc.stdout);
    let files = dir_contents(&a);
    let names: Vec<_> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["comparison.csv", "metrics_lqr.json", "metrics_nl.json", "trajectory_lqr.csv", "trajectory_nl.csv"]
    );
    assert_eq!(files, dir_contents(&b));
    assert_eq!(files, dir_contents(&c));
}

#[test]
fn duplicated_controller_gives_identical_metric_columns() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{SHORT}\n[[controllers]]\nname = \"nl_again\"\nkind = \"nonlinear\"\n");
    let cfg = write_config(dir.path(), &body);
    let o = compare_into(&cfg, dir.path(), None);
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "metric,nl,lqr,nl_again");
    for line in lines {
        let cells: Vec<_> = line.split(',').collect();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[1], cells[3], "{line}");
    }
    assert_eq!(
        std::fs::read(dir.path().join("trajectory_nl.csv")).unwrap(),
        std::fs::read(dir.path().join("trajectory_nl_again.csv")).unwrap()
    );
}

/// Reports a gravity vector with the boom term doubled.
struct CorruptedGravity(KnuckleCrane);

impl CraneModel for CorruptedGravity {
    fn params(&self) -> &CraneParams {
        self.0.params()
    }
    fn mass_matrix(&self, q: &Vector6<f64>) -> MassMatrix {
        self.0.mass_matrix(q)
    }
    fn coriolis_matrix(&self, q: &Vector6<f64>, qdot: &Vector6<f64>) -> CoriolisMatrix {
        self.0.coriolis_matrix(q, qdot)
    }
    fn gravity_vector(&self, q: &Vector6<f64>) -> GravityVector {
        let mut g = self.0.gravity_vector(q);
        g[1] *= 2.0;
        g
    }
    fn friction_vector(&self, q: &Vector6<f64>, qdot: &Vector6<f64>) -> FrictionVector {
        self.0.friction_vector(q, qdot)
    }
    fn potential_energy(&self, q: &Vector6<f64>) -> f64 {
        self.0.potential_energy(q)
    }
}

#[test]
fn corrupted_gravity_fails_the_gradient_property_with_state() {
    let model = CorruptedGravity(KnuckleCrane::new(CraneParams::default()));
    let mut report = Vec::new();
    let code = cli::validate_model(&model, 0, 50, &mut report);
    let text = String::from_utf8(report).unwrap();
    assert_eq!(code, cli::EXIT_PROPERTY_FAILURE);
    let failing: Vec<_> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    // Forward dynamics uses g, so the substitute-back identity still holds
    // but the Euler-Lagrange residual breaks along with the gradient check.
    assert_eq!(failing.len(), 2, "{text}");
    assert!(failing[0].contains("gravity equals grad U"));
    assert!(failing[1].contains("Euler-Lagrange"));
    assert!(text.contains("q = ["), "{text}");

    let mut clean = Vec::new();
    assert_eq!(cli::validate_model(&KnuckleCrane::new(CraneParams::default()), 0, 50, &mut clean), cli::EXIT_OK);
}

#[test]
fn worker_count_respects_cap() {
    assert_eq!(cli::worker_count(1), 1);
    assert!(cli::worker_count(8) >= 1);
}
