use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bolab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bolab"))
        .args(args)
        .env("BOLAB_OUT", out)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn params_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = bolab(dir.path(), &["params", "--s", "0.5", "--eps", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for (name, value) in [("gamma", "0"), ("beta", "0.5"), ("sigma", "0.75"), ("theta", "0.25"), ("c_1", "256")] {
        let found = text
            .lines()
            .any(|l| l.split_whitespace().collect::<Vec<_>>() == [name, value]);
        assert!(found, "{name} = {value} missing in\n{text}");
    }
    let p = json(&dir.path().join("params/params.json"));
    assert_eq!(p["params"]["theta"], 0.25);
    assert_eq!(p["config"]["infr"]["s"], 0.5);
    let csv = fs::read_to_string(dir.path().join("params/params.csv")).unwrap();
    assert!(csv.contains("c_1,256\n"));
}

#[test]
fn params_outside_domain_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bolab(dir.path(), &["params", "--s", "0.5", "--eps", "0.6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("infr"), "{}", stderr(&o));
}

#[test]
fn gauge_check_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = bolab(dir.path(), &["gauge-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("round-trip relative error ≤ 1e-10: PASS"), "{}", stdout(&o));
    let rep = json(&dir.path().join("gauge-check/gauge-check.json"));
    assert_eq!(rep["verdict"], "pass");
    assert_eq!(rep["config"]["command"], "gauge-check");
    assert_eq!(rep["config"]["grid"]["n_points"], 1024);
    assert_eq!(rep["config"]["data"]["kind"], "gaussian-derivative");
}

#[test]
fn under_resolved_gauge_check_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = bolab(dir.path(), &["gauge-check", "--n-points", "16", "--half-length", "3.1416", "--width", "0.5", "--amplitude", "3"]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn simulate_rejects_large_step() {
    let dir = tempfile::tempdir().unwrap();
    let o = bolab(dir.path(), &["simulate", "--dt", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("stability bound"), "{err}");
    assert!(err.contains("dt = 0.5"), "{err}");
}

#[test]
fn simulate_exports_a_loadable_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = bolab(
        dir.path(),
        &["simulate", "--n-points", "128", "--half-length", "25.132741228718345", "--t", "0.2", "--dt", "0.01", "--save-every", "0.05"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("simulate: DESCRIPTIVE"));
    let traj = bo_core::dynamics::Trajectory::load(&dir.path().join("simulate/trajectory")).unwrap();
    assert_eq!(traj.times().len(), 5);
    assert_eq!(traj.grid().n_points(), 128);
    let names: Vec<String> = fs::read_dir(dir.path().join("simulate"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().all(|n| !n.starts_with('.')), "temp files left: {names:?}");
}

#[test]
fn csv_reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--data",
        "rough-random",
        "--seed",
        "9",
        "--n-points",
        "128",
        "--half-length",
        "6.283185307179586",
        "--t",
        "0.05",
        "--dt",
        "1e-3",
        "--save-every",
        "0.01",
    ];
    for d in [&a, &b] {
        let o = bolab(d.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("simulate/simulate.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let o = bolab(a.path(), &["lemma21", "--n-points", "32", "--amplitudes", "0,0.1", "--t", "0.02"]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let o = bolab(b.path(), &["lemma21", "--n-points", "32", "--amplitudes", "0,0.1", "--t", "0.02"]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("lemma21/lemma21.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn unknown_config_key_names_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"grid": {"n_points": 64}, "time": {"dtt": 0.1}}"#).unwrap();
    let o = bolab(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("time") && err.contains("dtt"), "{err}");
}

#[test]
fn invalid_values_name_their_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = bolab(dir.path(), &["smoothing", "--resolutions", "1024,512"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment.resolutions"), "{}", stderr(&o));
    let o = bolab(dir.path(), &["estimates", "--terms", "Q+,X"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment.terms[1]"), "{}", stderr(&o));
    let o = bolab(dir.path(), &["smoothing", "--data", "gaussian-derivative"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("data.kind"), "{}", stderr(&o));
    let o = bolab(dir.path(), &["params", "--jobs", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bolab(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(bolab(dir.path(), &["params", "--s", "half"]).status.code(), Some(2));
    assert_eq!(bolab(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn flags_override_config_and_out_overrides_env() {
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("elsewhere");
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"command": "gauge-check", "grid": {"n_points": 256, "half_length": 25.132741228718345}, "time": {"t_final": 0.1, "dt": 0.01}}"#,
    )
    .unwrap();
    let o = bolab(
        dir.path(),
        &["gauge-check", "--config", cfg.to_str().unwrap(), "--n-points", "512", "--out", other.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = json(&other.join("gauge-check/gauge-check.json"));
    assert_eq!(rep["config"]["grid"]["n_points"], 512);
    assert_eq!(rep["config"]["time"]["t_final"], 0.1);
    assert!(!dir.path().join("gauge-check").exists());

    let o = bolab(dir.path(), &["nfe", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("command"));
}

#[test]
fn nfe_levels_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let o = bolab(dir.path(), &["nfe", "--jobs", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let levels = json(&dir.path().join("nfe/nfe-levels.json"));
    let r: Vec<f64> = levels["nfe"]["levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["residual"].as_f64().unwrap())
        .collect();
    assert_eq!(r.len(), 2);
    assert!(r[1] < r[0], "{r:?}");
    let rep = json(&dir.path().join("nfe/nfe.json"));
    assert_eq!(rep["config"]["infr"]["n_threshold"], 1000.0);
}

#[test]
fn quick_estimates_write_one_report_per_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = bolab(
        dir.path(),
        &[
            "estimates",
            "--terms",
            "Q+",
            "--n-points",
            "64",
            "--half-length",
            "6.283185307179586",
            "--trials",
            "2",
            "--alpha-list",
            "4,8",
            "--m-list",
            "2,4",
            "--cutoff",
            "200",
        ],
    );
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let names: Vec<String> = fs::read_dir(dir.path().join("estimates"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    for stem in ["integral-J-eps0", "integral-I-eps0", "operator-Q+-eps0"] {
        assert!(names.contains(&format!("{stem}.json")), "{names:?}");
        assert!(names.contains(&format!("{stem}.csv")), "{names:?}");
    }
    assert_eq!(stdout(&o).lines().filter(|l| !l.starts_with(' ')).count(), 3);
}
