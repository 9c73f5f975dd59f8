use std::path::Path;
use std::process::{Command, Output};

fn qrcurves(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrcurves"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn comass_volx_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrcurves(
        dir.path(),
        &["comass", "--form", "volx", "--n", "3", "--k", "2", "--restarts", "8", "--out", "c.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    let v = doc["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() < 1e-6, "comass {v}");
    // manifest records the run
    let man: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("c.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(man["outputs"][0], "c.json");
    assert!(man["defaulted"].get("seed").is_some());
}

#[test]
fn verify_prop81_clean_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrcurves(
        dir.path(),
        &[
            "verify", "run", "prop81", "--n", "2", "--k", "2", "--trials", "200", "--seed", "3",
            "--eps", "0.004", "--out", "s.json",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(doc["trials_run"], 200);
    assert_eq!(doc["violations"].as_array().unwrap().len(), 0);
    let csv = std::fs::read_to_string(dir.path().join("s.json.violations.csv")).unwrap();
    assert_eq!(csv.trim(), "trial,trial_seed,margin,what");
}

#[test]
fn verify_exit_code_on_violations() {
    // An absurd epsilon is rejected up front: that is a validation
    // error (exit 2), not a suite violation.
    let dir = tempfile::tempdir().unwrap();
    let out = qrcurves(
        dir.path(),
        &[
            "verify", "run", "prop81", "--n", "2", "--k", "2", "--trials", "10", "--seed", "1",
            "--eps", "0.9", "--out", "s.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn rosay_f_reports_measured_constant_when_unbuildable() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrcurves(
        dir.path(),
        &["curve", "build", "rosay-f", "--K", "1.5", "--n0-cap", "10", "--out", "r.json"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("C-hat"), "stderr: {err}");
}

#[test]
fn single_worker_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args_base = [
        "verify", "run", "lemma32", "--n", "2", "--k", "2", "--trials", "400", "--seed", "7",
    ];
    let mut a = args_base.to_vec();
    a.extend(["--out", "a.json"]);
    let out = qrcurves(dir.path(), &a);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut b = args_base.to_vec();
    b.extend(["--out", "b.json", "--workers", "1"]);
    let out = qrcurves(dir.path(), &b);
    assert!(out.status.success(), "{}", stderr(&out));
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_supplies_params_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"form": "volx", "n": 3, "k": 2, "restarts": 8, "seed": 4}"#,
    )
    .unwrap();
    let out = qrcurves(
        dir.path(),
        &["comass", "--config", "cfg.json", "--k", "1", "--out", "c.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    // flag --k 1 overrides the config's k = 2; comass of vol^x with
    // one block in R^3 is 1
    assert_eq!(doc["k"], 1);
    assert!(stdout(&out).contains("k=1"));
}

#[test]
fn malformed_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    let out = qrcurves(
        dir.path(),
        &["comass", "--config", "bad.json", "--form", "volx", "--n", "2", "--out", "c.json"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("malformed config file"), "{}", stderr(&out));
}

#[test]
fn missing_required_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrcurves(dir.path(), &["comass", "--form", "volx", "--out", "c.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--n"), "{}", stderr(&out));
}

#[test]
fn field_summary_on_mobius_block() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrcurves(
        dir.path(),
        &[
            "field", "--curve", "mobius", "--lo", "-0.1,-0.1,-0.1", "--hi", "0.1,0.1,0.1",
            "--resolution", "6", "--out", "f.json", "--points-out", "f.csv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("f.json")).unwrap()).unwrap();
    // a Moebius component is conformal: K = 1 everywhere on the grid
    let maxk = doc["summary"]["max_distortion"].as_f64().unwrap();
    assert!((maxk - 1.0).abs() < 1e-4, "max K = {maxk}");
    let csv = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6 * 6 * 6 + 1);
}
