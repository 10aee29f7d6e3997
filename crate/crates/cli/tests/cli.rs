use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bergman-lab"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn shipped_configs_validate() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = bin().arg("validate").arg(&path).output().unwrap();
            assert_eq!(code(&out), 0, "{}: {}", path.display(), String::from_utf8_lossy(&out.stdout));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

#[test]
fn invalid_config_exits_one_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "bad.json",
        r#"{"experiment": "zeros-equidist", "model": {"kind": "projective-line"},
            "sequence": {"kind": "perturbed", "psi": "psi-bump-1", "a": -1.0},
            "p": [40, 20], "samples": 0}"#,
    );
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(code(&out), 1);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 3, "{text}");
    let run = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(code(&run), 1);
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "typo.json",
        r#"{"experiment": "degrees", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]}, "p": [1], "sampels": 3}"#,
    );
    assert_eq!(code(&bin().arg("validate").arg(&path).output().unwrap()), 1);
}

#[test]
fn run_writes_csv_and_summary_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "scan.json",
        r#"{"experiment": "bergman-scan", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]}, "p": [1, 2, 3], "grid_points": 4}"#,
    );
    let target = dir.path().join("scan.csv");
    let out = bin().arg("run").arg(&path).arg("--out").arg(&target).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&target).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "p,A_p,point,chart,z1_re,z1_im,z2_re,z2_im,P_p,P_p_over_A_n");
    assert_eq!(lines.count(), 12);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("scan.csv.summary.json")).unwrap()).unwrap();
    assert!(summary["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.lines().any(|l| l.starts_with("PASS equals_dimension")), "{stderr}");
    // Only the report and its sidecar remain; no temporary files.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 3);
}

#[test]
fn json_output_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "zeros.json",
        r#"{"experiment": "zeros-equidist", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]}, "p": [10], "samples": 5, "seed": 1}"#,
    );
    let stdout = |seed: &str| {
        let out = bin().args(["run", "--format", "json", "--seed", seed]).arg(&path).output().unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    let a = stdout("9");
    assert_eq!(a["config"]["seed"], 9);
    assert_eq!(a, stdout("9"));
    assert_ne!(a["rows"], stdout("10")["rows"]);
    assert_eq!(a["rows"].as_array().unwrap().len(), 5 * 5);
}

#[test]
fn tolerance_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // Two low degrees sit far from the near-diagonal regime, so the fitted
    // decay exponent misses its window.
    let path = write_config(
        dir.path(),
        "early.json",
        r#"{"experiment": "model-kernel", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]}, "p": [1, 2], "window": 6.0}"#,
    );
    let out = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).lines().any(|l| l.starts_with("FAIL ")));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "fs.json",
        r#"{"experiment": "fs-speed", "model": {"kind": "projective-line"},
            "sequence": {"kind": "perturbed", "psi": "psi-re-1", "a": 1.0}, "p": [10, 20, 30, 40]}"#,
    );
    let csv = |threads: &str| {
        let out = bin().env("BERGMAN_LAB_THREADS", threads).arg("run").arg(&path).output().unwrap();
        assert!(code(&out) != 1, "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    assert_eq!(csv("1"), csv("4"));
}

#[test]
fn catalog_lists_every_id() {
    let out = bin().arg("list-catalog").output().unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for id in ["psi-zero", "psi-bump-1", "psi-re-1", "phi-one", "phi-cap-north", "phi-re-moment", "phi-bump-eq", "phi-im-moment"] {
        assert!(text.contains(id), "{id} missing from\n{text}");
    }
}
