//! End-to-end exercises of the command-line interface and its exit codes.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fks(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fks"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn fks")
}

fn write_config(dir: &Path, name: &str, doc: serde_json::Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn steady_doc() -> serde_json::Value {
    serde_json::json!({
        "schema_version": 1,
        "name": "steady",
        "initial_condition": {"kind": "constant", "a": 1.0},
        "params": {
            "semilinearity": {"kind": "affine", "nu": 0.5},
            "r": 0.0, "eps": 1e-3
        },
        "grid_n": 64,
        "horizon": 0.5,
        "cadence": 5,
        "checks": [{"name": "mass_conservation"}, {"name": "convergence_to_mean"}]
    })
}

#[test]
fn missing_config_exits_one() {
    let tmp = TempDir::new().unwrap();
    let out = fks(&["run", "--config", "no-such-file.json"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no-such-file.json"), "{err}");
}

#[test]
fn schema_error_exits_one_and_names_fields() {
    let tmp = TempDir::new().unwrap();
    let mut doc = steady_doc();
    doc["horizon"] = serde_json::json!(-2.0);
    let cfg = write_config(tmp.path(), "bad.json", doc);
    let out = fks(&["run", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("horizon"), "{err}");
}

#[test]
fn steady_run_exits_zero_and_writes_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "steady.json", steady_doc());
    let outdir = tmp.path().join("results");
    let out = fks(
        &["run", "--config", &cfg, "--out", outdir.to_str().unwrap()],
        tmp.path(),
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(outdir.join("diagnostics.csv").exists());
    assert!(outdir.join("verdicts.json").exists());
    assert!(outdir.join("meta.json").exists());
    assert!(stdout.contains("PASS"), "{stdout}");
}

#[test]
fn fks_out_env_sets_default_root() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "steady.json", steady_doc());
    let root = tmp.path().join("envroot");
    let out = Command::new(env!("CARGO_BIN_EXE_fks"))
        .args(["run", "--config", &cfg])
        .env("FKS_OUT", &root)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(root.join("steady").join("diagnostics.csv").exists());
}

#[test]
fn overrides_are_applied_and_echoed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "steady.json", steady_doc());
    let outdir = tmp.path().join("results");
    let out = fks(
        &[
            "run",
            "--config",
            &cfg,
            "--out",
            outdir.to_str().unwrap(),
            "--set",
            "params.r=1.0",
            "--set",
            "horizon=0.25",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outdir.join("meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["spec"]["params"]["r"], serde_json::json!(1.0));
    let overrides = meta["overrides"].as_array().unwrap();
    assert!(overrides.iter().any(|o| o == "params.r=1.0"));

    // Unknown override path is a usage error.
    let out = fks(
        &["run", "--config", &cfg, "--set", "params.bogus=1"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_check_exits_two() {
    let tmp = TempDir::new().unwrap();
    let mut doc = steady_doc();
    // A cosine run to T = 0.5 is nowhere near the homogeneous state, so the
    // default convergence tolerance fails.
    doc["initial_condition"] = serde_json::json!({"kind": "cosine", "a": 1.0, "b": 0.5});
    let cfg = write_config(tmp.path(), "fail.json", doc);
    let out = fks(
        &[
            "run",
            "--config",
            &cfg,
            "--out",
            tmp.path().join("f").to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn blowup_classification_exits_three() {
    let tmp = TempDir::new().unwrap();
    let mut doc = steady_doc();
    doc["initial_condition"] = serde_json::json!({"kind": "cosine", "a": 1.0, "b": 0.5});
    doc["ctrl"] = serde_json::json!({"blowup_threshold": 1.2});
    let cfg = write_config(tmp.path(), "blow.json", doc);
    let out = fks(
        &[
            "run",
            "--config",
            &cfg,
            "--out",
            tmp.path().join("b").to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oracle_battery_exits_zero() {
    let tmp = TempDir::new().unwrap();
    let out = fks(&["oracle"], tmp.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("kernel_symmetrization"), "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
}

#[test]
fn verify_theorem3_small_run_exits_zero() {
    let tmp = TempDir::new().unwrap();
    let doc = serde_json::json!({
        "schema_version": 1,
        "name": "decay",
        "initial_condition": {"kind": "cosine", "a": 1.0, "b": 0.5},
        "params": {
            "semilinearity": {"kind": "linear"},
            "r": 0.0, "eps": 1e-3, "coupling": false
        },
        "grid_n": 64,
        "horizon": 3.0,
        "cadence": 5,
        "checks": [{"name": "convergence_to_mean", "tolerance": 0.05}]
    });
    let cfg = write_config(tmp.path(), "theorem3.json", doc);
    let out = fks(
        &[
            "verify",
            "--theorem",
            "3",
            "--config",
            &cfg,
            "--out",
            tmp.path().join("t3").to_str().unwrap(),
        ],
        tmp.path(),
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("entropy_decay"), "{stdout}");
}

#[test]
fn run_then_resume_matches_single_run() {
    let tmp = TempDir::new().unwrap();
    let mut doc = steady_doc();
    doc["initial_condition"] = serde_json::json!({"kind": "cosine", "a": 1.0, "b": 0.5});
    doc["horizon"] = serde_json::json!(1.0);
    doc["name"] = serde_json::json!("resume-me");
    doc["checks"] = serde_json::json!([]);
    let cfg = write_config(tmp.path(), "resume.json", doc);
    let full_dir = tmp.path().join("full");
    let out = fks(
        &["run", "--config", &cfg, "--out", full_dir.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));

    // Truncate the snapshot list to a mid-run entry, as an interrupted run
    // would have left it.
    let meta_path = full_dir.join("meta.json");
    let mut meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&meta_path).unwrap()).unwrap();
    let snaps = meta["snapshots"].as_array().unwrap().clone();
    let kept: Vec<_> = snaps
        .iter()
        .filter(|e| e["t"].as_f64().unwrap() < 0.7)
        .cloned()
        .collect();
    assert!(!kept.is_empty());
    let interrupted = tmp.path().join("interrupted");
    std::fs::create_dir_all(&interrupted).unwrap();
    for f in std::fs::read_dir(&full_dir).unwrap() {
        let f = f.unwrap();
        std::fs::copy(f.path(), interrupted.join(f.file_name())).unwrap();
    }
    meta["snapshots"] = serde_json::json!(kept);
    std::fs::write(
        interrupted.join("meta.json"),
        serde_json::to_string_pretty(&meta).unwrap(),
    )
    .unwrap();

    let resumed = tmp.path().join("resumed");
    let out = fks(
        &[
            "resume",
            "--from",
            interrupted.to_str().unwrap(),
            "--out",
            resumed.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let last_snapshot = |dir: &Path| -> (f64, String) {
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json")).unwrap())
                .unwrap();
        let last = meta["snapshots"].as_array().unwrap().last().unwrap();
        (
            last["t"].as_f64().unwrap(),
            std::fs::read_to_string(dir.join(last["file"].as_str().unwrap())).unwrap(),
        )
    };
    let (t_full, snap_full) = last_snapshot(&full_dir);
    let (t_res, snap_res) = last_snapshot(&resumed);
    assert!((t_full - t_res).abs() <= 1e-12);
    // The continued trajectory reproduces the uninterrupted one to 1e-12 at
    // the matching time (the final clamped step rounds differently by ulps).
    let parse = |s: &str| -> Vec<f64> {
        s.lines()
            .skip(1)
            .map(|l| l.split_once(',').unwrap().1.parse::<f64>().unwrap())
            .collect()
    };
    let dev = parse(&snap_full)
        .iter()
        .zip(parse(&snap_res).iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(dev <= 1e-12, "resumed deviation {dev}");
}
