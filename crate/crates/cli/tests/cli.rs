//! CLI behavior: exit codes, error channels, flag precedence, env defaults.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drillnav_core::io::{CaptureSession, DeviceMeta, SessionRecords};
use drillnav_core::pointcal::PivotSample;
use drillnav_core::se3::{Pose, Rot3};
use nalgebra::Vector3;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_drillnav")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("drillnav-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn simulate_then_calibrate_recovers_ground_truth() {
    let dir = workdir("roundtrip");
    let out = run_in(
        &dir,
        &[
            "simulate",
            "--seed",
            "3",
            "--noise-preset",
            "zero",
            "--out",
            ".",
        ],
    );
    assert!(out.status.success());

    let out = run_in(
        &dir,
        &[
            "calibrate-handeye",
            "--session",
            "handeye.session.jsonl",
            "--truth",
            "scene.json",
            "--out",
            "handeye.artifact.json",
        ],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // noiseless recovery prints errors at numerical-noise scale
    let recovery: Vec<f64> = text
        .lines()
        .filter(|l| l.contains("recovery error"))
        .map(|l| {
            l.split_whitespace()
                .find_map(|w| w.parse::<f64>().ok())
                .expect("line carries a number")
        })
        .collect();
    assert_eq!(recovery.len(), 2);
    assert!(
        recovery.iter().all(|&e| e <= 1e-8),
        "recovery errors {recovery:?}"
    );
}

#[test]
fn degenerate_pivot_session_exits_2_with_message() {
    let dir = workdir("degenerate");
    // one fixed orientation, many positions
    let rot = Rot3::from_rpy_degrees(10.0, 20.0, 30.0);
    let samples: Vec<PivotSample> = (0..10)
        .map(|i| PivotSample::new(rot, Vector3::new(i as f64, 2.0 * i as f64, 0.0)))
        .collect();
    let session = CaptureSession::new(
        SessionRecords::Pivot(samples),
        DeviceMeta {
            source: "test".into(),
            tool: None,
            scene_seed: None,
        },
    );
    session.save(&dir.join("locked.session.jsonl")).unwrap();

    let out = run_in(
        &dir,
        &["calibrate-pivot", "--session", "locked.session.jsonl"],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("degenerate"), "stderr: {stderr}");

    let out = run_in(
        &dir,
        &[
            "--json-errors",
            "calibrate-pivot",
            "--session",
            "locked.session.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(err["kind"], "validation");
    assert!(err["error"].as_str().unwrap().contains("degenerate"));
}

#[test]
fn missing_file_exits_2() {
    let dir = workdir("missing");
    let out = run_in(&dir, &["calibrate-handeye", "--session", "nope.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tip_offset_flag_overrides_pivot_artifact() {
    let dir = workdir("precedence");
    let pose_file = dir.join("digitizer.json");
    std::fs::write(
        &pose_file,
        serde_json::to_string(&Pose::identity()).unwrap(),
    )
    .unwrap();

    // flag wins: marked tip is exactly the flag offset from the identity pose
    let out = run_in(
        &dir,
        &[
            "mark",
            "--digitizer-pose",
            "digitizer.json",
            "--digitizer-offset",
            "1,2,-3",
            "--out",
            "marked.json",
        ],
    );
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("offset source: flag"));
    let marked: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("marked.json")).unwrap()).unwrap();
    assert_eq!(marked["polaris_t_tip_desired"]["t_mm"][2], -3.0);

    // neither flag nor artifact: validation error
    let out = run_in(&dir, &["mark", "--digitizer-pose", "digitizer.json"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("digitizer tip offset required"),
        "stderr: {stderr}"
    );
}

#[test]
fn out_dir_env_var_is_default_output_location() {
    let dir = workdir("envvar");
    let out_dir = dir.join("from_env");
    let out = Command::new(bin())
        .args([
            "plan",
            "--pilot-depth",
            "10",
            "--arc-angle",
            "45",
            "--out",
            "plan",
        ])
        .current_dir(&dir)
        .env("DRILLNAV_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    // --out beats the env var for the explicit path...
    assert!(out.status.success());
    assert!(dir.join("plan.csv").exists());

    // ...while omitting --out falls back to the env var directory
    let out = Command::new(bin())
        .args(["plan", "--pilot-depth", "10", "--arc-angle", "45"])
        .current_dir(&dir)
        .env("DRILLNAV_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out_dir.join("trajectory.csv").exists());
    assert!(out_dir.join("trajectory.json").exists());
}

#[test]
fn simulate_accepts_scene_config_in_toml_and_json() {
    let dir = workdir("sceneconfig");
    // emit a synthetic scene, then feed it back in both formats
    let out = run_in(
        &dir,
        &[
            "simulate",
            "--seed",
            "5",
            "--noise-preset",
            "zero",
            "--out",
            "syn",
        ],
    );
    assert!(out.status.success());
    let scene_json = std::fs::read_to_string(dir.join("syn/scene.json")).unwrap();
    let value: toml::Value =
        serde_json::from_str::<toml::Value>(&scene_json).expect("scene converts to toml value");
    std::fs::write(dir.join("scene.toml"), toml::to_string(&value).unwrap()).unwrap();
    std::fs::write(dir.join("scene.json"), &scene_json).unwrap();

    for (flag, out_dir) in [("scene.toml", "from_toml"), ("scene.json", "from_json")] {
        let out = run_in(
            &dir,
            &[
                "simulate",
                "--scene",
                flag,
                "--noise-preset",
                "zero",
                "--out",
                out_dir,
            ],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    // same ground truth + seed: emitted sessions must match the original
    for name in [
        "handeye.session.jsonl",
        "pivot.session.jsonl",
        "tip_rigid.session.jsonl",
    ] {
        let original = std::fs::read(dir.join("syn").join(name)).unwrap();
        assert_eq!(
            original,
            std::fs::read(dir.join("from_toml").join(name)).unwrap()
        );
        assert_eq!(
            original,
            std::fs::read(dir.join("from_json").join(name)).unwrap()
        );
    }
}

#[test]
fn invalid_plan_parameters_exit_2() {
    let dir = workdir("badplan");
    let out = run_in(&dir, &["plan", "--pilot-depth", "-5", "--out", "t"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(&dir, &["plan", "--arc-angle", "170", "--out", "t"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_scene_file_exits_2() {
    let dir = workdir("badscene");
    let out = run_in(
        &dir,
        &[
            "simulate",
            "--seed",
            "4",
            "--noise-preset",
            "zero",
            "--out",
            "syn",
        ],
    );
    assert!(out.status.success());
    let mut scene: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("syn/scene.json")).unwrap())
            .unwrap();
    scene["pedicle"]["tunnel_diameter_mm"] = serde_json::json!(20.0); // wider than the canal
    std::fs::write(dir.join("bad.json"), serde_json::to_string(&scene).unwrap()).unwrap();
    let out = run_in(&dir, &["simulate", "--scene", "bad.json", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("invalid scene"));
}

#[test]
fn report_over_three_runs_emits_table_layout() {
    let dir = workdir("report");
    for seed in ["21", "22", "23"] {
        let out = run_in(
            &dir,
            &[
                "simulate",
                "--seed",
                seed,
                "--noise-preset",
                "table1",
                "--full",
                "--out",
                seed,
            ],
        );
        assert!(out.status.success());
    }
    let out = run_in(
        &dir,
        &[
            "report",
            "--inputs",
            "21/procedure_report.json",
            "22/procedure_report.json",
            "23/procedure_report.json",
            "--out",
            "errors",
        ],
    );
    assert!(out.status.success());
    let md = std::fs::read_to_string(dir.join("errors.md")).unwrap();
    assert!(md.starts_with("| Error | Rigid Drill Tip | Flexible Drill Tip |"));
    for row in ["| Position |", "| Roll |", "| Pitch |", "| Yaw |"] {
        assert!(md.contains(row), "missing {row} in:\n{md}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("errors.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 8);
    assert_eq!(json["metadata"]["noise_preset"], "table1");
    assert_eq!(json["metadata"]["seed_range"][0], 21);
    assert_eq!(json["metadata"]["seed_range"][1], 23);
}
