use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fhd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhd"))
        .args(args)
        .env_remove("FHD_OUTPUT_DIR")
        .output()
        .expect("launch fhd")
}

fn fhd_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    all.extend(["--output-dir", dir.to_str().unwrap()]);
    fhd(&all)
}

fn summary(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.trim().lines().count(), 1, "one summary line: {text}");
    serde_json::from_str(text.trim()).unwrap()
}

fn json_file(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn profile_example_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = fhd_in(dir.path(), &["profile", "--lambda", "0.5", "--v0", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["status"], "ok");
    assert_eq!(s["command"], "profile");

    let csv = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("xi,v"));
    let min = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!((min - 0.5).abs() < 1e-6, "{min}");

    let metrics = json_file(dir.path().join("metrics.json"));
    assert!((metrics["depth"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert_eq!(metrics["method"], "quadrature");
    assert_eq!(
        json_file(dir.path().join("metrics_shooting.json"))["method"],
        "shooting"
    );

    for file in s["files"].as_array().unwrap() {
        let meta = json_file(
            dir.path()
                .join(format!("{}.meta.json", file.as_str().unwrap())),
        );
        assert_eq!(meta["config"]["command"], "profile");
        assert_eq!(meta["config"]["params"]["lambda_speed"], 0.5);
    }
}

#[test]
fn scan_example_brackets_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out = fhd_in(
        dir.path(),
        &[
            "scan-existence",
            "--v0",
            "1.0",
            "--lambda-min",
            "0",
            "--lambda-max",
            "2",
            "--steps",
            "21",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("existence.csv")).unwrap();
    let rows: Vec<(f64, bool)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut c = l.split(',');
            let lam = c.next().unwrap().parse().unwrap();
            (lam, c.next().unwrap() == "1")
        })
        .collect();
    let at = |x: f64| rows.iter().find(|r| (r.0 - x).abs() < 1e-12).unwrap().1;
    assert!(at(0.9));
    assert!(!at(1.1));
    assert!(!at(1.0));
    assert!(!at(0.0));
}

#[test]
fn short_evolution_tracks_the_speed() {
    let dir = tempfile::tempdir().unwrap();
    let out = fhd_in(
        dir.path(),
        &[
            "evolve",
            "--n",
            "256",
            "--t-final",
            "0.5",
            "--per-frame",
            "--output-stride",
            "40",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = json_file(dir.path().join("summary.json"));
    let speed = s["speed_measured"].as_f64().unwrap();
    assert!((speed - 0.5).abs() < 0.02 * 0.5, "{speed}");
    assert!(s["conservation_drift"].as_f64().unwrap() < 1e-10);
    let frames = s["frames"].as_u64().unwrap() as usize;
    assert!(frames >= 2);
    for k in 0..frames {
        let name = format!("trajectory_{k:05}.csv");
        let text = fs::read_to_string(dir.path().join(&name)).unwrap();
        assert!(text.starts_with("t,x,v\n"), "{name}");
        assert_eq!(text.lines().count(), 257);
    }
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"params": {"lambda_speed": 0.3}, "grid": {"n": 128}, "evolve": {"t_final": 0.2}}"#,
    )
    .unwrap();
    for dir in [a.path(), b.path()] {
        let out = fhd_in(dir, &["evolve", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["trajectory.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"params": {"lambda_speed": 0.2, "v0": 1.0}, "emit_plots": true}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = fhd_in(
        &out_dir,
        &[
            "profile",
            "--config",
            cfg.to_str().unwrap(),
            "--lambda",
            "0.8",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let metrics = json_file(out_dir.join("metrics.json"));
    assert!((metrics["depth"].as_f64().unwrap() - 0.2).abs() < 1e-6);
    assert!(out_dir.join("plot_profile.py").is_file());
}

#[test]
fn output_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fhd"))
        .args(["reduce-check", "--n", "64"])
        .env("FHD_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("reduction_report.json").is_file());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| fhd_in(dir.path(), args).status.code();
    // Outside the existence domain.
    assert_eq!(code(&["profile", "--lambda", "1.5"]), Some(2));
    assert_eq!(code(&["evolve", "--lambda", "-0.1"]), Some(2));
    // Bad configuration values.
    assert_eq!(code(&["profile", "--v0", "0"]), Some(2));
    assert_eq!(code(&["evolve", "--cfl", "3"]), Some(2));
    assert_eq!(
        code(&["profile", "--config", "/nonexistent/run.json"]),
        Some(2)
    );
    // Usage errors.
    assert_eq!(fhd(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(fhd(&["profile", "--no-such-flag"]).status.code(), Some(64));
    assert_eq!(fhd(&[]).status.code(), Some(64));
    // Help and version succeed.
    assert_eq!(fhd(&["--help"]).status.code(), Some(0));
    assert_eq!(fhd(&["--version"]).status.code(), Some(0));
}

#[test]
fn failure_prints_machine_readable_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = fhd_in(dir.path(), &["evolve", "--lambda", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    let s = summary(&out);
    assert_eq!(s["status"], "error");
    assert_eq!(s["exit_code"], 2);
    assert!(s["message"].as_str().unwrap().contains("no soliton"));
}

#[test]
fn unwritable_output_dir_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = fhd_in(&blocker.join("sub"), &["scan-existence"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn potential_outside_domain_skips_the_phase_portrait() {
    let dir = tempfile::tempdir().unwrap();
    let out = fhd_in(dir.path(), &["potential", "--lambda", "1.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("potential.csv").is_file());
    assert!(!dir.path().join("phase.csv").exists());
    assert_eq!(summary(&out)["admissible"], false);
}
