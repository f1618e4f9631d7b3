use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_isac-jam");
const DESK: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/desk.toml");

fn isac(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

/// Desk config cut down so every subcommand finishes in seconds.
fn quick_config(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(DESK)
        .unwrap()
        .replace("max_outer_iters = 150", "max_outer_iters = 4")
        .replace("n_trials = 200", "n_trials = 12")
        .replace("mui_trials = 8", "mui_trials = 3");
    let path = dir.join("quick.toml");
    fs::write(&path, text).unwrap();
    path
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn validate_config_prints_canonical_form() {
    let out = isac(&["validate-config", "--config", DESK]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[scenario]"));
    assert!(text.contains("jammer_delay = 10"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = isac(&["design"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = isac(&["frobnicate", "--config", DESK]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    assert!(isac(&["--help"]).status.success());
}

#[test]
fn invalid_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = fs::read_to_string(DESK)
        .unwrap()
        .replace("n_trials = 200", "n_trials = 0");
    fs::write(&bad, text).unwrap();
    let out = isac(&["validate-config", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, "[scenario]\nbogus = 1\n").unwrap();
    let out = isac(&["validate-config", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_design_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let out = isac(&[
        "detect",
        "--config",
        cfg.to_str().unwrap(),
        "--design",
        dir.path().join("nowhere").to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn design_then_detect_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let d = dir.path().join("d");
    let out = isac(&[
        "design",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        d.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["waveform.csv", "filters.csv", "trace.csv"] {
        assert!(d.join(f).is_file(), "{f} missing");
    }
    let trace = fs::read_to_string(d.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 1 + 4);

    let det = dir.path().join("det");
    let out = isac(&[
        "detect",
        "--config",
        cfg.to_str().unwrap(),
        "--design",
        d.to_str().unwrap(),
        "--out",
        det.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(det.join("detections.csv").is_file());
    assert!(det.join("detection_traces.csv").is_file());
}

#[test]
fn every_subcommand_is_deterministic_across_pool_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    for cmd in [
        "design",
        "detect",
        "sweep-pd",
        "eval-mui",
        "compare-sidelobes",
    ] {
        let mut runs = Vec::new();
        for (i, threads) in ["1", "4", "4"].iter().enumerate() {
            let out_dir = dir.path().join(format!("{cmd}-{i}"));
            let out = isac(&[
                cmd,
                "--config",
                cfg,
                "--seed",
                "7",
                "--threads",
                threads,
                "--out",
                out_dir.to_str().unwrap(),
            ]);
            assert!(
                out.status.success(),
                "{cmd}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            runs.push(csvs(&out_dir));
        }
        assert!(!runs[0].is_empty(), "{cmd} wrote nothing");
        assert_eq!(runs[0], runs[1], "{cmd}: 1 vs 4 workers");
        assert_eq!(runs[1], runs[2], "{cmd}: repeated run");
    }
}
