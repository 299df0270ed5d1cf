use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_symsample");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn symsample(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = symsample(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = r#"
[model]
kind = "example1"
n = 4
beta = 0.7
noise_scale = 0.5
forcing_seed = 3

[symmetry]
kind = "double_flip"

[ais]
levels = 8
samples = 300

[tt]
levels = 8
steps = 3000
tt_probability = 0.1
"#;

#[test]
fn every_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    for sub in [
        "build-model",
        "diagnose-symmetry",
        "run-ais",
        "run-tt",
        "compare-paths",
    ] {
        let out = dir.path().join(sub);
        run_ok(&[sub, "--config", cfg, "--out", out.to_str().unwrap()]);
        assert!(out.join("summary.json").exists(), "{sub}");
        assert!(out.join("model.txt").exists(), "{sub}");
    }
    assert!(dir.path().join("run-ais/samples.csv").exists());
    assert!(dir.path().join("run-ais/weights_levels.csv").exists());
    assert!(dir.path().join("run-tt/trace.csv").exists());
    assert!(dir.path().join("diagnose-symmetry/pairing.txt").exists());
    assert!(dir.path().join("compare-paths/comparison.csv").exists());
}

#[test]
fn seed_and_workers_control_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let mut csv = Vec::new();
    for (seed, workers) in [("5", "1"), ("5", "4"), ("6", "1")] {
        let out = dir.path().join(format!("s{seed}w{workers}"));
        run_ok(&[
            "run-ais",
            "--config",
            cfg,
            "--seed",
            seed,
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        csv.push(fs::read(out.join("samples.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    assert_ne!(csv[0], csv[2]);
}

#[test]
fn oracle_check_on_shipped_tiny_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("tiny_2x3.toml");
    let stdout = run_ok(&[
        "oracle-check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(stdout.contains("oracle: pass"), "{stdout}");
}

#[test]
fn bad_value_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL.replace("levels = 8\nsamples", "levels = 0\nsamples"),
    );
    let out = symsample(&[
        "run-ais",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ais.levels"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("[tt]", "[tt]\nlevles = 3"));
    let out = symsample(&[
        "run-tt",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("levles"));
}

#[test]
fn missing_config_file_fails_cleanly() {
    let out = symsample(&["build-model", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
}
