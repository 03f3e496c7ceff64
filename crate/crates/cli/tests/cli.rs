//! End-to-end runs of the `fracrom` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracrom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracrom"))
        .args(args)
        .env("FRAC_ROM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn snapshots(dir: &Path, problem: &str) -> String {
    let out = dir.to_str().unwrap();
    let o = fracrom(&[
        "snapshots",
        "--problem",
        problem,
        "--samples",
        "0.2,0.4,0.6,0.8",
        "--n",
        "31",
        "--m",
        "32",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("manifest.toml").to_str().unwrap().to_string()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .map(str::trim)
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn missing_samples_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracrom(&["snapshots", "--problem", "test1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_table_is_a_usage_error() {
    assert_eq!(code(&fracrom(&["reproduce-table", "9"])), 2);
    assert_eq!(code(&fracrom(&["reproduce-table", "zero"])), 2);
}

#[test]
fn invalid_order_and_problem_are_usage_errors() {
    assert_eq!(code(&fracrom(&["fom-solve", "--problem", "test1", "--beta", "1.5"])), 2);
    assert_eq!(code(&fracrom(&["fom-solve", "--problem", "test9", "--beta", "0.5"])), 2);
    assert_eq!(
        code(&fracrom(&[
            "fom-solve",
            "--problem",
            "test1",
            "--beta",
            "0.5",
            "--n",
            "1"
        ])),
        2
    );
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_fracrom"))
        .args(["fom-solve", "--problem", "test1", "--beta", "0.5"])
        .env("FRAC_ROM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn snapshots_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    snapshots(a.path(), "test2");
    snapshots(b.path(), "test2");
    for file in ["manifest.toml", "snapshots.frmat", "nonlinear_snapshots.frmat"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn rank_beyond_the_snapshots_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = snapshots(dir.path(), "test1");
    assert_eq!(code(&fracrom(&["build-rom", &manifest, "--r", "400"])), 2);
    // DEIM needs nonlinear snapshots
    assert_eq!(code(&fracrom(&["build-rom", &manifest, "--r", "2", "--s", "4"])), 2);
}

#[test]
fn offline_online_identification_flow() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = snapshots(dir.path(), "ex2");
    let o = fracrom(&["build-rom", &manifest, "--r", "4", "--s", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&manifest).unwrap();
    for name in ["basis", "deim_basis", "deim_indices", "singular_values"] {
        assert!(text.contains(&format!("[files.{name}]")), "{name} missing from\n{text}");
    }

    let lifted = dir.path().join("rom.frmat");
    let o = fracrom(&[
        "rom-solve",
        &manifest,
        "--beta",
        "0.6",
        "--out",
        lifted.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fracrom::read_matrix(&lifted).unwrap().shape(), (31, 33));

    let trace = dir.path().join("trace.csv");
    let o = fracrom(&[
        "identify",
        &manifest,
        "--beta-star",
        "0.75",
        "--beta0",
        "0.5",
        "--forward",
        "rom",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let err: f64 = field(&out, "|beta*-beta_inv|").parse().unwrap();
    assert!(err <= 1e-6, "{out}");
    let iterations: usize = field(&out, "iterations").parse().unwrap();
    let rows = fracrom::read_trace(&trace).unwrap();
    assert_eq!(rows.len(), iterations + 1);
}

#[test]
fn noisy_identification_depends_only_on_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = snapshots(dir.path(), "ex1");
    assert_eq!(code(&fracrom(&["build-rom", &manifest, "--r", "4"])), 0);
    let run = |seed: &str, name: &str| {
        let trace = dir.path().join(name);
        let o = fracrom(&[
            "--seed",
            seed,
            "identify",
            &manifest,
            "--beta-star",
            "0.75",
            "--noise",
            "1",
            "--trace",
            trace.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(trace).unwrap()
    };
    assert_eq!(run("3", "a.csv"), run("3", "b.csv"));
    assert_ne!(run("3", "a.csv"), run("4", "c.csv"));
}

#[test]
fn iteration_cap_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = snapshots(dir.path(), "ex1");
    assert_eq!(code(&fracrom(&["build-rom", &manifest, "--r", "4"])), 0);
    let o = fracrom(&[
        "identify",
        &manifest,
        "--beta-star",
        "0.75",
        "--beta0",
        "0.1",
        "--max-iter",
        "1",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn custom_problem_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("problem.toml");
    fs::write(
        &config,
        r#"
dim = 1
n = 31
lo = 0.0
hi = 1.0
final_time = 1.0
steps = 32
beta = 0.6
diffusion = "1 + x"
source = "sin(pi * x) * (1 + t)"
"#,
    )
    .unwrap();
    let o = fracrom(&["fom-solve", "--config", config.to_str().unwrap(), "--beta", "0.6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "dim = 1\nn = 31\ndiffusion = \"1 + \"\n").unwrap();
    assert_eq!(
        code(&fracrom(&[
            "fom-solve",
            "--config",
            bad.to_str().unwrap(),
            "--beta",
            "0.6"
        ])),
        2
    );
}
