use std::path::Path;
use std::process::{Command, Output};

fn elmflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elmflow")).args(args).output().unwrap()
}

fn small_problem(dir: &Path) -> String {
    let text = r#"
[problem]
y0 = [1.0, -1.0]
t_span = [0.0, 2.0]

[problem.system]
system = "free_pendulum"
alpha = 0.1
beta = 9.8

[domain]
y0_box = [[-2.0, 2.0], [-4.0, 4.0]]
h_max = 0.25

[subdomains]
uniform = [2, 1]
r = 0.1

[network]
kind = "ExpS1"
M = 60
Rm = 0.6

[training]
Q = 150
seed = 3

[march]
dt = 0.2
"#;
    let p = dir.join("pendulum.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn train_inspect_march() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_problem(dir.path());
    let model = dir.path().join("p.elm");
    let m = model.to_str().unwrap();
    let out = elmflow(&["train", "--config", &cfg, "--out", m, "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = elmflow(&["inspect", m]);
    assert!(out.status.success());
    let manifest: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(manifest["kind"], "ExpS1");
    assert_eq!(manifest["models"].as_array().unwrap().len(), 2);

    let out = elmflow(&["march", m, "--y0=1,-1", "--t0", "0", "--tf", "2", "--dt", "0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[0].split(',').count(), 3);

    let steps = dir.path().join("steps.csv");
    let out = elmflow(&[
        "march", m, "--y0=1,-1", "--t0", "0", "--tf", "1", "--quasi-adaptive", "--steps", steps.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(&steps).unwrap();
    assert!(log.starts_with("t,subdomain,h\n"));

    // dt above h_max is a configuration error
    let out = elmflow(&["march", m, "--y0=1,-1", "--t0", "0", "--tf", "1", "--dt", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    // leaving the training box is a numeric failure
    let out = elmflow(&["march", m, "--y0=1,3.9", "--t0", "0", "--tf", "2", "--dt", "0.25"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn training_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_problem(dir.path());
    let a = dir.path().join("a.elm");
    let b = dir.path().join("b.elm");
    for p in [&a, &b] {
        assert!(elmflow(&["train", "--config", &cfg, "--out", p.to_str().unwrap(), "--seed", "9"]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[problem]\ny0 = [1.0]\n").unwrap();
    let out = elmflow(&["train", "--config", bad.to_str().unwrap(), "--out", "x.elm"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(elmflow(&["train", "--problem", "nope", "--out", "x.elm"]).status.code(), Some(2));
    assert_eq!(elmflow(&["verify", "lorenz63"]).status.code(), Some(2));
    let garbage = dir.path().join("g.elm");
    std::fs::write(&garbage, b"not a model").unwrap();
    assert_eq!(elmflow(&["inspect", garbage.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let exp = dir.path().join("exp.toml");
    std::fs::write(
        &exp,
        "problem = \"linear\"\nsweep = \"h_max\"\nvalues = [0.01, 0.02]\nmethods = [\"RK4\"]\noutput = \"res.csv\"\nt_final = 0.5\n",
    )
    .unwrap();
    let out = elmflow(&["bench", exp.to_str().unwrap(), "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,sweep_value,e_max,e_rms,residual_max,error");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("RK4,1.0000000000000000e-2,"));
    assert!(dir.path().join("res.json").exists());
}

#[test]
fn verify_reports_pass_lines() {
    let out = elmflow(&["verify", "forced_pendulum", "--samples", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.ends_with("PASS")));
}
