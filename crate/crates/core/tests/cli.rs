//! Drives every subcommand of the binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use metaplectic::io;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_metaplectic");
const SMALL: [&str; 4] = ["--points", "128", "--half-width", "8"];

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove(metaplectic::config::CONFIG_ENV)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn symplectic_and_indices_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Quarter rotation: W = (0, 1, 0).
    let w = write(d, "w.json", r#"{"n":1,"P":[0.0],"L":[1.0],"Q":[0.0]}"#);
    let s = path(d, "s.json");
    ok(&["symplectic", "--op", "free", "--input", &w, "--output", &s]);
    let sj: Value = serde_json::from_str(&std::fs::read_to_string(&s).unwrap()).unwrap();
    let e: Vec<f64> = serde_json::from_value(sj["entries"].clone()).unwrap();
    assert_eq!(e, [0.0, 1.0, -1.0, 0.0]);

    let m = json(&["symplectic", "--op", "cayley", "--input", &s]);
    assert!((m["entries"][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let mpath = write(d, "m.json", &m.to_string());
    let back = json(&["symplectic", "--op", "cayley-inverse", "--input", &mpath]);
    assert!((back["entries"][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let det = json(&["symplectic", "--op", "det-s-minus-i", "--input", &s]);
    assert!((det["det_s_minus_i"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let gen = json(&["symplectic", "--op", "generating", "--input", &s]);
    assert!((gen["L"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let idx = json(&["indices", "--input", &w, "--branch", "0"]);
    assert_eq!(idx["m"], 0);
    assert_eq!(idx["nu"], 3);
    assert_eq!(idx["parity_consistent"], true);
    // Odd branch for det L > 0 is a domain error.
    assert_eq!(run(&["indices", "--input", &w, "--branch", "1"]).status.code(), Some(3));
}

#[test]
fn apply_wigner_phase_moyal_and_s0_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let word = write(d, "word.json", r#"[{"n":1,"P":[0.0],"L":[1.0],"Q":[0.0],"m":0}]"#);
    let g_f = path(d, "g_f.csv");
    let g_q = path(d, "g_q.csv");
    let g_b = path(d, "g_b.csv");
    let mut a = SMALL.to_vec();
    a.extend(["apply", "--word", &word, "--hermite", "1", "--out", &g_f]);
    let r = json(&a);
    assert!((r["norm_out"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    let mut a = SMALL.to_vec();
    a.extend(["apply", "--word", &word, "--hermite", "1", "--method", "quadrature", "--out", &g_q]);
    ok(&a);
    let f1 = io::load_sampled(Path::new(&g_f)).unwrap();
    let f2 = io::load_sampled(Path::new(&g_q)).unwrap();
    assert!(f1.relative_distance(&f2).unwrap() < 1e-8);

    // Bochner needs an input file; use the factored output.
    ok(&["apply", "--word", &word, "--method", "bochner", "--form", "s2", "--in", &g_f, "--out", &g_b]);

    let wig = path(d, "w.csv");
    ok(&["wigner", "--f", &g_f, "--lattice", "square", "--out", &wig]);
    let wig_dual = path(d, "w_dual.csv");
    ok(&["wigner", "--f", &g_f, "--g", &g_f, "--out", &wig_dual]);
    let big = io::load_phase(Path::new(&wig)).unwrap();
    assert_eq!(big.grid().dp(), big.grid().dx());

    let s = write(d, "s.json", r#"{"n":1,"entries":[0.0,1.0,-1.0,0.0]}"#);
    let out = path(d, "sw.csv");
    let r = json(&["phase-apply", "--input", &wig, "--matrix", &s, "--nu", "3", "--form", "alfa1", "--out", &out]);
    let (n_in, n_out) = (r["norm_in"].as_f64().unwrap(), r["norm_out"].as_f64().unwrap());
    assert!((n_in - n_out).abs() < 1e-6 * n_in);

    let moyal = json(&["moyal", "--a", &wig_dual, "--b", &wig_dual]);
    assert!((moyal["re"].as_f64().unwrap() - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-6);

    let s0 = json(&["s0", "--psi", &g_f, "--window", "hermite:1"]);
    assert_eq!(s0["window_id"], "hermite:1");
    let s0 = json(&["s0", "--psi", &g_f, "--window", &g_f]);
    assert!(s0["window_id"].as_str().unwrap().starts_with("file:"));
    assert_eq!(run(&["s0", "--psi", &g_f, "--window", "hermite:x"]).status.code(), Some(2));
}

#[test]
fn asymptotic_demo_and_verify_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let csv = ok(&["asymptotic", "--alpha", "2.0943951023931953", "--hbar-list", "0.1,0.05", "--z", "0,0"]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "hbar,abs_leading,abs_quadrature,relative_error");
    assert_eq!(rows.len(), 3);

    let demo = path(d, "demo");
    let mut a = SMALL.to_vec();
    a.extend(["demo-rotation", "--alpha", "1.5707963267948966", "--out-dir", &demo]);
    let summary = json(&a);
    assert!((summary["cayley_diagonal"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((summary["det_s_minus_i"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(summary["covariance_error"].as_f64().unwrap() < 1e-4);
    for f in ["input.csv", "output.csv", "wigner_input.csv", "wigner_output.csv", "summary.json", "reproduce.sh"] {
        assert!(Path::new(&demo).join(f).exists(), "{f}");
    }
    assert_eq!(
        run(&["demo-rotation", "--alpha", "0", "--out-dir", &demo]).status.code(),
        Some(3)
    );

    let report = json(&["verify", "--suite", "core"]);
    assert_eq!(report["passed"], true);

    let cfg = write(d, "run.cfg", "# tightened\ntol.core.cayley_round_trip = 1e-300\n");
    let out = run(&["--config", &cfg, "verify", "--suite", "core"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("core.cayley_round_trip"));

    // Flag beats file; the environment variable supplies the file.
    let out = Command::new(BIN)
        .args(["--set", "tol.core.cayley_round_trip=1e-9", "verify", "--suite", "core"])
        .env(metaplectic::config::CONFIG_ENV, &cfg)
        .output()
        .unwrap();
    assert!(out.status.success());

    let bad = write(d, "bad.cfg", "N = 300\n");
    assert_eq!(run(&["--config", &bad, "verify", "--suite", "core"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "everything"]).status.code(), Some(2));
}
