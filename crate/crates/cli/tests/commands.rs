//! End-to-end runs of the `twjscc` binary on small model files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const NOISE: f64 = 0.05;

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Y1 = X1 xor X2 xor Z, Y2 = X1 AND X2, written out entry by entry.
fn example1_model() -> Value {
    let mut ch = vec![vec![vec![vec![0.0; 2]; 2]; 2]; 2];
    for x1 in 0..2 {
        for x2 in 0..2 {
            let y2 = x1 & x2;
            ch[x1][x2][x1 ^ x2][y2] += 1.0 - NOISE;
            ch[x1][x2][x1 ^ x2 ^ 1][y2] += NOISE;
        }
    }
    let t = 1.0 / 3.0;
    json!({
        "source": [[t, t], [0.0, t]],
        "channel": ch,
        "distortion1": [[0, 1], [1, 0]],
        "distortion2": [[0, 1], [1, 0]],
    })
}

/// Y1 = X2, Y2 = X1.
fn crossover_model() -> Value {
    let mut ch = vec![vec![vec![vec![0.0; 2]; 2]; 2]; 2];
    for x1 in 0..2 {
        for x2 in 0..2 {
            ch[x1][x2][x2][x1] = 1.0;
        }
    }
    json!({
        "source": [[0.25, 0.25], [0.25, 0.25]],
        "channel": ch,
        "distortion1": [[0, 1], [1, 0]],
        "distortion2": [[0, 1], [1, 0]],
    })
}

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Self(tempfile::tempdir().unwrap())
    }

    fn write(&self, name: &str, v: &Value) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
        p
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twjscc"))
        .args(args)
        .env_remove("TWJSCC_THREADS")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

/// Parses a `D,R,slope` CSV into (D, R) pairs.
fn curve(out: &Output) -> Vec<(f64, f64)> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("D,R,slope"));
    lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect()
}

#[test]
fn rd_matches_binary_formula_for_uniform_source() {
    let dir = Dir::new();
    let m = dir.write("m.json", &crossover_model());
    let out = run(&["rd", "--model", p(&m), "--grid", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let pts = curve(&out);
    assert_eq!(pts.len(), 9);
    for (d, r) in pts {
        assert!((r - (1.0 - h2(d)).max(0.0)).abs() < 1e-6, "D={d} R={r}");
    }
}

#[test]
fn cond_rd_at_zero_distortion_is_conditional_entropy() {
    let dir = Dir::new();
    let m = dir.write("m.json", &example1_model());
    let out = run(&["cond-rd", "--model", p(&m), "--grid", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let pts = curve(&out);
    assert_eq!(pts[0].0, 0.0);
    assert!((pts[0].1 - 2.0 / 3.0).abs() < 1e-6);
    assert!((pts.last().unwrap().1).abs() < 1e-9);
}

#[test]
fn wz_rd_lies_above_cond_rd() {
    let dir = Dir::new();
    let m = dir.write("m.json", &example1_model());
    let cond = curve(&run(&["cond-rd", "--model", p(&m), "--user", "2", "--grid", "5"]));
    let out = run(&["wz-rd", "--model", p(&m), "--user", "2", "--grid", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let wz = curve(&out);
    for (c, w) in cond.iter().zip(&wz) {
        assert_eq!(c.0, w.0);
        assert!(w.1 >= c.1 - 1e-6, "{c:?} vs {w:?}");
    }
}

#[test]
fn usage_errors_exit_one_with_json_diagnostic_on_stderr() {
    let dir = Dir::new();
    let m = dir.write("m.json", &example1_model());
    for args in [
        vec!["rd", "--model", p(&m), "--grid", "0"],
        vec!["rd", "--model", "/nonexistent/model.json"],
        vec!["hybrid", "--model", p(&m), "--target", "0,0,1"],
        vec!["region", "--model", p(&m), "--rate", "0/3"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        let diag: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert!(diag["error"].is_string() && diag["message"].is_string());
    }
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_model_and_scheme_are_rejected() {
    let dir = Dir::new();
    let mut bad = example1_model();
    bad["source"] = json!([[0.5, 0.5], [0.5, 0.5]]);
    let m = dir.write("bad.json", &bad);
    assert_eq!(run(&["rd", "--model", p(&m)]).status.code(), Some(1));

    let m = dir.write("m.json", &example1_model());
    let s = dir.write("s.json", &json!({"U1": 2}));
    assert_eq!(run(&["hybrid", "--model", p(&m), "--scheme", p(&s)]).status.code(), Some(1));
    assert_eq!(run(&["hybrid", "--model", p(&m), "--scheme-name", "missing"]).status.code(), Some(1));
}

/// `(x, y)` rows of a capacity CSV with the given kind.
fn rows(text: &str, kind: &str) -> Vec<(f64, f64)> {
    text.lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0] == kind).then(|| (f[1].parse().unwrap(), f[2].parse().unwrap()))
        })
        .collect()
}

#[test]
fn capacity_inner_reaches_the_noisy_link_capacity() {
    let dir = Dir::new();
    let m = dir.write("m.json", &example1_model());
    let csv = dir.0.path().join("cap.csv");
    let out = run(&["--out", p(&csv), "capacity", "--model", p(&m), "--bound", "inner", "--grid", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(rows(&text, "outer_hull").is_empty());
    let best_r2 = rows(&text, "inner_hull").iter().map(|q| q.1).fold(0.0, f64::max);
    assert!((best_r2 - (1.0 - h2(NOISE))).abs() < 1e-3, "{best_r2}");
}

#[test]
fn capacity_of_crossover_is_the_unit_square() {
    let dir = Dir::new();
    let m = dir.write("m.json", &crossover_model());
    let out = run(&["capacity", "--model", p(&m), "--grid", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in ["inner_hull", "outer_hull"] {
        let hull = rows(&text, kind);
        assert!(hull.iter().any(|q| (q.0 - 1.0).abs() < 1e-9 && (q.1 - 1.0).abs() < 1e-9), "{kind}");
        assert!(hull.iter().all(|q| q.0 <= 1.0 + 1e-9 && q.1 <= 1.0 + 1e-9), "{kind}");
    }
}

/// The mixed scheme from the example report, evaluated through the CLI.
#[test]
fn example1_mixed_scheme_round_trips_through_hybrid_and_simulate() {
    let dir = Dir::new();
    let m = dir.write("m.json", &example1_model());
    let out = run(&["example1", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let s = dir.write("s.json", &report["mixed"]["scheme"]);

    let out = run(&["hybrid", "--model", p(&m), "--scheme", p(&s)]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert!((r["margin"].as_f64().unwrap() - (1.0 - h2(NOISE) - 2.0 / 3.0)).abs() < 1e-9);
    assert!((r["d1"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);

    let tally = dir.0.path().join("tally.csv");
    let out = run(&["simulate", "--model", p(&m), "--scheme", p(&s), "--samples", "20000", "--seed", "3", "--tally", p(&tally)]);
    assert_eq!(out.status.code(), Some(0));
    let sim = stdout_json(&out);
    assert_eq!(sim["consistent"], json!(true));
    let csv = std::fs::read_to_string(&tally).unwrap();
    assert!(csv.starts_with("s1,s2,y1,y2,count"));
    let total: u64 = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 20000);
}

#[test]
fn search_for_unreachable_target_exits_three_with_closest() {
    let dir = Dir::new();
    let m = dir.write("m.json", &example1_model());
    let out = run(&["hybrid", "--model", p(&m), "--target", "0,0", "--budget", "200"]);
    assert_eq!(out.status.code(), Some(3));
    let v = stdout_json(&out);
    assert_eq!(v["found"], json!(false));
    assert!(v["closest"].is_object());
}

#[test]
fn search_finds_uncoded_scheme_for_crossover() {
    let dir = Dir::new();
    let m = dir.write("m.json", &crossover_model());
    let out = run(&["hybrid", "--model", p(&m), "--target", "0,0", "--budget", "200"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["found"], json!(true));
}

#[test]
fn region_reports_hypothesis_flags() {
    let dir = Dir::new();
    let m = dir.write("m.json", &example1_model());
    let out = run(&["region", "--model", p(&m), "--rate", "2/2", "--grid", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["rate"], json!({"k": 1, "n": 1}));
    let flags = &v["hypothesis_flags"];
    for key in ["wz_equals_cond1", "wz_equals_cond2", "bounds_coincide"] {
        assert!(flags[key].is_boolean(), "{key}");
    }
    assert_eq!(v["exact"].is_null(), !(flags["wz_equals_cond1"] == json!(true) && flags["wz_equals_cond2"] == json!(true) && flags["bounds_coincide"] == json!(true)));
}

#[test]
fn example1_report_is_deterministic() {
    let a = run(&["--threads", "1", "example1", "--samples", "2000", "--seed", "9"]);
    let b = run(&["--threads", "8", "example1", "--samples", "2000", "--seed", "9"]);
    let c = run(&["example1", "--samples", "2000", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}
