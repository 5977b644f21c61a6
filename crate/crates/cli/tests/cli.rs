use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resetgeo")).args(args).output().expect("binary runs")
}

fn run_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resetgeo"))
        .args(args)
        .env("RESETGEO_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn record(out: &Output) -> serde_json::Value {
    json(out)["records"][0].clone()
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let j = rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[j].parse().unwrap()).collect()
}

#[test]
fn analyze_identity_has_unit_margin() {
    let out = run(&["analyze", "--map", &data("identity3.json"), "--undesired", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = record(&out);
    assert_eq!(r["margin"], 1.0);
    assert_eq!(r["ell"], 0.0);
    assert_eq!(r["violation"], false);
}

#[test]
fn analyze_two_level_matches_library() {
    let out = run(&["analyze", "--map", &data("two_level_ln2.json"), "--estimate"]);
    assert_eq!(out.status.code(), Some(0));
    let r = record(&out);
    let t = resetgeo::maps::two_level_reset(2f64.ln());
    let b = resetgeo::complexity_bracket(&t);
    assert!((r["ell"].as_f64().unwrap() - b.ell).abs() < 1e-15);
    assert!((r["upper"].as_f64().unwrap() - b.upper).abs() < 1e-15);
    assert!((r["epsilon"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    let c = r["c_hat"].as_f64().unwrap();
    assert!((c - resetgeo::two_level_complexity(2f64.ln())).abs() < 1e-6);
}

#[test]
fn malformed_input_exits_one() {
    let out = run(&["analyze", "--map", &data("malformed.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
    let out = run(&["analyze", "--map", &data("does_not_exist.json")]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["analyze"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn path_of_identity_is_a_single_point() {
    let out = run(&["path", "--map", &data("identity3.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_rows(&out).len(), 2);
    let summary: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["c_hat"], 0.0);
}

#[test]
fn path_of_two_level_map_is_bracketed() {
    let out = run(&["path", "--map", &data("two_level_1.json"), "--k", "64", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let c = v["c_hat"].as_f64().unwrap();
    assert!(v["ell"].as_f64().unwrap() <= c && c <= v["upper"].as_f64().unwrap());
    assert_eq!(v["path"].as_array().unwrap().len(), 65);
}

#[test]
fn path_csv_is_deterministic() {
    let dir = std::env::temp_dir().join(format!("resetgeo-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let map = dir.join("random3.json");
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let t = resetgeo::random::random_stochastic_map(&mut rng, 3);
    std::fs::write(&map, resetgeo::io::map_to_json(&t)).unwrap();
    let a = run(&["path", "--map", map.to_str().unwrap(), "--k", "16"]);
    let b = run(&["path", "--map", map.to_str().unwrap(), "--k", "16"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn two_level_sweep_gap_approaches_constant() {
    let out = run(&["sweep", "--values", "0.25,0.5,1,2,4"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    let gap = column(&rows, "c_minus_w_tau");
    let target = 2.0 * 2f64.ln() - 2f64.sqrt() * (1.0 + 2f64.sqrt()).ln();
    for w in gap.windows(2) {
        assert!(target - w[1] < target - w[0]);
    }
    assert!((gap[4] - target).abs() < 1e-3);
}

#[test]
fn swap_sweep_is_symmetric() {
    let out = run(&["sweep", "--family", "swap", "--values", "0.05,0.25,0.5,0.75,0.95"]);
    assert_eq!(out.status.code(), Some(0));
    let c = column(&csv_rows(&out), "c_exact");
    assert!((c[0] - c[4]).abs() < 1e-12 && (c[1] - c[3]).abs() < 1e-12);
    assert_eq!(c[2], 0.0);
    assert!(c[2] < c[1] && c[1] < c[0]);
}

#[test]
fn empty_grid_is_rejected() {
    let out = run(&["sweep", "--family", "two-level"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty grid"));
    let out = run(&["sweep", "--family", "random", "--count", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweeps_are_byte_identical_across_workers() {
    let args = ["sweep", "--family", "random", "--dims", "2,3,4", "--count", "6", "--seed", "11", "--estimate", "--k", "16"];
    let a = run_env(&args, "1");
    let b = run_env(&args, "4");
    let c = run_env(&args, "4");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    let q = ["quantum-sweep", "--family", "random-channel", "--dims", "2,3", "--count", "5", "--seed", "2"];
    assert_eq!(run_env(&q, "1").stdout, run_env(&q, "3").stdout);
}

#[test]
fn protocol_check_examples() {
    let out = run(&["protocol-check", "--protocols", &data("decay_once.json"), "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = record(&out);
    let n_min = r["n_min"].as_f64().unwrap();
    let n_bracket = r["extra"]["n_min_bracket"].as_f64().unwrap();
    assert!(n_min <= 1.0 && n_bracket <= 1.0);
    assert!((n_bracket - 0.465).abs() < 1e-3);
    let out = run(&["protocol-check", "--protocols", &data("decay_thrice.json"), "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(record(&out)["violation"], false);
    let out = run(&["protocol-check", "--protocols", &data("fast_decay.json"), "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds gamma"));
}

#[test]
fn decompose_search_reports_obstruction() {
    let out = run(&["decompose-search", "--map", &data("derangement.json"), "--depth", "2", "--grid", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "inconclusive");
    assert!(v["search"]["residual"].as_f64().unwrap() > 0.0);
    let out = run(&["decompose-search", "--map", &data("derangement.json"), "--depth", "5", "--grid", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn quantum_analyze_examples() {
    let out = run(&["quantum-analyze", "--channel", &data("amplitude_damping.json"), "--gamma", "1", "--solve"]);
    assert_eq!(out.status.code(), Some(0));
    let r = record(&out);
    assert!((r["ell"].as_f64().unwrap() - 1.113545032).abs() < 1e-8);
    assert!((r["extra"]["lindblad_n_min"].as_f64().unwrap() - 0.4650).abs() < 1e-3);
    assert!(r["extra"]["scaling_residual"].as_f64().unwrap() < 1e-6);
    let out = run(&[
        "quantum-analyze",
        "--channel",
        &data("swap_quarter.json"),
        "--projector",
        &data("projector_excited.json"),
    ]);
    let r = record(&out);
    assert!((r["epsilon"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(r["margin"].as_f64().unwrap() >= 1.0);
    let out = run(&["quantum-analyze", "--channel", &data("not_trace_preserving.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn quantum_sweep_families() {
    let out = run(&["quantum-sweep", "--family", "diagonal", "--dims", "2,3", "--count", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let gaps = column(&csv_rows(&out), "ell_gap");
    assert!(gaps.iter().all(|g| *g <= 1e-9));
    let out = run(&["quantum-sweep", "--family", "two-level", "--values", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("resetgeo-out-{}.csv", std::process::id()));
    let out = run(&["sweep", "--values", "1,2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    std::fs::remove_file(&path).ok();
}
