use std::path::Path;
use std::process::{Command, Output};

fn sgve(args: &[&str]) -> Output {
    sgve_env(args, &[])
}

fn sgve_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sgve"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CONSTANT_GAME: &str = r#"{
    "states": 3,
    "actions": {"x": [[0, 1]], "y": [[0, 1], [-1, 1]]},
    "payoff": ["0.75", "0.75", "0.75"],
    "transition": [["x/2", "1 - x/2", "0"], ["0", "y1", "1 - y1"], ["1/3", "1/3", "1/3"]]
}"#;

fn values(text: &str) -> Vec<f64> {
    text.lines()
        .filter(|l| l.starts_with("state "))
        .map(|l| l.split(": ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap())
        .collect()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn solve_exshap_discounted() {
    let o = sgve(&["solve", "bench:exshap", "--lambda", "0.5", "--resolution", "201"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = values(&stdout(&o));
    assert_eq!(v.len(), 2);
    assert_eq!(v[0], 0.0);
    assert!((v[1] - 0.284_025_416_687_741_4).abs() < 1e-4, "{v:?}");
    assert!(stdout(&o).contains("residual: "));
}

#[test]
fn solve_constant_game_stages() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", CONSTANT_GAME);
    let o = sgve(&["solve", &path, "--n", "100", "--resolution", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(values(&stdout(&o)), vec![0.75; 3]);
}

#[test]
fn solve_mckinsey_one_stage() {
    let o = sgve(&["solve", "bench:mckinsey", "--n", "1", "--resolution", "101"]);
    assert!(o.status.success());
    let v = values(&stdout(&o));
    assert!((v[0] - 0.721_347_520_444_481_7).abs() < 5e-3);
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"states\": 1,");
    let rows = write(
        dir.path(),
        "rows.json",
        r#"{"states": 1, "actions": {"x": [[0, 1]], "y": [[0, 1]]}, "payoff": ["1"], "transition": [["0.5"]]}"#,
    );
    for args in [
        vec!["solve", bad.as_str(), "--n", "3"],
        vec!["solve", rows.as_str(), "--n", "3"],
        vec!["solve", "missing.json", "--n", "3"],
        vec!["solve", "bench:unknown", "--n", "3"],
        vec!["solve", "bench:exshap"],
        vec!["solve", "bench:exshap", "--n", "2", "--lambda", "0.5"],
        vec!["solve", "bench:exshap", "--lambda", "1.5"],
        vec!["bench", "--suite", "fast"],
        vec!["frobnicate"],
    ] {
        let o = sgve(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn curve_exshap_lambda_grid_is_monotone() {
    let o = sgve(&["curve", "bench:exshap", "--lambda-grid", "0.05,0.1,0.2,0.4,0.8,1", "--resolution", "41"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], vec!["lambda", "v1", "v2", "residual"]);
    let v2: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(v2.len(), 6);
    assert!(v2.windows(2).all(|w| w[0] < w[1]), "{v2:?}");
}

#[test]
fn curve_constant_and_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let game = write(dir.path(), "c.json", CONSTANT_GAME);
    let out = dir.path().join("n.csv");
    let o = sgve(&["curve", &game, "--n-grid", "1,2,4", "--resolution", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], vec!["n", "v1", "v2", "v3", "iterations"]);
    for r in &rows[1..] {
        assert_eq!(&r[1..4], &["0.75", "0.75", "0.75"]);
    }
    let o = sgve(&["curve", &game, "--lambda-grid", "0.9,0.3", "--resolution", "3"]);
    for r in &csv_rows(&stdout(&o))[1..] {
        for v in &r[1..4] {
            assert!((v.parse::<f64>().unwrap() - 0.75).abs() < 1e-8, "{r:?}");
        }
    }
}

#[test]
fn curve_unwritable_output() {
    let o = sgve(&["curve", "bench:exshap", "--n-grid", "1", "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_reproducible_across_thread_counts() {
    let args = ["curve", "bench:exshap", "--lambda-grid", "0.1,0.3,0.5,0.7", "--resolution", "31"];
    let a = sgve(&args);
    let b = sgve_env(&args, &[("SGVE_THREADS", "1")]);
    let c = sgve(&args);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let bad = sgve_env(&args, &[("SGVE_THREADS", "many")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn bench_mckinsey_suite() {
    let o = sgve(&["bench", "--suite", "mckinsey"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.matches("z = ").count(), 3);
    assert!(text.contains("[PASS] criterion  1"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn bench_properties_suite() {
    let o = sgve(&["bench", "--suite", "properties"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[PASS] criterion  5"));
}

#[test]
fn growth_of_maps() {
    let dir = tempfile::tempdir().unwrap();
    let diag = write(dir.path(), "d.json", r#"{"kind": "linear", "matrix": [[2, 0], [0, 3]]}"#);
    let o = sgve(&["growth", &diag]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next().unwrap(), "2 3");

    let a = write(dir.path(), "a.json", r#"{"kind": "linear", "matrix": [[1, 2], [3, 1]]}"#);
    let o = sgve(&["growth", &a, "--n", "2000", "--e", "0.5,7"]);
    let text = stdout(&o);
    let rate: Vec<f64> = text.lines().next().unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
    let rho = 1.0 + 6f64.sqrt();
    assert!(rate.iter().all(|r| (r - rho).abs() < 1e-9), "{rate:?}");
    assert!(text.contains("cauchy difference"));

    let bad = write(dir.path(), "b.json", r#"{"kind": "explicit", "coordinates": ["f1 - 2*f2", "f2"]}"#);
    assert_eq!(sgve(&["growth", &bad]).status.code(), Some(2));
    let zero = write(dir.path(), "z.json", r#"{"kind": "minLinear", "sets": [[[0, 0]], [[1, 1]]]}"#);
    assert_eq!(sgve(&["growth", &zero]).status.code(), Some(2));
}

#[test]
fn zsweep_csv() {
    let o = sgve(&["zsweep", "--z", "0.2,0.9", "--resolution", "51"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], vec!["z", "grid_value", "oracle_value", "error"]);
    assert_eq!(rows.len(), 3);
    for r in &rows[1..] {
        assert!(r[3].parse::<f64>().unwrap() < 5e-3);
    }
    assert_eq!(sgve(&["zsweep", "--z", "0"]).status.code(), Some(2));
}
