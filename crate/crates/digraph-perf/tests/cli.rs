//! End-to-end tests of the command-line interface: exit codes, JSON/CSV
//! formats, and run-to-run determinism.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_digraph-perf"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not json ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn compute_star_first_order() {
    let out = run(&["compute", "--graph", "star:5", "--dynamics", "first"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let value = v["value"].as_f64().unwrap();
    assert!((value - 1.6).abs() < 1e-12, "value {value}");
    assert!(v["imag_residual"].as_f64().unwrap() <= 1e-9 * (1.0 + value));
    assert_eq!(v["path"], "first_order_diagonalizable");
}

#[test]
fn compute_missing_gains_is_parse_error() {
    let out = run(&[
        "compute", "--graph", "path:3", "--dynamics", "second", "--output", "velocity",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");
}

#[test]
fn compute_identity_output_matrix_violates_assumption() {
    let dir = tempfile::tempdir().unwrap();
    let c_path = dir.path().join("eye.json");
    std::fs::write(&c_path, "[[1,0,0],[0,1,0],[0,0,1]]").unwrap();
    let out = run(&[
        "compute",
        "--graph",
        "star:3",
        "--dynamics",
        "first",
        "--C",
        c_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "output_assumption_violated");
}

#[test]
fn compute_unstable_gains_exits_2() {
    let out = run(&[
        "compute", "--graph", "cycle:8,1,1", "--dynamics", "second", "--gains", "0,0.05,1,0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "unstable");
}

#[test]
fn compute_defective_graph_without_hint_exits_4() {
    // a path graph supplied as plain JSON loses the family hint, so the
    // numeric decomposition must refuse it
    let dir = tempfile::tempdir().unwrap();
    let g_path = dir.path().join("path.json");
    std::fs::write(
        &g_path,
        r#"{"n": 4, "edges": [[2, 1, 1.0], [3, 2, 1.0], [4, 3, 1.0]]}"#,
    )
    .unwrap();
    let out = run(&[
        "compute", "--graph", g_path.to_str().unwrap(), "--dynamics", "first",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "defective_or_ill_conditioned");
}

#[test]
fn compute_accepts_jordan_import() {
    // explicit Jordan data for the 4-node directed path: eigenvalue 1 with a
    // size-3 chain v_j = (−1)^{j−1} e_{4−j}
    let dir = tempfile::tempdir().unwrap();
    let g_path = dir.path().join("path.json");
    std::fs::write(
        &g_path,
        r#"{"n": 4, "edges": [[2, 1, 1.0], [3, 2, 1.0], [4, 3, 1.0]]}"#,
    )
    .unwrap();
    let j_path = dir.path().join("jordan.json");
    std::fs::write(
        &j_path,
        r#"{
          "eigenvalues": [[0,0],[1,0]],
          "block_sizes": [1,3],
          "R": [
            [[1,0],[0,0],[0,0],[0,0]],
            [[1,0],[0,0],[0,0],[1,0]],
            [[1,0],[0,0],[-1,0],[0,0]],
            [[1,0],[1,0],[0,0],[0,0]]
          ]
        }"#,
    )
    .unwrap();
    let out = run(&[
        "compute",
        "--graph",
        g_path.to_str().unwrap(),
        "--jordan",
        j_path.to_str().unwrap(),
        "--dynamics",
        "first",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let via_family = run(&["compute", "--graph", "path:4", "--dynamics", "first"]);
    let a = stdout_json(&out)["value"].as_f64().unwrap();
    let b = stdout_json(&via_family)["value"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-9 * (1.0 + b));
}

#[test]
fn compute_deterministic_input_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let w_path = dir.path().join("w0.json");
    std::fs::write(&w_path, "[1.0, -1.0]").unwrap();
    let g_path = dir.path().join("edge.json");
    std::fs::write(&g_path, r#"{"n": 2, "edges": [[1, 2, 1.0]]}"#).unwrap();
    let c_path = dir.path().join("c.json");
    std::fs::write(&c_path, "[[1.0, -1.0]]").unwrap();
    let out = run(&[
        "compute",
        "--graph",
        g_path.to_str().unwrap(),
        "--dynamics",
        "first",
        "--C",
        c_path.to_str().unwrap(),
        "--input",
        &format!("w0:{}", w_path.display()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value = stdout_json(&out)["value"].as_f64().unwrap();
    // y(t) = 2 e^{−t} for this direction, so the metric is exactly 2
    assert!((value - 2.0).abs() < 1e-12, "value {value}");
}

#[test]
fn compare_cycle_velocity_reports_greater() {
    let out = run(&[
        "compare",
        "--graph",
        "cycle:10,1,1",
        "--dynamics",
        "second",
        "--output",
        "velocity",
        "--gains",
        "1,1,1,1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["theorem_prediction"], "greater");
    assert_eq!(v["relation"], "greater");
    assert_eq!(v["consistent"], true);
}

#[test]
fn sweep_omega_csv_is_byte_identical_across_runs() {
    let args = [
        "sweep-omega", "--n", "12", "--dynamics", "second", "--output", "position",
        "--gains", "1,1,1,1",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "CSV output must be byte-identical");
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("omega,performance,stable\n"));
    assert_eq!(text.lines().count(), 12, "header plus one row per omega");
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",true"));
    }
}

#[test]
fn sweep_gamma_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("gamma.csv");
    let out = run(&[
        "sweep-gamma",
        "--graph",
        "cycle:10,1,1",
        "--kp",
        "1",
        "--kd",
        "2",
        "--gd",
        "6.5",
        "--gamma-p",
        "0.5:40:8",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("gamma_p,p_directed,p_undirected\n"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn star_complete_csv_matches_closed_form() {
    let out = run(&[
        "star-complete", "--n-max", "6", "--dynamics", "first",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,p_star,p_complete,abs_diff\n"));
    let row5 = text.lines().find(|l| l.starts_with("5,")).unwrap();
    let fields: Vec<&str> = row5.split(',').collect();
    let p_star: f64 = fields[1].parse().unwrap();
    assert!((p_star - 1.6).abs() < 1e-12);
}

#[test]
fn oracle_check_star_passes() {
    let out = run(&[
        "oracle-check", "--graph", "star:5", "--dynamics", "first", "--dt", "2e-3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    let closed = v["closed_form"].as_f64().unwrap();
    let gram = v["gramian"].as_f64().unwrap();
    let rk4 = v["rk4"].as_f64().unwrap();
    assert!((closed - 1.6).abs() < 1e-10);
    assert!((gram - 1.6).abs() < 1e-10);
    assert!((rk4 - 1.6).abs() < 1e-3 * 1.6);
}

#[test]
fn oracle_check_cycle_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let w_path = dir.path().join("w0.json");
    let w0: Vec<f64> = (0..50).map(|i| ((i * 37 % 19) as f64 - 9.0) / 10.0).collect();
    std::fs::write(&w_path, serde_json::to_string(&w0).unwrap()).unwrap();
    let out = run(&[
        "oracle-check",
        "--graph",
        "cycle:50,1,1",
        "--dynamics",
        "second",
        "--gains",
        "1,2,5,6.5",
        "--input",
        &format!("w0:{}", w_path.display()),
        "--dt",
        "5e-3",
        "--sim-horizon",
        "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["rel_closed_gramian"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn oracle_check_unstable_exits_2() {
    let out = run(&[
        "oracle-check", "--graph", "cycle:8,1,1", "--dynamics", "second", "--gains",
        "0,0.05,1,0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_family_is_parse_error() {
    let out = run(&["compute", "--graph", "torus:4", "--dynamics", "first"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_cap_does_not_change_csv_bytes() {
    let args = [
        "sweep-omega", "--n", "14", "--dynamics", "second", "--output", "velocity",
        "--gains", "1,1,1,1",
    ];
    let default = run(&args);
    let single = bin()
        .args(args)
        .env("DIGRAPH_PERF_THREADS", "1")
        .output()
        .expect("binary runs");
    assert!(default.status.success() && single.status.success());
    assert_eq!(default.stdout, single.stdout);
}
