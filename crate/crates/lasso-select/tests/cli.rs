use std::fs;
use std::path::{Path, PathBuf};

use lasso_select::cli::{dispatch, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use lasso_select::config::{load_toml, BoundsSpec};
use lasso_select::dataset::{load_dataset_path, ColumnMode, Layout};
use lasso_select::engine::harness::curve_rows;
use lasso_select::engine::solver::{compute_penalty, solve_weighted_lasso, SolverOptions};
use lasso_select::results::{curve_csv, fmt_num, read_json};
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("lasso-select").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let (code, _, err) = run(&[]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("Usage"));
}

#[test]
fn unknown_flag_and_missing_file_are_usage_errors() {
    assert_eq!(run(&["bounds", "--nope"]).0, EXIT_USAGE);
    assert_eq!(run(&["bounds", "--config", "/definitely/not/here.toml"]).0, EXIT_USAGE);
    assert_eq!(run(&["--help"]).0, EXIT_OK);
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "y,x1\n1,NaN\n").unwrap();
    let (code, _, err) = run(&["solve", "--data", data.to_str().unwrap(), "--r", "0.1"]);
    assert_eq!(code, EXIT_RUNTIME);
    assert!(err.contains("line 2") && err.contains("x1"), "{err}");
}

#[test]
fn solve_matches_library_on_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, "y,x1\n1,0\n2,1\n3,2").unwrap();
    let out = dir.path().join("sol.json");
    let (code, stdout, _) =
        run(&["solve", "--data", data.to_str().unwrap(), "--r", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("KKT pass"));

    let json: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["kkt"]["pass"], Value::Bool(true));
    let cli_lambda = json["lambda_hat"][0].as_f64().unwrap();

    let d = load_dataset_path(&data, &Layout::new("y", ColumnMode::Raw)).unwrap();
    let pen = compute_penalty(&d.sample.col_norms, 0.1).unwrap();
    let sol = solve_weighted_lasso(&d.sample.design, &d.sample.y, &pen, &SolverOptions::default()).unwrap();
    assert_eq!(fmt_num(cli_lambda), fmt_num(sol.lambda_hat[0]));
    // (1/n)Σ x y = 8/3, ‖x‖_n² = 5/3, ω = 0.1·sqrt(5/3): λ = (8/3 − ω) / (5/3)
    let expected = (8.0 / 3.0 - 0.1 * (5.0f64 / 3.0).sqrt()) / (5.0 / 3.0);
    assert!((sol.lambda_hat[0] - expected).abs() < 1e-9);
}

#[test]
fn bounds_table_matches_library_rows() {
    let path = configs().join("bounds.toml");
    let (code, stdout, _) = run(&["bounds", "--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let rows = load_toml::<BoundsSpec>(&path).unwrap().table().unwrap();
    let lines: Vec<&str> = stdout.lines().skip(1).collect();
    assert_eq!(lines.len(), rows.len());
    for (line, row) in lines.iter().zip(&rows) {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields[0], row.n.to_string());
        assert_eq!(fields[1], fmt_num(row.r));
        assert_eq!(fields[2], fmt_num(row.pi_star.raw));
        assert_eq!(fields[3], fmt_num(row.p_star.raw));
        assert_eq!(fields[7], fmt_num(row.events.approximation.raw));
    }
}

#[test]
fn oracle_command_reports_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let cfg = configs().join("oracle.toml");
    let (code, stdout, _) = run(&["oracle", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.starts_with("k* = 1; I* = [0]"));
    let json: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["lambda_star"], serde_json::json!([2.0, 0.0]));
}

#[test]
fn simulate_round_trips_the_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("small.toml");
    for precision in ["full", "significant"] {
        let out = dir.path().join(precision);
        let (code, _, err) =
            run(&["--precision", precision, "simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK, "{err}");
        let result = read_json(&out.join("results.json")).unwrap();
        let csv = fs::read_to_string(out.join("curve.csv")).unwrap();
        assert_eq!(curve_csv(&curve_rows(&result)).unwrap(), csv);
        assert!(csv.starts_with("n,r,kstar_r,p_exact,p_miss,p_false,ci_lo,ci_hi\n"));
        for a in &result.aggregates {
            assert!(a.decomposition_holds());
        }
    }
    let (code, curve, _) = run(&["curve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(curve, fs::read_to_string(dir.path().join("full/curve.csv")).unwrap());
}
