use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mc2_cli::{execute, parse_problem, parse_problem_str, report_summary, RunArgs, RunConfig};

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn mc2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mc2")).args(args).output().unwrap()
}

fn run(file: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut a = vec!["run", "--problem", file.to_str().unwrap(), "--out", out.to_str().unwrap()];
    a.extend_from_slice(extra);
    mc2(&a)
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&o.stderr)))
}

const BUNDLED: [&str; 5] = ["pincus.json", "pincus_flipped.json", "portfolio_n1.json", "portfolio_n2.json", "farmer.json"];

#[test]
fn bundled_files_parse_and_round_trip() {
    for f in BUNDLED {
        let pf = parse_problem(&problem(f)).unwrap();
        let again = parse_problem_str(&serde_json::to_string(&pf).unwrap()).unwrap();
        assert_eq!(pf, again, "{f}");
    }
}

#[test]
fn check_prints_normalized_problem() {
    let o = mc2(&["check", "--problem", problem("pincus.json").to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["problem"]["type"], "lp");
}

#[test]
fn ragged_matrix_names_the_field() {
    let o = mc2(&["check", "--problem", data("ragged.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr_json(&o)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("problem.sigma[1]"), "{msg}");
}

#[test]
fn unknown_field_reports_location() {
    let text = std::fs::read_to_string(problem("pincus.json")).unwrap().replace("\"t\": 5", "\"t\": 5, \"tt\": 1");
    let err = parse_problem_str(&text).unwrap_err().to_string();
    assert!(err.contains("line") && err.contains("tt"), "{err}");
}

#[test]
fn unknown_solver_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&problem("pincus.json"), dir.path(), &["--seed", "1", "--solver", "simplex"]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr_json(&o)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("lp-dual") && msg.contains("two-stage"), "{msg}");
}

#[test]
fn solver_must_fit_problem() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&problem("pincus.json"), dir.path(), &["--seed", "1", "--solver", "portfolio-gibbs"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&problem("pincus.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "config");
}

#[test]
fn bad_kappa_schedule_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&problem("pincus.json"), dir.path(), &["--seed", "1", "--kappa-schedule", "1,-5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_lp_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&data("infeasible.json"), dir.path(), &["--seed", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_json(&o)["error"]["code"], 4);
}

#[test]
fn unbounded_lp_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    for solver in ["lp-dual", "anneal"] {
        let o = run(&data("unbounded.json"), dir.path(), &["--seed", "1", "--solver", solver]);
        assert_eq!(o.status.code(), Some(4), "{solver}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn same_seed_same_traces_and_chain_zero_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, single) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("s"));
    let flags = ["--seed", "7", "--sweeps", "3000", "--chains", "2"];
    assert!(run(&problem("portfolio_n1.json"), &a, &flags).status.success());
    assert!(run(&problem("portfolio_n1.json"), &b, &flags).status.success());
    assert!(run(&problem("portfolio_n1.json"), &single, &flags[..4]).status.success());
    for c in 0..2 {
        let f = format!("trace_chain{c}.tsv");
        assert_eq!(std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap());
    }
    assert_eq!(std::fs::read(a.join("trace_chain0.tsv")).unwrap(), std::fs::read(single.join("trace_chain0.tsv")).unwrap());
    assert_ne!(std::fs::read(a.join("trace_chain0.tsv")).unwrap(), std::fs::read(a.join("trace_chain1.tsv")).unwrap());
}

#[test]
fn pincus_summary_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&problem("pincus.json"), dir.path(), &["--seed", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("relative_gap") && text.contains("dual_value"), "{text}");
    for f in ["report.json", "summary.txt", "trace_chain0.tsv", "histogram_pi1.tsv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let trace = std::fs::read_to_string(dir.path().join("trace_chain0.tsv")).unwrap();
    assert!(trace.starts_with("sweep\tkappa"));
    // four ladder levels of 2000 plus the final 20000, and a header
    assert_eq!(trace.lines().count(), 28_001);
}

#[test]
fn json_format_is_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&problem("pincus.json"), dir.path(), &["--seed", "3", "--format", "json", "--kappa-schedule", "1,5,25"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["solver"], "lp-dual");
    assert_eq!(v["provenance"]["config"]["kappa_schedule"], serde_json::json!([1.0, 5.0, 25.0]));
    let on_disk: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v, on_disk);
}

#[test]
fn summary_prints_a_constant_estimate_exactly() {
    let a = RunArgs { problem: problem("pincus.json"), seed: 1, out: std::env::temp_dir(), sweeps: Some(500), ..Default::default() };
    let pf = parse_problem(&a.problem).unwrap();
    let (mut r, _) = execute(&pf, &RunConfig::resolve(&a, &pf).unwrap()).unwrap();
    for e in &mut r.estimates {
        (e.mean, e.se, e.mode) = (3.25, 0.0, 3.25);
    }
    let s = report_summary(&r).unwrap();
    assert!(s.contains("3.250000") && s.contains("0.00e0"), "{s}");
    r.estimates.clear();
    assert!(report_summary(&r).is_err());
}

#[test]
fn farmer_outer_histogram_counts_kept_draws() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&problem("farmer.json"), dir.path(), &["--seed", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let h = std::fs::read_to_string(dir.path().join("histogram_x.tsv")).unwrap();
    let total: u64 = h.lines().skip(1).map(|l| l.split('\t').nth(2).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 2500);
}

#[test]
fn two_stage_and_one_stage_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&data("two_stage_toy.json"), &dir.path().join("ts"), &["--seed", "4", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let x = v["estimates"][0]["mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&x));
    for solver in ["one-stage", "saa"] {
        let o = run(&data("one_stage.json"), &dir.path().join(solver), &["--seed", "4", "--solver", solver, "--sweeps", "2000"]);
        assert!(o.status.success(), "{solver}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn solvers_listing() {
    let o = mc2(&["solvers", "--problem", problem("farmer.json").to_str().unwrap()]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("farmer-outer"));
    assert!(text.contains("farmer-inner-slice") && !text.contains("lp-dual"));
}

#[test]
fn log_level_variable_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mc2"))
        .env("MC2_LOG_LEVEL", "info")
        .args(["run", "--problem", problem("pincus.json").to_str().unwrap(), "--seed", "1", "--sweeps", "500"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("running lp-dual"));
}
