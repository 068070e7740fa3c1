use std::process::{Command, Output};

fn qec5(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qec5")).args(args).env_remove("QEC5_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn rejects_a_composite_dimension() {
    let o = qec5(&["run", "--dim", "4", "--p", "0.01", "--decoder", "bm"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dimension must be prime"));
}

#[test]
fn rejects_unknown_flags_and_bad_values() {
    assert_eq!(qec5(&["run", "--dim", "3", "--p", "0.01", "--decoder", "bm", "--bogus"]).status.code(), Some(2));
    assert_eq!(qec5(&["run", "--dim", "3", "--p", "1.5", "--decoder", "bm"]).status.code(), Some(2));
    let o = qec5(&["run", "--dim", "3", "--p", "0.01", "--decoder", "bm", "--cycles", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_noise_row() {
    let o = qec5(&["run", "--dim", "3", "--model", "sdep", "--p", "0", "--decoder", "bm", "--shots", "200"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "q,model,decoder,flag,p,shots,failures,p_l,ci_low,ci_high,seed");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[6], "0");
    assert_eq!(row[7], "0.0");
}

#[test]
fn standard_depolarizing_run_stays_below_the_single_error_bound() {
    let o = qec5(&["run", "--dim", "3", "--model", "sdep", "--p", "0.05", "--decoder", "bm", "--shots", "20000", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let p_l: f64 = row[7].parse().unwrap();
    assert!(p_l < 0.0226, "{p_l}");
}

#[test]
fn same_seed_gives_identical_output() {
    let args = ["run", "--dim", "2", "--p", "0.003", "--decoder", "bm", "--shots", "3000", "--seed", "5"];
    let (a, b) = (qec5(&args), qec5(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_qec5"))
        .args(&args[..args.len() - 2])
        .env("QEC5_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(env.stdout, a.stdout);
}

#[test]
fn graph_counts() {
    for (dim, cycles, nodes, comps) in [("2", "1", 4, 1), ("5", "1", 16, 2), ("3", "2", 16, 1)] {
        let o = qec5(&["graph", "--dim", dim, "--cycles", cycles]);
        assert!(o.status.success());
        let err = stderr(&o);
        assert!(err.contains(&format!("nodes: {nodes},")), "{err}");
        assert!(err.contains(&format!("components: {comps}")), "{err}");
        assert!(stdout(&o).starts_with("graph detectors {"));
    }
    let o = qec5(&["graph", "--dim", "3", "--cycles", "2"]);
    assert!(stdout(&o).contains("M(A0,c0)"));
}

#[test]
fn threshold_from_published_parameters() {
    let o = qec5(&["threshold", "--a", "766", "--b", "1.873"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let t = v["threshold"].as_f64().unwrap();
    assert!((t / 4.95e-4 - 1.0).abs() < 0.1, "{t}");
    for key in ["a", "b", "cov", "threshold_sigma", "level_curves"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let o = qec5(&["threshold", "--a", "35.3", "--b", "1.149"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = v["threshold"].as_f64().unwrap() / 4.36e-11;
    assert!((1.0 / 1.5..1.5).contains(&r), "{r}");
}

#[test]
fn threshold_rejects_b_at_most_one() {
    let o = qec5(&["threshold", "--a", "2", "--b", "0.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no finite threshold"));
}

/// Synthetic results generated from the qubit flag fit.
fn synthetic_csv(points: &[f64]) -> String {
    let mut s = String::from("q,model,decoder,flag,p,shots,failures,p_l,ci_low,ci_high,seed\n");
    for &p in points {
        let pl = 766.0 * p.powf(1.873);
        s += &format!("2,circuit,bm,true,{p},100000,100,{pl},{},{},0\n", pl * 0.8, pl * 1.25);
    }
    s
}

#[test]
fn threshold_from_results_with_curves() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    std::fs::write(&csv, synthetic_csv(&[3e-4, 1e-3, 3e-3, 1e-2])).unwrap();
    let (report, curves) = (dir.path().join("fit.json"), dir.path().join("curves.csv"));
    let o = qec5(&[
        "threshold",
        "--results",
        csv.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--emit-curves",
        curves.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!((v["b"].as_f64().unwrap() - 1.873).abs() < 1e-6);
    assert!((v["threshold"].as_f64().unwrap() / 4.95e-4 - 1.0).abs() < 0.1);
    let text = std::fs::read_to_string(&curves).unwrap();
    assert!(text.starts_with("level,n,distance,p,p_l\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 61);
    assert!(text.contains("\n3,125,27,"));
}

#[test]
fn threshold_needs_three_points_and_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    std::fs::write(&csv, synthetic_csv(&[1e-3, 3e-3])).unwrap();
    let out = dir.path().join("fit.json");
    let o = qec5(&["threshold", "--results", csv.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn sweep_writes_one_row_per_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = qec5(&[
        "sweep", "--dim", "2", "--model", "sdep", "--p", "0.01,0.02,0.05", "--decoder", "mwpm", "--shots", "500", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 4);
    let bad = qec5(&["run", "--dim", "2", "--p", "0.01,0.02", "--decoder", "bm"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn flag_table_audit_passes_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.json");
    let o = qec5(&["audit-flag-table", "--dim", "2", "--save-table", table.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("failures: 0"));
    let o = qec5(&["audit-flag-table", "--dim", "2", "--table", table.to_str().unwrap()]);
    assert!(o.status.success());
    let o = qec5(&["audit-flag-table", "--dim", "3", "--table", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let o = qec5(&["selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}
