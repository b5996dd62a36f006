use std::path::Path;
use std::process::{Command, Output};

use dpdtol::analysis::{inequality_suite_with, SuiteConstants};
use dpdtol_cli::{fm_table, selftest_with, EnvSpec, FmRequest, FM_HEADER, RESULTS_HEADER};
use serde_json::Value;

fn dpdtol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpdtol")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn simulate(config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    dpdtol(&args)
}

const SWEEP: &str = r#"{
    "environment": {"kind": "correlated", "means": [0.4, 0.6, 0.7], "coupling": 0.5},
    "epsilon": [0.1, 0.5, 2.0],
    "horizon": 40,
    "checkpoints": [10, 40],
    "algorithms": [{"kind": "rp_softmax"}, {"kind": "laplace_rnm"}],
    "trials": 5,
    "master_seed": 99
}"#;

#[test]
fn best_action_single_round_has_zero_regret() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"environment": {"kind": "bernoulli", "means": [0.9, 0.1]}, "epsilon": 1.0, "horizon": 1,
            "algorithms": [{"kind": "fixed", "action": 1}], "trials": 1, "master_seed": 0}"#,
    );
    let out = simulate(&config, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv, format!("{RESULTS_HEADER}\nfixed(1),0,1,0.0000000000000000e0\n"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SWEEP);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(simulate(&config, &a, &["--threads", "3"]).status.success());
    assert!(simulate(&config, &b, &["--threads", "1"]).status.success());
    for name in ["results.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn epsilon_sweep_fans_out() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SWEEP);
    assert!(simulate(&config, dir.path(), &[]).status.success());
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 5 * 2);
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 4);
        let mantissa = fields[3].split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17, "{line}");
    }

    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["version"], dpdtol::VERSION);
    assert_eq!(summary["config"]["master_seed"], 99);
    let results = summary["results"].as_array().unwrap();
    let keys: Vec<f64> = results.iter().map(|r| r["epsilon"].as_f64().unwrap()).collect();
    assert_eq!(keys, vec![0.1, 0.5, 2.0]);
    assert_eq!(results[0]["eta"], 0.05);
    assert_eq!(results[2]["eta"], 0.125);
    let tight = results[1]["theorem_bound"]["tight"].as_f64().unwrap();
    assert!(tight > 1.0);
    let checkpoints = results[0]["algorithms"][0]["checkpoints"].as_array().unwrap();
    assert_eq!(checkpoints.len(), 2);
    assert_eq!(checkpoints[1]["n"], 5);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SWEEP);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(simulate(&config, &a, &[]).status.success());
    assert!(simulate(&config, &b, &["--seed", "99"]).status.success());
    assert!(simulate(&config, &c, &["--seed", "100"]).status.success());
    let read = |d: &Path| std::fs::read(d.join("results.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &SWEEP.replace("\"trials\"", "\"trails\": 1, \"trials\""));
    let out = simulate(&bad, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));

    let invalid = write_config(dir.path(), &SWEEP.replace("0.5, 2.0]", "0.5, -2.0]"));
    let out = simulate(&invalid, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon[2]"));

    assert_eq!(simulate("/definitely/missing.json", dir.path(), &[]).status.code(), Some(3));
    assert_eq!(dpdtol(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(dpdtol(&["bounds", "--k", "1", "--delta-min", "0.5", "--epsilon", "1"]).status.code(), Some(1));
    assert_eq!(dpdtol(&["--help"]).status.code(), Some(0));

    // A file where the output directory should be.
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let good = write_config(dir.path(), SWEEP);
    assert_eq!(simulate(&good, &blocker, &[]).status.code(), Some(3));
}

#[test]
fn audit_command() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = dpdtol(&["audit", "--k", "2", "--t", "7", "--epsilon", "0.25", "--grid", "0,1", "--out", out_dir]);
    assert!(out.status.success());
    let value: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("audit.json")).unwrap()).unwrap();
    let report = &value["report"];
    assert_eq!(report["pass"], true);
    assert!(report["max_ratio"].as_f64().unwrap() <= 0.25f64.exp());
    assert_eq!(value["config"]["epsilon"], 0.25);

    let out = dpdtol(&["audit", "--t", "1", "--epsilon", "1"]);
    assert!(out.status.success());
    let value: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["report"]["max_ratio"], 1.0);

    let out = dpdtol(&["audit", "--k", "3", "--t", "12", "--epsilon", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("limit"));

    let out = dpdtol(&["audit", "--k", "3", "--t", "12", "--epsilon", "1", "--datasets", "20", "--seed", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fm_command() {
    let dir = tempfile::tempdir().unwrap();
    let env = r#"{"kind": "deterministic", "vector": [0.0, 1.0]}"#;
    let out = dpdtol(&["fm", "--env", env, "--m-max", "0", "--epsilon", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("fm.csv")).unwrap(), format!("{FM_HEADER}\n"));

    let out = dpdtol(&["fm", "--env", env, "--m-max", "5", "--epsilon", "1", "--samples", "0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for (m, line) in (1..=5).zip(text.lines().skip(1)) {
        let fields: Vec<&str> = line.split(',').collect();
        let q = (-0.125 * m as f64).exp();
        let expected = q / (1.0 + q);
        assert_eq!(fields[1], "exact");
        assert!((fields[2].parse::<f64>().unwrap() - expected).abs() < 1e-15);
    }
}

#[test]
fn fm_table_orders_rows_by_m() {
    let request = FmRequest {
        environment: EnvSpec::Bernoulli { means: vec![0.2, 0.8] },
        m_max: 4,
        epsilon: 0.25,
        samples: 2000,
        seed: 3,
    };
    let (rows, csv) = fm_table(&request).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.windows(2).all(|w| w[0].m <= w[1].m));
    for pair in rows.chunks(2) {
        assert!((pair[0].value - pair[1].value).abs() <= pair[1].ci_halfwidth);
    }
    assert_eq!(csv.lines().count(), 9);
    assert_eq!(fm_table(&request).unwrap().1, csv);
}

#[test]
fn bounds_command() {
    let out = dpdtol(&["bounds", "--k", "2", "--delta-min", "1", "--epsilon", "2"]);
    assert!(out.status.success());
    let value: Value = serde_json::from_slice(&out.stdout).unwrap();
    let ln2 = 2f64.ln();
    assert_eq!(value["eta"], 0.125);
    assert!((value["tight"].as_f64().unwrap() - (1.0 + 800.0 * ln2 + 128.0 * ln2)).abs() < 1e-9);
    assert!((value["relaxed"].as_f64().unwrap() - 1500.0 * ln2).abs() < 1e-9);
    assert!((value["master_bound"].as_f64().unwrap() - 232.0 * ln2).abs() < 1e-9);
}

#[test]
fn selftest_passes_and_detects_mutation() {
    let out = dpdtol(&["selftest"]);
    assert!(out.status.success());
    let value: Value = serde_json::from_slice(&out.stdout).unwrap();
    let items = value["inequalities"]["items"].as_array().unwrap();
    assert_eq!(items.len(), 5);
    assert!(items.iter().all(|i| i["worst_margin"].as_f64().unwrap() >= 0.0));

    let mutated = selftest_with(inequality_suite_with(SuiteConstants {
        item_i_divisor: 1.5,
        ..SuiteConstants::default()
    }));
    assert!(!mutated.pass);
    assert!(!mutated.inequalities.items[0].pass);
}
