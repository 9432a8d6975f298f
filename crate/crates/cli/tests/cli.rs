use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_telemeander"))
        .args(args)
        .env_remove("TELEMEANDER_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn meander_law_table_shape() {
    let o = run(&["law", "--lambda", "1", "--c", "1", "--t", "1", "--what", "meander", "--grid", "0:1:101"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("x,density,cdf"));
    assert_eq!(csv_rows(&text).len(), 101);
    let atoms: Vec<&str> = text.lines().filter(|l| l.starts_with("#atom,")).collect();
    assert_eq!(atoms.len(), 1);
    let mass: f64 = atoms[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!((mass - 0.54608).abs() < 1e-4);
}

#[test]
fn csv_and_json_agree() {
    let args = ["law", "--what", "telegraph", "--v0", "minus", "--grid", "-0.9:0.9:7"];
    let csv = csv_rows(&stdout(&run(&args)));
    let json: Value = serde_json::from_str(&stdout(&run(&[&args[..], &["--format", "json"]].concat()))).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), csv.len());
    for (r, c) in rows.iter().zip(&csv) {
        for (k, v) in ["x", "density", "cdf"].iter().zip(c) {
            let j = r[k].as_f64().unwrap();
            assert!((j - v).abs() <= 1e-15 * j.abs().max(1.0), "{k}: {j} vs {v}");
        }
    }
    assert_eq!(json["atoms"][0]["x"].as_f64(), Some(-1.0));
}

#[test]
fn conditional_law_is_triangular_for_two_switches() {
    let o = run(&["law", "--what", "cond", "--n", "2", "--t", "2", "--grid", "0:1.5:4"]);
    for r in csv_rows(&stdout(&o)) {
        assert!((r[1] - 2.0 * r[0] / 4.0).abs() < 1e-14);
        assert!((r[2] - r[0] * r[0] / 4.0).abs() < 1e-12);
    }
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        vec!["law", "--lambda", "-1"],
        vec!["law", "--grid", "0:1"],
        vec!["law", "--what", "cond"],
        vec!["law", "--what", "min", "--v0", "symmetric"],
        vec!["kac", "--alphas", "0"],
        vec!["verify", "--suite", "unknown"],
        vec!["simulate", "--paths", "0"],
        vec!["nonsense"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn simulation_replays_across_worker_counts() {
    let base = ["simulate", "--mode", "meander", "--seed", "42", "--paths", "50000", "--format", "json"];
    let a = run(&[&base[..], &["--workers", "1"]].concat());
    let b = run(&[&base[..], &["--workers", "4"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let s: Value = serde_json::from_slice(&a.stdout).unwrap();
    let z = (s["acceptance_rate"].as_f64().unwrap() - s["expected_acceptance_rate"].as_f64().unwrap())
        / s["acceptance_std_error"].as_f64().unwrap();
    assert!(z.abs() < 4.0);
}

#[test]
fn workers_come_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_telemeander"))
        .args(["simulate", "--paths", "100"])
        .env("TELEMEANDER_WORKERS", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_telemeander"))
        .args(["simulate", "--paths", "100"])
        .env("TELEMEANDER_WORKERS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn given_one_switch_passes_ks_and_dump_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("ends.csv");
    let o = run(&[
        "simulate",
        "--mode",
        "given-n",
        "--n",
        "1",
        "--conditioned",
        "--paths",
        "20000",
        "--format",
        "json",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(s["ks"]["p_value"].as_f64().unwrap() >= 0.01);
    let text = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(text.lines().next(), Some("endpoint,n_switches,minimum"));
    assert_eq!(text.lines().count() as u64 - 1, s["accepted"].as_u64().unwrap());
}

#[test]
fn starvation_exits_with_three() {
    let o = run(&["simulate", "--mode", "given-n", "--n", "30", "--conditioned", "--paths", "10", "--min-accepted", "5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn pde_suite_writes_three_passing_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pde.json");
    let o = run(&["verify", "--suite", "pde", "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let reports: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    assert!(reports.iter().all(|r| r["status"] == "pass"));
}

#[test]
fn dominance_suite_passes() {
    let o = run(&["verify", "--suite", "dominance"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains(",pass,"));
}

#[test]
fn kac_table() {
    let single = run(&["kac", "--alphas", "16"]);
    assert!(single.status.success());
    let text = stdout(&single);
    assert_eq!(text.lines().next(), Some("alpha,endpoint_gap,fdd_gap,moment_gap_p1,moment_gap_p2"));
    assert_eq!(csv_rows(&text).len(), 1);
    let trailer: Value = serde_json::from_str(text.lines().last().unwrap().trim_start_matches("# ")).unwrap();
    assert!(trailer["monotone"].is_null());

    // the fdd gap rises between alpha = 4 and 16, so the default sweep fails
    let sweep = run(&["kac"]);
    assert_eq!(sweep.status.code(), Some(1));
    assert_eq!(csv_rows(&stdout(&sweep)).len(), 5);

    let tail = run(&["kac", "--alphas", "16,64,256,1024"]);
    assert!(tail.status.success());
}
