use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coflow_ocs::experiment::{ScheduleFile, CSV_COLUMNS};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coflow-sim")).args(args).output().unwrap()
}

fn sim_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coflow-sim"))
        .args(args)
        .env("COFLOW_SIM_THREADS", threads)
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn default_config_writes_one_row_per_algorithm_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = sim(&["run", "--config", s(&repo_config("default.json")), "--seed", "4", "--out", s(&out)]);
    assert!(o.status.success(), "{}", text(&o));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("ours,4,ocs,3,16,100,8.0,"));
    assert!(rows[1].starts_with("rho,4,"));
    assert!(rows[2].starts_with("rand,4,"));
    // norm_w of the reference row is exactly one
    assert_eq!(rows[0].split(',').nth(8), Some("1.0"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["metadata"]["percentile_method"], "nearest-rank");
    assert!(report["metadata"]["rng"].as_str().unwrap().contains("ChaCha8"));
    assert_eq!(report["runs"].as_array().unwrap().len(), 3);
}

#[test]
fn delta_sweep_has_six_points_per_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"n": 8, "rates": [10, 20, 30], "delta": 8, "workload": {"kind": "synthetic", "coflows": 20},
            "seeds": [1, 2], "sweep": {"axis": "delta", "values": [2, 4, 6, 8, 10, 12]}}"#,
    );
    let out = dir.path().join("out");
    let o = sim(&["run", "--config", s(&config), "--out", s(&out), "--baseline", "rho"]);
    assert!(o.status.success(), "{}", text(&o));
    let mut rdr = csv::Reader::from_path(out.join("results.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6 * 2 * 2);
    let deltas: std::collections::BTreeSet<&str> = rows.iter().map(|r| &r[6]).collect();
    assert_eq!(deltas.len(), 6);
    assert!(rows.iter().all(|r| &r[0] == "ours" || &r[0] == "rho"));
}

#[test]
fn eps_config_with_delay_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"mode": "eps", "n": 4, "rates": [1], "delta": 2, "workload": {"kind": "synthetic", "coflows": 3}}"#,
    );
    let o = sim(&["run", "--config", s(&config)]);
    assert!(!o.status.success());
    assert!(text(&o).contains("config"), "{}", text(&o));
}

#[test]
fn unknown_field_is_reported_with_its_name() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"n": 4, "rates": [1], "workload": {"kind": "synthetic"}, "seed": 3}"#,
    );
    let o = sim(&["run", "--config", s(&config)]);
    assert!(!o.status.success());
    assert!(text(&o).contains("`seed`"), "{}", text(&o));
}

fn schedules_for(dir: &Path, workload: &str) -> PathBuf {
    schedules_on(dir, r#""rates": [1, 2], "delta": 1"#, workload)
}

fn schedules_on(dir: &Path, fabric: &str, workload: &str) -> PathBuf {
    let config = write_config(
        dir,
        &format!(
            r#"{{"n": 3, {fabric}, "workload": {workload},
                "algorithms": ["ours"], "seeds": [5], "write_schedules": true}}"#
        ),
    );
    let out = dir.join("out");
    let o = sim(&["run", "--config", s(&config), "--out", s(&out)]);
    assert!(o.status.success(), "{}", text(&o));
    out
}

#[test]
fn verify_accepts_self_produced_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = schedules_for(dir.path(), r#"{"kind": "tiny", "max_flows": 4, "max_coflows": 1}"#);
    let o = sim(&[
        "verify",
        "--schedule",
        s(&out.join("schedules/p0_s5_ours.json")),
        "--trace",
        s(&out.join("workloads/p0_s5.csv")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
}

#[test]
fn verify_flags_a_tampered_finish_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = schedules_for(dir.path(), r#"{"kind": "tiny", "max_flows": 4, "max_coflows": 2}"#);
    let path = out.join("schedules/p0_s5_ours.json");
    let mut file: ScheduleFile = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    file.events[0].finish += 0.5;
    fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
    let o = sim(&["verify", "--schedule", s(&path), "--trace", s(&out.join("workloads/p0_s5.csv"))]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("timing violation"), "{}", text(&o));
}

#[test]
fn verify_reports_a_broken_scheduling_prefix_bound() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    fs::write(&trace, "coflow_id,weight,src,dst,size\n1,10,2,1,2\n1,10,1,1,1\n2,1,1,3,100\n").unwrap();
    // one core at rate 1 and no delay: the second coflow's long flow takes
    // ingress 1 while the first coflow waits for egress 1
    let out = schedules_on(dir.path(), r#""rates": [1], "delta": 0"#, r#"{"kind": "trace", "path": "trace.csv"}"#);
    let path = out.join("schedules/p0_s5_ours.json");
    let o = sim(&["verify", "--schedule", s(&path), "--trace", s(&trace)]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("audit failure: scheduling prefix bound"), "{}", text(&o));
}

#[test]
fn oracle_ratios_are_at_least_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"n": 3, "rates": [1, 2], "delta": 1, "workload": {"kind": "tiny", "max_flows": 5},
            "seeds": {"start": 0, "count": 30}}"#,
    );
    let out = dir.path().join("out");
    let o = sim(&["oracle", "--config", s(&config), "--out", s(&out)]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("max algorithm/oracle ratio"));
    let mut rdr = csv::Reader::from_path(out.join("oracle.csv")).unwrap();
    let mut n = 0;
    for r in rdr.records() {
        let r = r.unwrap();
        let ratio: f64 = r[5].parse().unwrap();
        let lb_ratio: f64 = r[6].parse().unwrap();
        assert!(ratio >= 1.0 - 1e-12 && lb_ratio >= 1.0 - 1e-12, "{r:?}");
        n += 1;
    }
    assert_eq!(n, 30);
}

#[test]
fn oracle_refuses_large_instances() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"n": 8, "rates": [1], "delta": 1, "workload": {"kind": "synthetic", "coflows": 10}}"#,
    );
    let o = sim(&["oracle", "--config", s(&config), "--out", s(&dir.path().join("out"))]);
    assert!(!o.status.success());
    assert!(text(&o).contains("too large"), "{}", text(&o));
}

#[test]
fn singleton_oracle_ratio_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("one.csv");
    fs::write(&trace, "coflow_id,weight,src,dst,size\n1,2,1,2,4\n").unwrap();
    let config = write_config(
        dir.path(),
        r#"{"n": 2, "rates": [1, 2], "delta": 1, "workload": {"kind": "trace", "path": "one.csv"}}"#,
    );
    let out = dir.path().join("out");
    let o = sim(&["oracle", "--config", s(&config), "--out", s(&out)]);
    assert!(o.status.success(), "{}", text(&o));
    let csv = fs::read_to_string(out.join("oracle.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[5], "1.0");
}

#[test]
fn generated_workload_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w/trace.csv");
    let o = sim(&["gen-workload", "--config", s(&repo_config("default.json")), "--seed", "7", "--out", s(&path)]);
    assert!(o.status.success(), "{}", text(&o));
    let csv = fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("coflow_id,weight,src,dst,size\n"));
    let cfg = coflow_ocs::model::NetworkConfig::ocs(16, vec![10.0, 20.0, 30.0], 8.0).unwrap();
    let w = coflow_ocs::workload::load_trace(&path, &cfg).unwrap();
    assert_eq!(w.len(), 100);
    let again = dir.path().join("again.csv");
    sim(&["gen-workload", "--config", s(&repo_config("default.json")), "--seed", "7", "--out", s(&again)]);
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn thread_variable_is_validated() {
    let o = sim_with_threads(&["run", "--config", s(&repo_config("default.json")), "--seed", "1"], "many");
    assert!(!o.status.success());
    assert!(text(&o).contains("COFLOW_SIM_THREADS"), "{}", text(&o));
}
