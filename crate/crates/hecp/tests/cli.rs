use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use hecp::circuit_text;
use hecp::export::{parse_pattern_csv, parse_sweep_csv, RunDoc, SweepDoc, TableDoc};
use hecp_core::detection::run_protocol;
use hecp_core::protocol::{ProtocolKind, SourceParams};

fn hecp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hecp")).args(args).env_remove("HECP_OUT_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn run_json(args: &[&str]) -> RunDoc {
    let mut full = vec!["run", "--format", "json"];
    full.extend(args);
    let o = hecp(&full);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn balanced_bell_reports_quarter() {
    let doc = run_json(&["--protocol", "bell", "--alpha2", "0.5", "--gamma2", "0.5"]);
    assert!((doc.probabilities.p1 - 0.25).abs() < 1e-12);
    assert!((doc.probabilities.sim_success - 0.25).abs() < 1e-9);
    let pretty = stdout(&hecp(&["run", "--protocol", "bell", "--alpha2", "0.5", "--gamma2", "0.5"]));
    let success = pretty.lines().find(|l| l.starts_with("success")).unwrap();
    assert_eq!(success.split_whitespace().collect::<Vec<_>>(), ["success", "0.25", "0.25"]);
}

#[test]
fn ghz_unbalanced_success() {
    let doc = run_json(&["--protocol", "ghz", "--alpha2", "0.3", "--gamma2", "0.4"]);
    // 4 · 0.3 · 0.7 · 0.4 · 0.6
    assert!((doc.probabilities.sim_success - 0.2016).abs() < 1e-9);
    assert!(doc.checks.iter().all(|c| c.passed));
    assert!(doc.outcomes.iter().all(|r| r.charlie.is_some()));
}

#[test]
fn out_of_range_amplitude_rejected() {
    let o = hecp(&["run", "--protocol", "bell", "--alpha2", "1.0", "--gamma2", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpha2 must lie in (0,1)"));
    assert!(o.stdout.is_empty());
}

#[test]
fn failed_check_exits_two() {
    // No double matches the closed forms to 1e-300, so the aggregate checks fail.
    let o = hecp(&["run", "--alpha2", "0.3", "--gamma2", "0.4", "--tolerance", "1e-300"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn phases_accepted() {
    let doc = run_json(&["--alpha2", "0.2", "--gamma2", "0.7", "--alpha-phase", "-1.2", "--gamma-phase", "2.5"]);
    assert!((doc.probabilities.sim_success - 4.0 * 0.2 * 0.8 * 0.7 * 0.3).abs() < 1e-9);
    assert_eq!(doc.params.alpha_phase, -1.2);
}

#[test]
fn run_csv_is_one_summary_row() {
    let o = hecp(&["run", "--alpha2", "0.3", "--gamma2", "0.4", "--format", "csv", "--rounds", "2"]);
    let text = stdout(&o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let col = |name: &str| rows[0][header.iter().position(|h| h == name).unwrap()].to_string();
    assert!((col("p1").parse::<f64>().unwrap() - 0.2016).abs() < 1e-15);
    assert_eq!(col("checks_passed"), "true");
    assert!((col("multi_round_success").parse::<f64>().unwrap() - col("p2").parse::<f64>().unwrap()).abs() < 1e-12);
}

#[test]
fn bell_table_rows_match_enumeration() {
    let p = SourceParams::from_moduli(0.3, 0.4, 0.0, 0.0).unwrap();
    let records: BTreeSet<String> =
        run_protocol(&p, ProtocolKind::Bell).unwrap().outcomes.iter().map(|o| o.record.to_string()).collect();
    let o = hecp(&["table", "--protocol", "bell", "--alpha2", "0.3", "--gamma2", "0.4", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = parse_pattern_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), records.len());
    assert!(rows.windows(2).all(|w| w[0].pattern <= w[1].pattern));
    let total: f64 = rows.iter().map(|r| r.probability).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn compare_paper_reports_bijection() {
    let o = hecp(&["table", "--protocol", "bell", "--compare-paper"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("bijection found"), "{}", stdout(&o));
    let o = hecp(&["table", "--protocol", "ghz", "--compare-paper", "--format", "json"]);
    let doc: TableDoc = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(doc.comparison.unwrap().bijection_found);
    let o = hecp(&["table", "--protocol", "bell", "--compare-paper", "--format", "csv"]);
    assert!(stderr(&o).contains("bijection found"));
}

#[test]
fn ghz_table_has_charlie_column() {
    let o = hecp(&["table", "--protocol", "ghz", "--format", "csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "pattern,charlie,interval,class,reference,feedforward,probability");
    let rows = parse_pattern_csv(&text).unwrap();
    assert!(rows.iter().all(|r| r.charlie.as_deref().is_some_and(|c| !c.is_empty())));
    let bell = stdout(&hecp(&["table", "--protocol", "bell", "--format", "csv"]));
    assert!(!bell.lines().next().unwrap().contains("charlie"));
}

#[test]
fn default_sweep() {
    let o = hecp(&["sweep"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = parse_sweep_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 100);
    let best = rows.iter().max_by(|a, b| a.p2.total_cmp(&b.p2)).unwrap();
    assert_eq!((best.alpha2, best.gamma2), (0.5, 0.5));
    assert!((best.p2 - 0.3125).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.max_dev <= 1e-9));
}

#[test]
fn coarse_sweep_and_json_mirror() {
    let csv_rows = parse_sweep_csv(&stdout(&hecp(&["sweep", "--step", "0.25"]))).unwrap();
    assert_eq!(csv_rows.len(), 4);
    let doc: SweepDoc = serde_json::from_str(&stdout(&hecp(&["sweep", "--step", "0.25", "--format", "json"]))).unwrap();
    assert_eq!(doc.rows, csv_rows);
    assert_eq!(hecp(&["sweep", "--step", "0.3"]).status.code(), Some(1));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hecp"))
        .args(["sweep", "--step", "0.25"])
        .env("HECP_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(dir.path().join("sweep-bell.csv")).unwrap();
    assert_eq!(parse_sweep_csv(&written).unwrap().len(), 4);

    let o = Command::new(env!("CARGO_BIN_EXE_hecp"))
        .args(["table", "--format", "json", "--output", "t.json"])
        .env("HECP_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("t.json").exists());
}

#[test]
fn explicit_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("run.json");
    let o = hecp(&["run", "--format", "json", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc: RunDoc = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc.protocol, "bell");
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn circuit_file_evolution() {
    let dir = tempfile::tempdir().unwrap();
    let full = write(dir.path(), "bell.txt", &circuit_text::print(&ProtocolKind::Bell.circuit()));
    let o = hecp(&["run", "--circuit", &full, "--alpha2", "0.3", "--gamma2", "0.4", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["norm_out"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["elements"], ProtocolKind::Bell.circuit().len());

    let small = write(dir.path(), "small.txt", "# front end only\nbs B1 A1'\nBS b2 a2'\n");
    let o = hecp(&["run", "--circuit", &small]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("2 elements"));

    let bad = write(dir.path(), "bad.txt", "BS a1' b1\nMIRROR x\n");
    let o = hecp(&["run", "--circuit", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));

    let missing = dir.path().join("absent.txt");
    assert_eq!(hecp(&["run", "--circuit", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn run_twice_byte_identical() {
    let args = ["run", "--protocol", "ghz", "--alpha2", "0.17", "--gamma2", "0.71", "--format", "json"];
    assert_eq!(hecp(&args).stdout, hecp(&args).stdout);
}
