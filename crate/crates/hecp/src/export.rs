//! CSV and JSON renderings of outcomes, signature tables and sweeps.
//!
//! Floats are written in shortest round-trip form, so the JSON and CSV
//! mirrors parse back to the exact same doubles.

use std::collections::BTreeMap;

use hecp_core::analysis::{ProbReport, SweepRow};
use hecp_core::detection::{Class, ClickRecord, Outcome, RunReport, Side, SignatureTable};
use hecp_core::heralds::Relabeling;
use hecp_core::protocol::{FeedForward, ProtocolKind, ReferenceFamily};
use serde::{Deserialize, Serialize};

/// One click pattern. `charlie` is only present for the GHZ protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charlie: Option<String>,
    pub interval: u32,
    pub class: String,
    pub reference: String,
    pub feedforward: String,
    pub probability: f64,
}

fn text<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn split(kind: ProtocolKind, record: &ClickRecord) -> (String, Option<String>) {
    let ab = record.restricted(|s| s != Side::Charlie).to_string();
    match kind {
        ProtocolKind::Bell => (ab, None),
        ProtocolKind::Ghz => (ab, Some(record.restricted(|s| s == Side::Charlie).to_string())),
    }
}

fn row(
    kind: ProtocolKind,
    record: &ClickRecord,
    interval: u32,
    class: Class,
    reference: Option<ReferenceFamily>,
    feedforward: Option<FeedForward>,
    probability: f64,
) -> PatternRow {
    let (pattern, charlie) = split(kind, record);
    PatternRow {
        pattern,
        charlie,
        interval,
        class: class.name().to_string(),
        reference: text(reference),
        feedforward: text(feedforward),
        probability,
    }
}

fn sorted(mut rows: Vec<PatternRow>) -> Vec<PatternRow> {
    rows.sort_by(|a, b| {
        (&a.pattern, &a.charlie, &a.class, &a.reference)
            .cmp(&(&b.pattern, &b.charlie, &b.class, &b.reference))
            .then(a.probability.total_cmp(&b.probability))
    });
    rows
}

pub fn table_rows(table: &SignatureTable) -> Vec<PatternRow> {
    sorted(
        table
            .rows
            .iter()
            .map(|r| row(table.kind, &r.record, r.interval, r.class, r.reference, r.feedforward, r.probability))
            .collect(),
    )
}

pub fn outcome_rows(kind: ProtocolKind, outcomes: &[Outcome]) -> Vec<PatternRow> {
    sorted(
        outcomes
            .iter()
            .map(|o| row(kind, &o.record, o.interval(), o.class, o.reference, o.feedforward, o.probability))
            .collect(),
    )
}

pub fn pattern_csv(kind: ProtocolKind, rows: &[PatternRow]) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["pattern"];
    if kind == ProtocolKind::Ghz {
        header.push("charlie");
    }
    header.extend(["interval", "class", "reference", "feedforward", "probability"]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.pattern.clone()];
        if kind == ProtocolKind::Ghz {
            rec.push(r.charlie.clone().unwrap_or_default());
        }
        rec.extend([
            r.interval.to_string(),
            r.class.clone(),
            r.reference.clone(),
            r.feedforward.clone(),
            r.probability.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is UTF-8"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub alpha2: f64,
    pub gamma2: f64,
    pub p1: f64,
    pub p2: f64,
    pub sim_success: f64,
    pub sim_recycle: f64,
    pub sim_fail: f64,
    pub max_dev: f64,
}

impl From<&SweepRow> for SweepRecord {
    fn from(r: &SweepRow) -> Self {
        SweepRecord {
            alpha2: r.alpha2,
            gamma2: r.gamma2,
            p1: r.p1,
            p2: r.p2,
            sim_success: r.sim_success,
            sim_recycle: r.sim_recycle,
            sim_fail: r.sim_fail,
            max_dev: r.max_dev,
        }
    }
}

pub fn sweep_csv(rows: &[SweepRecord]) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["alpha2", "gamma2", "p1", "p2", "sim_success", "sim_recycle", "sim_fail", "max_dev"])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is UTF-8"))
}

pub fn parse_sweep_csv(text: &str) -> csv::Result<Vec<SweepRecord>> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

pub fn parse_pattern_csv(text: &str) -> csv::Result<Vec<PatternRow>> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepDoc {
    pub protocol: String,
    pub rows: Vec<SweepRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub bijection_found: bool,
    /// Derived detector name to published name, moved detectors only.
    pub relabeling: Option<BTreeMap<String, String>>,
}

impl Comparison {
    pub fn new(r: Option<&Relabeling>) -> Self {
        Comparison {
            bijection_found: r.is_some(),
            relabeling: r.map(|r| r.moved().map(|(a, b)| (a.to_string(), b.to_string())).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableDoc {
    pub protocol: String,
    pub rows: Vec<PatternRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub alpha2: f64,
    pub gamma2: f64,
    pub alpha_phase: f64,
    pub gamma_phase: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbDoc {
    pub p1: f64,
    pub recycle_prob: f64,
    pub p2: f64,
    pub sim_success: f64,
    pub sim_recycle: f64,
    pub sim_fail: f64,
    pub max_abs_deviation: f64,
}

impl ProbDoc {
    pub fn new(r: &ProbReport) -> Self {
        let sim = r.simulated.unwrap_or_default();
        ProbDoc {
            p1: r.p1,
            recycle_prob: r.recycle_prob,
            p2: r.p2,
            sim_success: sim.success,
            sim_recycle: sim.recycle,
            sim_fail: sim.fail,
            max_abs_deviation: r.max_abs_deviation,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub success: usize,
    pub recycle: usize,
    pub fail: usize,
}

impl ClassCounts {
    pub fn of(run: &RunReport) -> Self {
        let n = |c: Class| run.outcomes.iter().filter(|o| o.class == c).count();
        ClassCounts { success: n(Class::Success), recycle: n(Class::Recycle), fail: n(Class::Fail) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDoc {
    pub protocol: String,
    pub params: ParamsDoc,
    pub probabilities: ProbDoc,
    pub counts: ClassCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_round_success: Option<f64>,
    pub checks: Vec<Check>,
    pub outcomes: Vec<PatternRow>,
}

/// Single summary row for `run --format csv`.
pub fn run_csv(doc: &RunDoc) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let p = &doc.probabilities;
    let mut header = vec![
        "protocol", "alpha2", "gamma2", "alpha_phase", "gamma_phase", "p1", "recycle_prob", "p2", "sim_success",
        "sim_recycle", "sim_fail", "max_abs_deviation", "n_success", "n_recycle", "n_fail",
    ];
    let mut rec = vec![
        doc.protocol.clone(),
        doc.params.alpha2.to_string(),
        doc.params.gamma2.to_string(),
        doc.params.alpha_phase.to_string(),
        doc.params.gamma_phase.to_string(),
        p.p1.to_string(),
        p.recycle_prob.to_string(),
        p.p2.to_string(),
        p.sim_success.to_string(),
        p.sim_recycle.to_string(),
        p.sim_fail.to_string(),
        p.max_abs_deviation.to_string(),
        doc.counts.success.to_string(),
        doc.counts.recycle.to_string(),
        doc.counts.fail.to_string(),
    ];
    if let Some(m) = doc.multi_round_success {
        header.push("multi_round_success");
        rec.push(m.to_string());
    }
    header.push("checks_passed");
    rec.push(doc.checks.iter().all(|c| c.passed).to_string());
    w.write_record(&header)?;
    w.write_record(&rec)?;
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hecp_core::analysis::{sweep, Grid};
    use hecp_core::detection::derive_signature_table;
    use hecp_core::protocol::SourceParams;

    fn p() -> SourceParams {
        SourceParams::from_moduli(0.3, 0.4, 0.0, 0.0).unwrap()
    }

    #[test]
    fn table_csv_round_trip() {
        for kind in [ProtocolKind::Bell, ProtocolKind::Ghz] {
            let rows = table_rows(&derive_signature_table(&p(), kind).unwrap());
            let text = pattern_csv(kind, &rows).unwrap();
            assert_eq!(parse_pattern_csv(&text).unwrap(), rows);
            let header = text.lines().next().unwrap();
            assert_eq!(header.contains("charlie"), kind == ProtocolKind::Ghz);
        }
    }

    #[test]
    fn rows_sorted_by_pattern() {
        let rows = table_rows(&derive_signature_table(&p(), ProtocolKind::Bell).unwrap());
        assert!(rows.windows(2).all(|w| w[0].pattern <= w[1].pattern));
        let fail = rows.iter().find(|r| r.class == "fail").unwrap();
        assert_eq!((fail.reference.as_str(), fail.feedforward.as_str()), ("", ""));
    }

    #[test]
    fn sweep_round_trips_exactly() {
        let rows: Vec<SweepRecord> =
            sweep(&Grid::with_step(0.25).unwrap(), ProtocolKind::Bell).unwrap().iter().map(SweepRecord::from).collect();
        let text = sweep_csv(&rows).unwrap();
        assert!(text.starts_with("alpha2,gamma2,p1,p2,sim_success,sim_recycle,sim_fail,max_dev\n"));
        assert_eq!(parse_sweep_csv(&text).unwrap(), rows);
        let doc = SweepDoc { protocol: "bell".into(), rows: rows.clone() };
        let back: SweepDoc = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn awkward_floats_survive_json() {
        let r = SweepRecord {
            alpha2: 0.1 + 0.2,
            gamma2: 1.0 / 3.0,
            p1: 5e-324,
            p2: 0.31249999999999994,
            sim_success: 2.0f64.sqrt(),
            sim_recycle: 0.0,
            sim_fail: 1.0 - 1e-16,
            max_dev: 1.1102230246251565e-16,
        };
        let back: SweepRecord = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(parse_sweep_csv(&sweep_csv(&[r]).unwrap()).unwrap(), [r]);
    }
}
