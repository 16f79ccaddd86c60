//! Argument parsing and the four subcommands.
//!
//! Exit codes: 0 success, 1 invalid input or I/O failure, 2 an internal
//! consistency check failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hecp_core::analysis::{analytic_probs, multi_round_success, sweep, Grid, ProbReport, Simulated};
use hecp_core::detection::{run_protocol, Class, RunReport, SignatureTable, MATCH_FIDELITY};
use hecp_core::heralds::find_relabeling;
use hecp_core::protocol::{ProtocolKind, SourceParams};
use thiserror::Error;

use crate::circuit_text;
use crate::export::{self, Check, ClassCounts, Comparison, ParamsDoc, PatternRow, ProbDoc, RunDoc, SweepDoc, SweepRecord, TableDoc};
use crate::verify;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_INCONSISTENT: u8 = 2;

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    /// The report was produced but a check failed.
    #[error("{0}")]
    Inconsistent(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) | Failure::Io(_) => EXIT_INVALID,
            Failure::Inconsistent(_) => EXIT_INCONSISTENT,
        }
    }
}

fn invalid(e: impl ToString) -> Failure {
    Failure::Invalid(e.to_string())
}

fn inconsistent(e: impl ToString) -> Failure {
    Failure::Inconsistent(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "hecp", version, about = "Exact simulation of heralded hyperentanglement concentration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one protocol and check the aggregates against the closed forms.
    Run(RunArgs),
    /// Derive the click-pattern table.
    Table(TableArgs),
    /// Sweep (|α|², |γ|²) over a grid in (0, 0.5]².
    Sweep(SweepArgs),
    /// Run the acceptance suite, one line per criterion.
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Bell,
    Ghz,
}

impl From<Protocol> for ProtocolKind {
    fn from(p: Protocol) -> Self {
        match p {
            Protocol::Bell => ProtocolKind::Bell,
            Protocol::Ghz => ProtocolKind::Ghz,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Pretty,
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Pretty => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long, value_enum, default_value_t = Protocol::Bell)]
    pub protocol: Protocol,
    /// |α|², strictly between 0 and 1.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub alpha2: f64,
    /// |γ|², strictly between 0 and 1.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub gamma2: f64,
    /// arg α in radians (β is real).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_phase: f64,
    /// arg γ in radians (δ is real).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gamma_phase: f64,
}

impl ParamArgs {
    pub fn params(&self) -> Result<SourceParams, Failure> {
        for (name, v) in [("alpha2", self.alpha2), ("gamma2", self.gamma2)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Failure::Invalid(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        for (name, v) in [("alpha-phase", self.alpha_phase), ("gamma-phase", self.gamma_phase)] {
            if !v.is_finite() {
                return Err(Failure::Invalid(format!("{name} must be finite, got {v}")));
            }
        }
        SourceParams::from_moduli(self.alpha2, self.gamma2, self.alpha_phase, self.gamma_phase).map_err(invalid)
    }

    fn doc(&self) -> ParamsDoc {
        ParamsDoc { alpha2: self.alpha2, gamma2: self.gamma2, alpha_phase: self.alpha_phase, gamma_phase: self.gamma_phase }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; relative paths are resolved against the output directory when one is set.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Directory for output files. Without it, and without --output, output goes to stdout.
    #[arg(long, env = "HECP_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

impl OutputArgs {
    fn destination(&self, default_name: &str) -> Option<PathBuf> {
        match (&self.output, &self.out_dir) {
            (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
            (Some(p), _) => Some(p.clone()),
            (None, Some(dir)) => Some(dir.join(default_name)),
            (None, None) => None,
        }
    }

    fn use_stdout(&mut self) {
        self.output = None;
        self.out_dir = None;
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Tolerance for the consistency checks.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Also report the success probability after this many rounds with recycling.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Evolve the protocol input through a circuit file instead of running the protocol.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Search for a detector relabeling that maps the table onto the published one.
    #[arg(long)]
    pub compare_paper: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = Protocol::Bell)]
    pub protocol: Protocol,
    /// Grid spacing on both axes; must divide 0.5.
    #[arg(long, default_value_t = Grid::DEFAULT_STEP)]
    pub step: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// What a command produced: text for the destination, notes for stderr, and
/// an optional failure raised after the text was rendered.
struct Rendered {
    text: String,
    notes: Vec<String>,
    failure: Option<Failure>,
}

impl Rendered {
    fn ok(text: String) -> Self {
        Rendered { text, notes: Vec::new(), failure: None }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("documents serialise");
    s.push('\n');
    s
}

fn pretty_patterns(kind: ProtocolKind, rows: &[PatternRow]) -> String {
    let ghz = kind == ProtocolKind::Ghz;
    let width = rows.iter().map(|r| r.pattern.len()).max().unwrap_or(0).max(7);
    let mut s = String::new();
    let charlie_head = if ghz { "charlie   " } else { "" };
    writeln!(s, "{:<width$}  {charlie_head}interval  class    reference  feedforward  probability", "pattern").unwrap();
    for r in rows {
        let charlie = if ghz { format!("{:<10}", r.charlie.as_deref().unwrap_or("")) } else { String::new() };
        writeln!(
            s,
            "{:<width$}  {charlie}{:<8}  {:<7}  {:<9}  {:<11}  {}",
            r.pattern,
            r.interval,
            r.class,
            r.reference,
            r.feedforward,
            short(r.probability)
        )
        .unwrap();
    }
    s
}

fn prob_report(run: &RunReport) -> ProbReport {
    let mut r = analytic_probs(&run.params);
    let sim = Simulated { success: run.success(), recycle: run.recycle(), fail: run.fail() };
    r.max_abs_deviation = (sim.success - r.p1)
        .abs()
        .max((sim.recycle - r.recycle_prob).abs())
        .max((sim.fail - (1.0 - r.p1 - r.recycle_prob)).abs());
    r.simulated = Some(sim);
    r
}

fn run_checks(run: &RunReport, report: &ProbReport, tol: f64) -> Vec<Check> {
    let sim = report.simulated.expect("simulated");
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| checks.push(Check { name: name.into(), passed, detail });
    let completeness = run.completeness();
    push("completeness", (completeness - 1.0).abs() <= tol, format!("total probability {completeness}"));
    push("success", (sim.success - report.p1).abs() <= tol, format!("|simulated - P1| = {:e}", (sim.success - report.p1).abs()));
    push(
        "recycle",
        (sim.recycle - report.recycle_prob).abs() <= tol,
        format!("|simulated - R| = {:e}", (sim.recycle - report.recycle_prob).abs()),
    );
    let violations = run.outcomes.iter().filter(|o| !o.class.allowed_intervals().contains(&o.interval())).count();
    push("interval law", violations == 0, format!("{violations} outcomes outside their class's intervals"));
    let worst = run.worst_corrected_fidelity();
    push(
        "heralded fidelity",
        worst >= MATCH_FIDELITY.min(1.0 - tol),
        format!("worst fidelity after feed-forward {worst}"),
    );
    let table = SignatureTable::from_outcomes(run.kind, &run.outcomes);
    push(
        "unambiguous patterns",
        table.is_ok(),
        table.map(|t| format!("{} click patterns", t.rows.len())).unwrap_or_else(|e| e.to_string()),
    );
    checks
}

fn cmd_run(a: &RunArgs) -> Result<Rendered, Failure> {
    if !(a.tolerance > 0.0 && a.tolerance.is_finite()) {
        return Err(Failure::Invalid(format!("tolerance must be positive, got {}", a.tolerance)));
    }
    let p = a.params.params()?;
    let kind: ProtocolKind = a.params.protocol.into();
    if let Some(path) = &a.circuit {
        return evolve_file(path, kind, &p, a);
    }
    let run = run_protocol(&p, kind).map_err(inconsistent)?;
    let report = prob_report(&run);
    let checks = run_checks(&run, &report, a.tolerance);
    let doc = RunDoc {
        protocol: kind.name().into(),
        params: a.params.doc(),
        probabilities: ProbDoc::new(&report),
        counts: ClassCounts::of(&run),
        multi_round_success: a.rounds.map(|n| multi_round_success(&p, n)),
        checks,
        outcomes: export::outcome_rows(kind, &run.outcomes),
    };
    let text = match a.output.format.unwrap_or(Format::Pretty) {
        Format::Json => json(&doc),
        Format::Csv => export::run_csv(&doc).map_err(invalid)?,
        Format::Pretty => pretty_run(&doc),
    };
    let failed: Vec<&str> = doc.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let failure = (!failed.is_empty()).then(|| Failure::Inconsistent(format!("checks failed: {}", failed.join(", "))));
    Ok(Rendered { text, notes: Vec::new(), failure })
}

/// Twelve decimals with trailing zeros dropped, for human-readable output.
fn short(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').map_or_else(|| s.to_string(), |t| format!("{t}.0"))
}

fn pretty_run(doc: &RunDoc) -> String {
    let p = &doc.probabilities;
    let mut s = String::new();
    writeln!(s, "protocol        {}", doc.protocol).unwrap();
    writeln!(
        s,
        "parameters      |alpha|^2={} |gamma|^2={} arg(alpha)={} arg(gamma)={}",
        doc.params.alpha2, doc.params.gamma2, doc.params.alpha_phase, doc.params.gamma_phase
    )
    .unwrap();
    writeln!(s).unwrap();
    writeln!(s, "                closed form             simulated").unwrap();
    writeln!(s, "success         {:<22}  {}", short(p.p1), short(p.sim_success)).unwrap();
    writeln!(s, "recycle         {:<22}  {}", short(p.recycle_prob), short(p.sim_recycle)).unwrap();
    writeln!(s, "fail            {:<22}  {}", short(1.0 - p.p1 - p.recycle_prob), short(p.sim_fail)).unwrap();
    writeln!(s, "max deviation   {:e}", p.max_abs_deviation).unwrap();
    writeln!(s, "P2 (one recycling round)  {}", short(p.p2)).unwrap();
    if let Some(m) = doc.multi_round_success {
        writeln!(s, "multi-round success       {}", short(m)).unwrap();
    }
    writeln!(s).unwrap();
    writeln!(s, "outcomes        success {}  recycle {}  fail {}", doc.counts.success, doc.counts.recycle, doc.counts.fail).unwrap();
    writeln!(s).unwrap();
    for c in &doc.checks {
        writeln!(s, "{} {:<20} {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail).unwrap();
    }
    s
}

fn evolve_file(path: &Path, kind: ProtocolKind, p: &SourceParams, a: &RunArgs) -> Result<Rendered, Failure> {
    let source = std::fs::read_to_string(path)?;
    let circuit = circuit_text::parse(&source).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let input = kind.input(p);
    let out = circuit.apply(&input).map_err(invalid)?;
    let (n_in, n_out) = (input.norm_sqr(), out.norm_sqr());
    let mut terms: Vec<(String, f64, f64)> = out.terms().map(|(m, c)| (m.to_string(), c.re, c.im)).collect();
    terms.sort_by(|x, y| x.0.cmp(&y.0));
    let text = match a.output.format.unwrap_or(Format::Pretty) {
        Format::Json => json(&serde_json::json!({
            "protocol": kind.name(),
            "elements": circuit.len(),
            "norm_in": n_in,
            "norm_out": n_out,
            "terms": terms.iter().map(|(m, re, im)| serde_json::json!({"monomial": m, "re": re, "im": im})).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["monomial", "re", "im"]).map_err(invalid)?;
            for (m, re, im) in &terms {
                w.write_record([m.clone(), re.to_string(), im.to_string()]).map_err(invalid)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| invalid(e.into_error()))?).expect("csv output is UTF-8")
        }
        Format::Pretty => {
            let mut s = format!("{} elements, norm {} -> {}, {} terms\n", circuit.len(), short(n_in), short(n_out), terms.len());
            for (m, re, im) in &terms {
                writeln!(s, "{re:>+.12} {im:>+.12}i  {m}").unwrap();
            }
            s
        }
    };
    let failure = ((n_out - n_in).abs() > a.tolerance).then(|| inconsistent(format!("norm changed from {n_in} to {n_out}")));
    Ok(Rendered { text, notes: Vec::new(), failure })
}

fn cmd_table(a: &TableArgs) -> Result<Rendered, Failure> {
    let p = a.params.params()?;
    let kind: ProtocolKind = a.params.protocol.into();
    let table = hecp_core::detection::derive_signature_table(&p, kind).map_err(inconsistent)?;
    let rows = export::table_rows(&table);
    let comparison = a.compare_paper.then(|| {
        let r = find_relabeling(&table);
        (Comparison::new(r.as_ref()), r)
    });
    let status = comparison.as_ref().map(|(_, r)| match r {
        Some(r) => format!("bijection found: {r}"),
        None => "no bijection found".to_string(),
    });
    let format = a.output.format.unwrap_or(Format::Pretty);
    let mut notes = Vec::new();
    let text = match format {
        Format::Json => json(&TableDoc { protocol: kind.name().into(), rows, comparison: comparison.as_ref().map(|c| c.0.clone()) }),
        Format::Csv => {
            notes.extend(status.clone());
            export::pattern_csv(kind, &rows).map_err(invalid)?
        }
        Format::Pretty => {
            let mut s = pretty_patterns(kind, &rows);
            writeln!(s).unwrap();
            let total = |c: Class| table.total(c);
            writeln!(
                s,
                "{} click patterns, P(success)={} P(recycle)={} P(fail)={}",
                table.rows.len(),
                short(total(Class::Success)),
                short(total(Class::Recycle)),
                short(total(Class::Fail))
            )
            .unwrap();
            if let Some(st) = &status {
                writeln!(s, "{st}").unwrap();
            }
            s
        }
    };
    let failure = match &comparison {
        Some((c, _)) if !c.bijection_found => Some(inconsistent("derived table does not match the published table")),
        _ => None,
    };
    Ok(Rendered { text, notes, failure })
}

fn cmd_sweep(a: &SweepArgs) -> Result<Rendered, Failure> {
    let grid = Grid::with_step(a.step).map_err(invalid)?;
    let kind: ProtocolKind = a.protocol.into();
    let rows: Vec<SweepRecord> = sweep(&grid, kind).map_err(inconsistent)?.iter().map(SweepRecord::from).collect();
    let text = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => export::sweep_csv(&rows).map_err(invalid)?,
        Format::Json => json(&SweepDoc { protocol: kind.name().into(), rows }),
        Format::Pretty => {
            let mut s = String::from("alpha2  gamma2  p1                      p2                      max_dev\n");
            for r in &rows {
                writeln!(s, "{:<6}  {:<6}  {:<22}  {:<22}  {:e}", r.alpha2, r.gamma2, short(r.p1), short(r.p2), r.max_dev).unwrap();
            }
            s
        }
    };
    Ok(Rendered::ok(text))
}

fn cmd_verify() -> Rendered {
    let results = verify::run_all();
    let mut text = String::new();
    for c in &results {
        writeln!(text, "{c}").unwrap();
    }
    let failed: Vec<String> = results.iter().filter(|c| !c.passed).map(|c| c.id.to_string()).collect();
    let failure = (!failed.is_empty()).then(|| inconsistent(format!("criteria failed: {}", failed.join(", "))));
    Rendered { text, notes: Vec::new(), failure }
}

fn default_name(cmd: &str, protocol: Protocol, format: Format) -> String {
    format!("{cmd}-{}.{}", ProtocolKind::from(protocol).name(), format.extension())
}

impl Command {
    fn output_args(&mut self) -> Option<&mut OutputArgs> {
        match self {
            Command::Run(a) => Some(&mut a.output),
            Command::Table(a) => Some(&mut a.output),
            Command::Sweep(a) => Some(&mut a.output),
            Command::Verify => None,
        }
    }

    fn destination(&self) -> Option<PathBuf> {
        match self {
            Command::Run(a) => {
                a.output.destination(&default_name("run", a.params.protocol, a.output.format.unwrap_or(Format::Pretty)))
            }
            Command::Table(a) => {
                a.output.destination(&default_name("table", a.params.protocol, a.output.format.unwrap_or(Format::Pretty)))
            }
            Command::Sweep(a) => a.output.destination(&default_name("sweep", a.protocol, a.output.format.unwrap_or(Format::Csv))),
            Command::Verify => None,
        }
    }

    fn render(&self) -> Result<Rendered, Failure> {
        match self {
            Command::Run(a) => cmd_run(a),
            Command::Table(a) => cmd_table(a),
            Command::Sweep(a) => cmd_sweep(a),
            Command::Verify => Ok(cmd_verify()),
        }
    }
}

/// Runs a parsed command, writing to `out` or to the chosen file.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = cli.command.render().and_then(|r| {
        match cli.command.destination() {
            Some(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(&path, &r.text)?;
                let _ = writeln!(err, "wrote {}", path.display());
            }
            None => out.write_all(r.text.as_bytes())?,
        }
        for n in &r.notes {
            let _ = writeln!(err, "{n}");
        }
        r.failure.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {f}");
            f.exit_code()
        }
    }
}

/// Parses `args` (without the program name) and returns the bytes the
/// command would print, ignoring any configured output file.
pub fn render(args: &[&str]) -> anyhow::Result<Vec<u8>> {
    let mut cli = Cli::try_parse_from(std::iter::once("hecp").chain(args.iter().copied()))?;
    if let Some(o) = cli.command.output_args() {
        o.use_stdout();
    }
    let r = cli.command.render()?;
    Ok(r.text.into_bytes())
}

/// Entry point behind the binary.
pub fn main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, out, err),
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            } else {
                let _ = err.write_all(text.as_bytes());
                EXIT_INVALID
            }
        }
    }
}
