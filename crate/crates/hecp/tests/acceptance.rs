//! Acceptance criteria 1 to 10, one line each, with wall-clock budgets.
//! Runs without the libtest harness so the lines always reach stdout.

use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use hecp::verify::{self, Criterion, BUDGETS, DETERMINISM_COMMANDS};

fn hecp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hecp"))
        .args(args)
        .env_remove("HECP_OUT_DIR")
        .output()
        .expect("spawn hecp")
}

/// Criterion 10 through the real binary: `verify` and every run in the
/// determinism list, each invoked twice.
fn binary_determinism(first_pass: &[Criterion]) -> Criterion {
    let mut problems = Vec::new();
    let (a, b) = (hecp(&["verify"]), hecp(&["verify"]));
    if a.stdout != b.stdout || a.status.code() != Some(0) || b.status.code() != Some(0) {
        problems.push(format!("verify: exit {:?}/{:?}, identical {}", a.status.code(), b.status.code(), a.stdout == b.stdout));
    }
    let in_process: String = first_pass.iter().map(|c| format!("{c}\n")).collect();
    if !String::from_utf8_lossy(&a.stdout).starts_with(&in_process) {
        problems.push("verify output disagrees with the in-process criteria".into());
    }
    for args in DETERMINISM_COMMANDS {
        let (x, y) = (hecp(args), hecp(args));
        if x.stdout != y.stdout || x.stdout.is_empty() {
            problems.push(format!("`hecp {}` not byte-identical", args.join(" ")));
        }
    }
    let inner = verify::determinism(first_pass);
    if !inner.passed {
        problems.push(inner.detail);
    }
    Criterion {
        id: 10,
        title: verify::TITLES[9],
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("verify and {} commands byte-identical across two binary invocations", DETERMINISM_COMMANDS.len())
        } else {
            problems.join("; ")
        },
    }
}

fn main() -> ExitCode {
    let mut results: Vec<(Criterion, Duration)> = Vec::new();
    for id in 1..=9u8 {
        let t = Instant::now();
        let c = verify::check(id);
        results.push((c, t.elapsed()));
    }
    let first: Vec<Criterion> = results.iter().map(|(c, _)| c.clone()).collect();
    let t = Instant::now();
    let det = binary_determinism(&first);
    results.push((det, t.elapsed()));

    let mut all = true;
    for (c, took) in &results {
        let budget = BUDGETS[usize::from(c.id) - 1];
        let in_time = *took <= budget;
        let ok = c.passed && in_time;
        all &= ok;
        println!(
            "acceptance {:>2} {} {} [{:.3} s, budget {} s]: {}",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.title,
            took.as_secs_f64(),
            budget.as_secs(),
            if in_time { c.detail.clone() } else { format!("over budget; {}", c.detail) }
        );
    }
    println!("acceptance: {}", if all { "all criteria passed" } else { "FAILED" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
