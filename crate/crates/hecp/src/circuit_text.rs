//! Line-oriented circuit files.
//!
//! ```text
//! # comment
//! BS a1' b1
//! PBS b1 u3 -> d5 d6
//! HWP b1 22.5
//! PS b2'
//! SWAP b1' b2'
//! DELAY a1' H 1
//! ```
//!
//! Keywords, path names and polarisations are case-insensitive; path names
//! are stored lower-case. One `DELAY` line is one element; several rails
//! delayed by the same element are separated by `;`, as in
//! `DELAY a1' H 1; a1' V 2`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hecp_core::fock::{PathLabel, Pol};
use hecp_core::optics::{Circuit, Element, HwpAngle};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, message: message.into() }
}

fn parse_pol(line: usize, s: &str) -> Result<Pol, ParseError> {
    match s.to_ascii_uppercase().as_str() {
        "H" => Ok(Pol::H),
        "V" => Ok(Pol::V),
        _ => Err(err(line, format!("polarisation must be H or V, got {s:?}"))),
    }
}

fn expect_args<'a>(line: usize, kw: &str, args: &'a [String], n: usize) -> Result<&'a [String], ParseError> {
    if args.len() == n {
        Ok(args)
    } else {
        Err(err(line, format!("{kw} takes {n} arguments, got {}", args.len())))
    }
}

fn distinct(line: usize, a: &str, b: &str) -> Result<(), ParseError> {
    if a == b {
        return Err(err(line, format!("path {a} used twice")));
    }
    Ok(())
}

fn parse_delay(line: usize, rest: &str) -> Result<Element, ParseError> {
    let mut table: BTreeMap<(String, Pol), u32> = BTreeMap::new();
    for entry in rest.split(';') {
        let args: Vec<String> = entry.split_whitespace().map(str::to_lowercase).collect();
        let a = expect_args(line, "DELAY", &args, 3)?;
        let pol = parse_pol(line, &a[1])?;
        let k: u32 = a[2].parse().map_err(|_| err(line, format!("delay must be a non-negative integer, got {:?}", a[2])))?;
        if table.insert((a[0].clone(), pol), k).is_some() {
            return Err(err(line, format!("rail {} {pol} delayed twice", a[0])));
        }
    }
    Ok(Element::delay(table.iter().map(|((p, pol), k)| (p.as_str(), *pol, *k))))
}

pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let mut elements: Vec<Element> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (kw, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
        let kw = kw.to_ascii_uppercase();
        if kw == "DELAY" {
            elements.push(parse_delay(line, rest)?);
            continue;
        }
        let args: Vec<String> = rest.split_whitespace().map(str::to_lowercase).collect();
        let element = match kw.as_str() {
            "BS" => {
                let a = expect_args(line, &kw, &args, 2)?;
                distinct(line, &a[0], &a[1])?;
                Element::bs(&a[0], &a[1])
            }
            "PBS" => {
                let a = expect_args(line, &kw, &args, 5)?;
                if a[2] != "->" {
                    return Err(err(line, "expected `PBS in1 in2 -> out1 out2`"));
                }
                distinct(line, &a[0], &a[1])?;
                distinct(line, &a[3], &a[4])?;
                Element::pbs(&a[0], &a[1], &a[3], &a[4])
            }
            "HWP" => {
                let a = expect_args(line, &kw, &args, 2)?;
                let deg: f64 = a[1].parse().map_err(|_| err(line, format!("bad angle {:?}", a[1])))?;
                let angle = HwpAngle::from_degrees(deg).ok_or_else(|| err(line, format!("unsupported wave-plate angle {deg}")))?;
                Element::hwp(&a[0], angle)
            }
            "PS" => Element::ps(&expect_args(line, &kw, &args, 1)?[0]),
            "SWAP" => {
                let a = expect_args(line, &kw, &args, 2)?;
                distinct(line, &a[0], &a[1])?;
                Element::swap(&a[0], &a[1])
            }
            other => return Err(err(line, format!("unknown element {other:?}"))),
        };
        elements.push(element);
    }
    Ok(elements.into_iter().collect())
}

fn angle(a: HwpAngle) -> &'static str {
    match a {
        HwpAngle::Deg0 => "0",
        HwpAngle::Deg22_5 => "22.5",
        HwpAngle::Deg45 => "45",
    }
}

fn name(p: &PathLabel) -> &str {
    p.as_str()
}

pub fn print(circuit: &Circuit) -> String {
    let mut out = String::new();
    for e in circuit.elements() {
        match e {
            Element::BeamSplitter { plus, minus } => writeln!(out, "BS {} {}", name(plus), name(minus)),
            Element::PolarizingBeamSplitter { inputs, outputs } => writeln!(
                out,
                "PBS {} {} -> {} {}",
                name(&inputs[0]),
                name(&inputs[1]),
                name(&outputs[0]),
                name(&outputs[1])
            ),
            Element::WavePlate { path, angle: a } => writeln!(out, "HWP {} {}", name(path), angle(*a)),
            Element::PhaseShift { path } => writeln!(out, "PS {}", name(path)),
            Element::PathSwap { x, y } => writeln!(out, "SWAP {} {}", name(x), name(y)),
            Element::ConditionalDelay { table } => {
                let entries: Vec<String> = table.iter().map(|((p, pol), k)| format!("{} {pol} {k}", name(p))).collect();
                writeln!(out, "DELAY {}", entries.join("; "))
            }
        }
        .expect("writing to a String");
    }
    out
}
