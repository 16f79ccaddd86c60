//! Time-tagged photodetection, outcome classification and signature tables.
//!
//! Detectors are ideal but not number resolving. Each party only sees click
//! times relative to its own first click, so Fock patterns that differ by a
//! common shift inside one clock domain are the same outcome and their kept
//! amplitudes add coherently. Alice and Bob share a clock; Charlie keeps a separate one.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{fidelity, Mode, Monomial, PathLabel, Pol, State};
use crate::protocol::{feed_forward, reference_state, FeedForward, ProtocolKind, ReferenceFamily, Sign, SourceParams};

/// Minimum fidelity for a collapsed state to count as a reference match.
pub const MATCH_FIDELITY: f64 = 1.0 - 1e-9;
/// Tolerance on probability sums.
pub const PROB_EPS: f64 = 1e-9;
/// Fidelities closer than this are ties; the earlier reference wins.
const TIE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Alice,
    Bob,
    Charlie,
}

impl Side {
    /// Alice and Bob compare their clicks on one clock.
    pub fn clock_domain(self) -> u8 {
        match self {
            Side::Alice | Side::Bob => 0,
            Side::Charlie => 1,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Alice => "alice",
            Side::Bob => "bob",
            Side::Charlie => "charlie",
        })
    }
}

/// A detector; ordered by its position in the assignment.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Detector {
    index: u16,
    name: Arc<str>,
    side: Side,
}

impl Detector {
    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn side(&self) -> Side {
        self.side
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Which detector watches each (path, polarisation) rail.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorAssignment {
    rails: BTreeMap<(PathLabel, Pol), Detector>,
    detectors: Vec<Detector>,
    expected_photons: usize,
}

impl DetectorAssignment {
    /// Empty assignment; every measured term must put `expected_photons` on the rails.
    pub fn new(expected_photons: usize) -> Self {
        DetectorAssignment { rails: BTreeMap::new(), detectors: Vec::new(), expected_photons }
    }

    pub fn assign(&mut self, path: &str, pol: Pol, name: &str, side: Side) -> Result<&mut Self> {
        let key = (PathLabel::new(path), pol);
        if self.rails.contains_key(&key) || self.detectors.iter().any(|d| d.name() == name) {
            return Err(Error::DuplicateDetector(name.to_string()));
        }
        let det = Detector { index: self.detectors.len() as u16, name: Arc::from(name), side };
        self.detectors.push(det.clone());
        self.rails.insert(key, det);
        Ok(self)
    }

    /// D1..D4 on Alice's rails a1′H, a1′V, a2′H, a2′V and D5..D8 on Bob's b1H, b1V, b2H, b2V.
    pub fn bell() -> Self {
        let mut d = DetectorAssignment::new(2);
        d.assign_bell_rails();
        d
    }

    /// Bell detectors plus Charlie's DH1, DV1, DH2, DV2 on c1′ and c2′.
    pub fn ghz() -> Self {
        let mut d = DetectorAssignment::new(3);
        d.assign_bell_rails();
        for (path, pol, name) in [("dh1", Pol::H, "DH1"), ("dv1", Pol::V, "DV1"), ("dh2", Pol::H, "DH2"), ("dv2", Pol::V, "DV2")] {
            d.assign(path, pol, name, Side::Charlie).expect("fixed layout");
        }
        d
    }

    fn assign_bell_rails(&mut self) {
        let layout = [
            ("d1", Pol::H, "D1", Side::Alice),
            ("d2", Pol::V, "D2", Side::Alice),
            ("d3", Pol::H, "D3", Side::Alice),
            ("d4", Pol::V, "D4", Side::Alice),
            ("d5", Pol::H, "D5", Side::Bob),
            ("d6", Pol::V, "D6", Side::Bob),
            ("d7", Pol::H, "D7", Side::Bob),
            ("d8", Pol::V, "D8", Side::Bob),
        ];
        for (path, pol, name, side) in layout {
            self.assign(path, pol, name, side).expect("fixed layout");
        }
    }

    pub fn for_protocol(kind: ProtocolKind) -> Self {
        match kind {
            ProtocolKind::Bell => DetectorAssignment::bell(),
            ProtocolKind::Ghz => DetectorAssignment::ghz(),
        }
    }

    pub fn detectors(&self) -> &[Detector] {
        &self.detectors
    }

    pub fn detector(&self, name: &str) -> Option<&Detector> {
        self.detectors.iter().find(|d| d.name() == name)
    }

    pub fn detector_for(&self, mode: &Mode) -> Option<&Detector> {
        self.rails.get(&(mode.path.clone(), mode.pol))
    }

    pub fn rails(&self) -> impl Iterator<Item = (&(PathLabel, Pol), &Detector)> {
        self.rails.iter()
    }

    /// Paths that end on a detector; photons there are absorbed.
    pub fn measured_paths(&self) -> BTreeSet<PathLabel> {
        self.rails.keys().map(|(p, _)| p.clone()).collect()
    }

    pub fn expected_photons(&self) -> usize {
        self.expected_photons
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Click {
    pub detector: Detector,
    pub tbin: u32,
}

impl fmt::Display for Click {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.detector, self.tbin)
    }
}

/// Set of (detector, relative time bin) clicks.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClickRecord {
    clicks: BTreeSet<Click>,
}

impl ClickRecord {
    /// Several photons in one (detector, tbin) give a single click.
    pub fn from_pattern(pattern: &Monomial, d: &DetectorAssignment) -> Result<Self> {
        let mut clicks = BTreeSet::new();
        for (mode, _) in pattern.occupations() {
            let detector = d.detector_for(mode).ok_or_else(|| Error::StrayPhoton(mode.clone()))?.clone();
            clicks.insert(Click { detector, tbin: mode.tbin });
        }
        Ok(ClickRecord { clicks })
    }

    pub fn from_clicks<I: IntoIterator<Item = Click>>(clicks: I) -> Self {
        ClickRecord { clicks: clicks.into_iter().collect() }
    }

    pub fn clicks(&self) -> impl Iterator<Item = &Click> {
        self.clicks.iter()
    }

    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }

    /// Latest Alice/Bob click relative to the earliest one.
    pub fn interval(&self) -> u32 {
        let times = self.clicks.iter().filter(|c| c.detector.side.clock_domain() == 0).map(|c| c.tbin);
        let (lo, hi) = times.fold((u32::MAX, 0), |(lo, hi), t| (lo.min(t), hi.max(t)));
        hi.saturating_sub(lo)
    }

    /// Clicks of one side only.
    pub fn restricted<F: Fn(Side) -> bool>(&self, keep: F) -> ClickRecord {
        ClickRecord { clicks: self.clicks.iter().filter(|c| keep(c.detector.side)).cloned().collect() }
    }

    /// (detector name, tbin) pairs, convenient for comparing against tabulated data.
    pub fn named(&self) -> BTreeSet<(String, u32)> {
        self.clicks.iter().map(|c| (c.detector.name().to_string(), c.tbin)).collect()
    }
}

impl fmt::Display for ClickRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clicks.is_empty() {
            return f.write_str("-");
        }
        for (i, c) in self.clicks.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A Fock outcome on the detector rails before classification.
#[derive(Clone, Debug, PartialEq)]
pub struct Measured {
    /// Detected photons with times relative to each clock domain's first click.
    pub pattern: Monomial,
    pub record: ClickRecord,
    pub probability: f64,
    /// Normalised state of the photons that were not detected.
    pub collapsed: State,
}

/// Projects `s` onto every distinct click-time pattern on the monitored rails.
pub fn measure(s: &State, d: &DetectorAssignment) -> Result<Vec<Measured>> {
    let total = s.norm_sqr();
    if total <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let measured = d.measured_paths();
    let mut branches: BTreeMap<Monomial, State> = BTreeMap::new();
    for (mono, amp) in s.terms() {
        let (detected, kept) = mono.partition(|m| measured.contains(&m.path));
        let found = detected.photon_count();
        if found == 0 {
            return Err(Error::NothingDetected);
        }
        if found != d.expected_photons {
            return Err(Error::DetectedCountMismatch { expected: d.expected_photons, found });
        }
        let mut earliest = [u32::MAX; 2];
        for (mode, _) in detected.occupations() {
            let det = d.detector_for(mode).ok_or_else(|| Error::StrayPhoton(mode.clone()))?;
            let dom = det.side.clock_domain() as usize;
            earliest[dom] = earliest[dom].min(mode.tbin);
        }
        let relative = detected.map_modes(|m| {
            let dom = d.detector_for(m).map_or(0, |det| det.side.clock_domain() as usize);
            m.with_tbin(m.tbin - earliest[dom])
        });
        let weight = Complex64::new(libm::sqrt(detected.bosonic_factor()), 0.0);
        branches.entry(relative).or_default().accumulate(kept, amp * weight);
    }
    let mut out = Vec::with_capacity(branches.len());
    for (pattern, mut kept) in branches {
        kept.prune();
        if kept.is_empty() {
            continue;
        }
        let probability = kept.norm_sqr() / total;
        let record = ClickRecord::from_pattern(&pattern, d)?;
        out.push(Measured { pattern, record, probability, collapsed: kept.normalize()? });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Class {
    Success,
    Recycle,
    Fail,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::Success, Class::Recycle, Class::Fail];

    pub fn name(self) -> &'static str {
        match self {
            Class::Success => "success",
            Class::Recycle => "recycle",
            Class::Fail => "fail",
        }
    }

    /// Alice/Bob click intervals this class may show.
    pub fn allowed_intervals(self) -> &'static [u32] {
        match self {
            Class::Success => &[0, 2],
            Class::Recycle => &[0],
            Class::Fail => &[1, 3],
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The eight candidate states an outcome is matched against.
#[derive(Clone, Debug)]
pub struct References {
    kind: ProtocolKind,
    entries: Vec<(ReferenceFamily, Class, State)>,
}

impl References {
    pub fn new(kind: ProtocolKind, p: &SourceParams) -> Result<Self> {
        let recycled = p.recycled();
        let (target, recyclable) = kind.families();
        let mut entries = Vec::with_capacity(8);
        for (family, class) in [(target, Class::Success), (recyclable, Class::Recycle)] {
            for ps in Sign::BOTH {
                for ss in Sign::BOTH {
                    let r = family(ps, ss);
                    entries.push((r, class, reference_state(r, Some(&recycled))?));
                }
            }
        }
        Ok(References { kind, entries })
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn entries(&self) -> impl Iterator<Item = (ReferenceFamily, Class, &State)> {
        self.entries.iter().map(|(r, c, s)| (*r, *c, s))
    }

    /// The `++` member that feed-forward should reach for this class.
    pub fn corrected_target(&self, class: Class) -> Option<&State> {
        self.entries
            .iter()
            .find(|(r, c, _)| *c == class && r.signs() == Some((Sign::Plus, Sign::Plus)))
            .map(|(_, _, s)| s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub class: Class,
    pub reference: Option<ReferenceFamily>,
    pub feedforward: Option<FeedForward>,
    /// Best fidelity against any reference.
    pub fidelity: f64,
    /// Fidelity with the `++` target after feed-forward, for heralded outcomes.
    pub corrected_fidelity: Option<f64>,
}

/// Fidelity decides the class; the click interval must agree with it.
pub fn classify(m: &Measured, refs: &References) -> Result<Classification> {
    let mut best: Option<(ReferenceFamily, Class, f64)> = None;
    for (r, class, state) in refs.entries() {
        let f = fidelity(&m.collapsed, state)?;
        if best.is_none_or(|(_, _, b)| f > b + TIE_EPS) {
            best = Some((r, class, f));
        }
    }
    let (reference, class, f) = best.expect("reference set is never empty");
    let interval = m.record.interval();
    if f < MATCH_FIDELITY {
        if Class::Fail.allowed_intervals().contains(&interval) {
            return Ok(Classification {
                class: Class::Fail,
                reference: None,
                feedforward: None,
                fidelity: f,
                corrected_fidelity: None,
            });
        }
        return Err(Error::Unclassified { pattern: m.record.to_string(), fidelity: f, interval });
    }
    if !class.allowed_intervals().contains(&interval) {
        return Err(Error::IntervalMismatch { pattern: m.record.to_string(), reference: reference.to_string(), interval });
    }
    let ff = reference.feed_forward();
    let target = refs.corrected_target(class).expect("both families carry a ++ member");
    let corrected = fidelity(&feed_forward(&m.collapsed, ff)?, target)?;
    Ok(Classification {
        class,
        reference: Some(reference),
        feedforward: Some(ff),
        fidelity: f,
        corrected_fidelity: Some(corrected),
    })
}

/// A measured and classified outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub pattern: Monomial,
    pub record: ClickRecord,
    pub probability: f64,
    pub collapsed: State,
    pub class: Class,
    pub reference: Option<ReferenceFamily>,
    pub feedforward: Option<FeedForward>,
    pub fidelity: f64,
    pub corrected_fidelity: Option<f64>,
}

impl Outcome {
    pub fn new(m: Measured, c: Classification) -> Self {
        Outcome {
            pattern: m.pattern,
            record: m.record,
            probability: m.probability,
            collapsed: m.collapsed,
            class: c.class,
            reference: c.reference,
            feedforward: c.feedforward,
            fidelity: c.fidelity,
            corrected_fidelity: c.corrected_fidelity,
        }
    }

    pub fn interval(&self) -> u32 {
        self.record.interval()
    }
}

/// Source state pushed through the protocol's full circuit.
pub fn evolve(p: &SourceParams, kind: ProtocolKind) -> Result<State> {
    kind.circuit().apply(&kind.input(p))
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub kind: ProtocolKind,
    pub params: SourceParams,
    pub outcomes: Vec<Outcome>,
}

impl RunReport {
    pub fn total(&self, class: Class) -> f64 {
        self.outcomes.iter().filter(|o| o.class == class).map(|o| o.probability).sum()
    }

    pub fn success(&self) -> f64 {
        self.total(Class::Success)
    }

    pub fn recycle(&self) -> f64 {
        self.total(Class::Recycle)
    }

    pub fn fail(&self) -> f64 {
        self.total(Class::Fail)
    }

    pub fn completeness(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    /// Smallest post-correction fidelity over heralded outcomes (1 if none).
    pub fn worst_corrected_fidelity(&self) -> f64 {
        self.outcomes.iter().filter_map(|o| o.corrected_fidelity).fold(1.0, f64::min)
    }
}

/// Evolves, measures and classifies every outcome.
pub fn run_protocol(p: &SourceParams, kind: ProtocolKind) -> Result<RunReport> {
    let state = evolve(p, kind)?;
    let refs = References::new(kind, p)?;
    let d = DetectorAssignment::for_protocol(kind);
    let outcomes = measure(&state, &d)?
        .into_iter()
        .map(|m| classify(&m, &refs).map(|c| Outcome::new(m, c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport { kind, params: *p, outcomes })
}

/// One click pattern with everything the parties need to act on it.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureRow {
    pub record: ClickRecord,
    pub interval: u32,
    pub class: Class,
    pub reference: Option<ReferenceFamily>,
    pub feedforward: Option<FeedForward>,
    pub probability: f64,
}

impl SignatureRow {
    /// Alice and Bob's clicks.
    pub fn pattern(&self) -> ClickRecord {
        self.record.restricted(|s| s != Side::Charlie)
    }

    pub fn charlie(&self) -> ClickRecord {
        self.record.restricted(|s| s == Side::Charlie)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignatureTable {
    pub kind: ProtocolKind,
    pub rows: Vec<SignatureRow>,
}

impl SignatureTable {
    /// Groups outcomes by click record. Fock patterns that look the same to
    /// the detectors must agree on class, reference and correction.
    pub fn from_outcomes(kind: ProtocolKind, outcomes: &[Outcome]) -> Result<Self> {
        let mut rows: BTreeMap<ClickRecord, SignatureRow> = BTreeMap::new();
        for o in outcomes {
            match rows.get_mut(&o.record) {
                Some(row) => {
                    if row.class != o.class || row.reference != o.reference || row.feedforward != o.feedforward {
                        return Err(Error::AmbiguousPattern(o.record.to_string()));
                    }
                    row.probability += o.probability;
                }
                None => {
                    rows.insert(
                        o.record.clone(),
                        SignatureRow {
                            record: o.record.clone(),
                            interval: o.interval(),
                            class: o.class,
                            reference: o.reference,
                            feedforward: o.feedforward,
                            probability: o.probability,
                        },
                    );
                }
            }
        }
        Ok(SignatureTable { kind, rows: rows.into_values().collect() })
    }

    pub fn heralded(&self) -> impl Iterator<Item = &SignatureRow> {
        self.rows.iter().filter(|r| r.class != Class::Fail)
    }

    pub fn total(&self, class: Class) -> f64 {
        self.rows.iter().filter(|r| r.class == class).map(|r| r.probability).sum()
    }
}

pub fn derive_signature_table(p: &SourceParams, kind: ProtocolKind) -> Result<SignatureTable> {
    let report = run_protocol(p, kind)?;
    SignatureTable::from_outcomes(kind, &report.outcomes)
}
