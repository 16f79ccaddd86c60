//! Passive optical elements as unitary mode maps, and circuits built from them.
//!
//! Elements act identically at every time bin, so they are lowered to a
//! [`ModeMap`] over an explicit window `0..=max_tbin` chosen by the caller.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{Mode, ModeMap, PathLabel, Pol, State, UnitarityReport};

const POLS: [Pol; 2] = [Pol::H, Pol::V];

/// Half-wave plate orientations used by the protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HwpAngle {
    /// `diag(1, −1)`: sign flip of V.
    Deg0,
    /// Polarisation Hadamard.
    Deg22_5,
    /// H ↔ V.
    Deg45,
}

impl HwpAngle {
    pub fn degrees(self) -> f64 {
        match self {
            HwpAngle::Deg0 => 0.0,
            HwpAngle::Deg22_5 => 22.5,
            HwpAngle::Deg45 => 45.0,
        }
    }

    pub fn from_degrees(deg: f64) -> Option<Self> {
        [HwpAngle::Deg0, HwpAngle::Deg22_5, HwpAngle::Deg45]
            .into_iter()
            .find(|a| (a.degrees() - deg).abs() < 1e-9)
    }

    /// Image of a polarisation as `[(H coeff), (V coeff)]`.
    fn column(self, pol: Pol) -> [(Pol, f64); 2] {
        let s = FRAC_1_SQRT_2;
        match (self, pol) {
            (HwpAngle::Deg0, Pol::H) => [(Pol::H, 1.0), (Pol::V, 0.0)],
            (HwpAngle::Deg0, Pol::V) => [(Pol::H, 0.0), (Pol::V, -1.0)],
            (HwpAngle::Deg22_5, Pol::H) => [(Pol::H, s), (Pol::V, s)],
            (HwpAngle::Deg22_5, Pol::V) => [(Pol::H, s), (Pol::V, -s)],
            (HwpAngle::Deg45, Pol::H) => [(Pol::H, 0.0), (Pol::V, 1.0)],
            (HwpAngle::Deg45, Pol::V) => [(Pol::H, 1.0), (Pol::V, 0.0)],
        }
    }
}

/// Optical element catalogue.
#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    /// Balanced beam splitter: `plus → (plus + minus)/√2`,
    /// `minus → (plus − minus)/√2`, independent of polarisation and time.
    BeamSplitter { plus: PathLabel, minus: PathLabel },
    /// Transmits H (`inputs[k] → outputs[k]`), reflects V
    /// (`inputs[k] → outputs[1−k]`), unit phases.
    PolarizingBeamSplitter { inputs: [PathLabel; 2], outputs: [PathLabel; 2] },
    WavePlate { path: PathLabel, angle: HwpAngle },
    /// Multiplies every mode of the path by −1.
    PhaseShift { path: PathLabel },
    /// Polarisation-dependent delay `tbin → tbin + k` with unit phase.
    /// Stands in for an unbalanced two-PBS interferometer.
    ConditionalDelay { table: BTreeMap<(PathLabel, Pol), u32> },
    PathSwap { x: PathLabel, y: PathLabel },
}

impl Element {
    pub fn bs(plus: &str, minus: &str) -> Self {
        Element::BeamSplitter { plus: plus.into(), minus: minus.into() }
    }

    pub fn pbs(in1: &str, in2: &str, out1: &str, out2: &str) -> Self {
        Element::PolarizingBeamSplitter {
            inputs: [in1.into(), in2.into()],
            outputs: [out1.into(), out2.into()],
        }
    }

    pub fn hwp(path: &str, angle: HwpAngle) -> Self {
        Element::WavePlate { path: path.into(), angle }
    }

    pub fn ps(path: &str) -> Self {
        Element::PhaseShift { path: path.into() }
    }

    pub fn swap(x: &str, y: &str) -> Self {
        Element::PathSwap { x: x.into(), y: y.into() }
    }

    pub fn delay<'a, I: IntoIterator<Item = (&'a str, Pol, u32)>>(entries: I) -> Self {
        Element::ConditionalDelay {
            table: entries.into_iter().map(|(p, pol, k)| ((PathLabel::new(p), pol), k)).collect(),
        }
    }

    /// Paths a photon must occupy for the element to act on it.
    pub fn input_paths(&self) -> Vec<PathLabel> {
        match self {
            Element::BeamSplitter { plus, minus } => vec![plus.clone(), minus.clone()],
            Element::PolarizingBeamSplitter { inputs, .. } => inputs.to_vec(),
            Element::WavePlate { path, .. } | Element::PhaseShift { path } => vec![path.clone()],
            Element::ConditionalDelay { table } => {
                let set: BTreeSet<PathLabel> = table.keys().map(|(p, _)| p.clone()).collect();
                set.into_iter().collect()
            }
            Element::PathSwap { x, y } => vec![x.clone(), y.clone()],
        }
    }

    /// Paths that may carry photons after the element.
    pub fn output_paths(&self) -> Vec<PathLabel> {
        match self {
            Element::PolarizingBeamSplitter { outputs, .. } => outputs.to_vec(),
            _ => self.input_paths(),
        }
    }

    /// Lowers the element to a mode map over time bins `0..=max_tbin`.
    pub fn mode_map(&self, max_tbin: u32) -> ModeMap {
        let one = Complex64::new(1.0, 0.0);
        let mut map = ModeMap::identity();
        for t in 0..=max_tbin {
            match self {
                Element::BeamSplitter { plus, minus } => {
                    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
                    for pol in POLS {
                        let x = Mode::new(plus, pol, t);
                        let y = Mode::new(minus, pol, t);
                        map.insert(x.clone(), vec![(x.clone(), s), (y.clone(), s)]);
                        map.insert(y.clone(), vec![(x, s), (y, -s)]);
                    }
                }
                Element::PolarizingBeamSplitter { inputs, outputs } => {
                    for (k, input) in inputs.iter().enumerate() {
                        map.insert(Mode::new(input, Pol::H, t), vec![(Mode::new(&outputs[k], Pol::H, t), one)]);
                        map.insert(Mode::new(input, Pol::V, t), vec![(Mode::new(&outputs[1 - k], Pol::V, t), one)]);
                    }
                }
                Element::WavePlate { path, angle } => {
                    for pol in POLS {
                        let image = angle
                            .column(pol)
                            .into_iter()
                            .filter(|(_, c)| *c != 0.0)
                            .map(|(p, c)| (Mode::new(path, p, t), Complex64::new(c, 0.0)))
                            .collect();
                        map.insert(Mode::new(path, pol, t), image);
                    }
                }
                Element::PhaseShift { path } => {
                    for pol in POLS {
                        let m = Mode::new(path, pol, t);
                        map.insert(m.clone(), vec![(m, -one)]);
                    }
                }
                Element::ConditionalDelay { table } => {
                    for ((path, pol), k) in table {
                        map.insert(Mode::new(path, *pol, t), vec![(Mode::new(path, *pol, t + k), one)]);
                    }
                }
                Element::PathSwap { x, y } => {
                    for pol in POLS {
                        map.insert(Mode::new(x, pol, t), vec![(Mode::new(y, pol, t), one)]);
                        map.insert(Mode::new(y, pol, t), vec![(Mode::new(x, pol, t), one)]);
                    }
                }
            }
        }
        map
    }

    /// Isometry check of the lowered map over `0..=max_tbin`.
    pub fn check_unitarity(&self, max_tbin: u32) -> UnitarityReport {
        self.mode_map(max_tbin).unitarity()
    }

    pub fn apply(&self, state: &State) -> Result<State> {
        state.apply(&self.mode_map(state.max_tbin()))
    }
}

/// Elements applied left to right.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    elements: Vec<Element>,
}

impl Circuit {
    pub fn new() -> Self {
        Circuit::default()
    }

    pub fn push(&mut self, e: Element) -> &mut Self {
        self.elements.push(e);
        self
    }

    pub fn then(mut self, other: Circuit) -> Circuit {
        self.elements.extend(other.elements);
        self
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn apply(&self, state: &State) -> Result<State> {
        self.elements.iter().try_fold(state.clone(), |s, e| e.apply(&s))
    }

    /// Like [`Circuit::apply`], but every element must touch at least one
    /// path that is already known: part of `universe` or emitted by an
    /// earlier element.
    pub fn apply_checked(&self, state: &State, universe: &BTreeSet<PathLabel>) -> Result<State> {
        self.check_paths(universe)?;
        self.apply(state)
    }

    pub fn check_paths(&self, universe: &BTreeSet<PathLabel>) -> Result<()> {
        let mut known = universe.clone();
        for e in &self.elements {
            let inputs = e.input_paths();
            if !inputs.iter().any(|p| known.contains(p)) {
                return Err(Error::UnknownPath(inputs[0].clone()));
            }
            known.extend(e.output_paths());
        }
        Ok(())
    }
}

impl FromIterator<Element> for Circuit {
    fn from_iter<I: IntoIterator<Item = Element>>(iter: I) -> Self {
        Circuit { elements: iter.into_iter().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fidelity, Monomial, UNITARY_EPS};

    fn photon(path: &str, pol: Pol, t: u32) -> State {
        State::single([Mode::new(path, pol, t)], Complex64::new(1.0, 0.0))
    }

    fn amp(s: &State, path: &str, pol: Pol, t: u32) -> Complex64 {
        s.amplitude(&Monomial::from_modes([Mode::new(path, pol, t)]))
    }

    #[test]
    fn hwp45_swaps_polarisation() {
        for t in 0..3 {
            let out = Element::hwp("b1'", HwpAngle::Deg45).apply(&photon("b1'", Pol::H, t)).unwrap();
            assert_eq!(amp(&out, "b1'", Pol::V, t), Complex64::new(1.0, 0.0));
            let out = Element::hwp("b1'", HwpAngle::Deg45).apply(&photon("b1'", Pol::V, t)).unwrap();
            assert_eq!(amp(&out, "b1'", Pol::H, t), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn hwp22_is_hadamard() {
        let out = Element::hwp("b1", HwpAngle::Deg22_5).apply(&photon("b1", Pol::H, 2)).unwrap();
        assert_eq!(out.len(), 2);
        assert!((amp(&out, "b1", Pol::H, 2).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((amp(&out, "b1", Pol::V, 2).re - FRAC_1_SQRT_2).abs() < 1e-15);
        let out = Element::hwp("b1", HwpAngle::Deg22_5).apply(&photon("b1", Pol::V, 2)).unwrap();
        assert!((amp(&out, "b1", Pol::V, 2).re + FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn hwp0_flips_sign_of_v() {
        let out = Element::hwp("b2'", HwpAngle::Deg0).apply(&photon("b2'", Pol::V, 0)).unwrap();
        assert_eq!(amp(&out, "b2'", Pol::V, 0), Complex64::new(-1.0, 0.0));
        let out = Element::hwp("b2'", HwpAngle::Deg0).apply(&photon("b2'", Pol::H, 0)).unwrap();
        assert_eq!(amp(&out, "b2'", Pol::H, 0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn phase_shift_negates_every_mode() {
        for pol in POLS {
            for t in 0..4 {
                let out = Element::ps("b2'").apply(&photon("b2'", pol, t)).unwrap();
                assert_eq!(amp(&out, "b2'", pol, t), Complex64::new(-1.0, 0.0));
            }
        }
    }

    #[test]
    fn delay_moves_only_the_selected_rail() {
        let d = Element::delay([("a1'", Pol::H, 1)]);
        let out = d.apply(&photon("a1'", Pol::H, 0)).unwrap();
        assert_eq!(amp(&out, "a1'", Pol::H, 1), Complex64::new(1.0, 0.0));
        let out = d.apply(&photon("a1'", Pol::V, 0)).unwrap();
        assert_eq!(amp(&out, "a1'", Pol::V, 0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn beam_splitter_sign_convention() {
        let bs = Element::bs("b1", "a1'");
        let out = bs.apply(&photon("a1'", Pol::V, 0)).unwrap();
        assert!((amp(&out, "b1", Pol::V, 0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((amp(&out, "a1'", Pol::V, 0).re + FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn pbs_routes_by_polarisation() {
        let pbs = Element::pbs("b1", "b2", "d1", "d2");
        for t in 0..5 {
            let out = pbs.apply(&photon("b1", Pol::H, t)).unwrap();
            assert_eq!(amp(&out, "d1", Pol::H, t), Complex64::new(1.0, 0.0));
            let out = pbs.apply(&photon("b1", Pol::V, t)).unwrap();
            assert_eq!(amp(&out, "d2", Pol::V, t), Complex64::new(1.0, 0.0));
            let out = pbs.apply(&photon("b2", Pol::V, t)).unwrap();
            assert_eq!(amp(&out, "d1", Pol::V, t), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn pbs_twenty_mode_permutation() {
        let report = Element::pbs("b1", "b2", "b1", "b2").check_unitarity(4);
        assert_eq!((report.rows, report.columns), (20, 20));
        assert!(report.is_unitary(UNITARY_EPS));
    }

    #[test]
    fn every_catalogue_element_is_unitary() {
        let catalogue = [
            Element::bs("x", "y"),
            Element::pbs("x", "y", "u", "v"),
            Element::hwp("x", HwpAngle::Deg0),
            Element::hwp("x", HwpAngle::Deg22_5),
            Element::hwp("x", HwpAngle::Deg45),
            Element::ps("x"),
            Element::delay([("x", Pol::H, 1), ("x", Pol::V, 2), ("y", Pol::V, 3)]),
            Element::swap("x", "y"),
        ];
        for e in &catalogue {
            for w in [0, 3, 8] {
                let r = e.check_unitarity(w);
                assert!(r.is_unitary(UNITARY_EPS), "{e:?}: {r:?}");
            }
        }
    }

    #[test]
    fn empty_circuit_is_identity() {
        let s = photon("a", Pol::H, 0);
        assert_eq!(Circuit::new().apply(&s).unwrap(), s);
    }

    #[test]
    fn beam_splitter_squared_is_identity() {
        let c: Circuit = [Element::bs("x", "y"), Element::bs("x", "y")].into_iter().collect();
        let out = c.apply(&photon("x", Pol::H, 0)).unwrap();
        assert_eq!(out.len(), 1);
        assert!((amp(&out, "x", Pol::H, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn swap_equals_bs_ps_bs() {
        let composed: Circuit = [Element::bs("x", "y"), Element::ps("y"), Element::bs("x", "y")].into_iter().collect();
        let s = State::from_terms([
            (Monomial::from_modes([Mode::new("x", Pol::H, 0)]), Complex64::new(0.3, 0.4)),
            (Monomial::from_modes([Mode::new("y", Pol::V, 1)]), Complex64::new(-0.5, 0.1)),
            (Monomial::from_modes([Mode::new("y", Pol::H, 0)]), Complex64::new(0.2, -0.6)),
        ])
        .unwrap();
        let a = composed.apply(&s).unwrap();
        let b = Element::swap("x", "y").apply(&s).unwrap();
        assert!((fidelity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_path_rejected() {
        let universe: BTreeSet<PathLabel> = [PathLabel::new("a")].into_iter().collect();
        let c: Circuit = [Element::ps("zz")].into_iter().collect();
        assert_eq!(
            c.apply_checked(&photon("a", Pol::H, 0), &universe),
            Err(Error::UnknownPath(PathLabel::new("zz")))
        );
        let ok: Circuit = [Element::pbs("a", "spare", "d1", "d2"), Element::ps("d1")].into_iter().collect();
        assert!(ok.apply_checked(&photon("a", Pol::H, 0), &universe).is_ok());
    }
}
