//! Multi-photon bosonic states over labelled modes.
//!
//! A [`State`] is a polynomial in creation operators: every term is a
//! [`Monomial`] (a multiset of modes) with a complex amplitude. Amplitudes are
//! kept in the creation-operator convention, so the Fock normalisation
//! `Π n_i!` of a multiply occupied monomial is applied by the inner product,
//! never stored.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Amplitudes with modulus below this are dropped after every operation.
pub const PRUNE_EPS: f64 = 1e-12;
/// Tolerance for the Gram-matrix test in [`ModeMap::unitarity`].
pub const UNITARY_EPS: f64 = 1e-12;

/// Linear polarisation of a photon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub fn flipped(self) -> Pol {
        match self {
            Pol::H => Pol::V,
            Pol::V => Pol::H,
        }
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pol::H => "H",
            Pol::V => "V",
        })
    }
}

/// Opaque spatial-path identifier such as `a1`, `b2'` or `d5`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathLabel(Arc<str>);

impl PathLabel {
    pub fn new(label: &str) -> Self {
        PathLabel(Arc::from(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for PathLabel {
    fn from(label: &str) -> Self {
        PathLabel::new(label)
    }
}

impl From<&PathLabel> for PathLabel {
    fn from(label: &PathLabel) -> Self {
        label.clone()
    }
}

impl fmt::Debug for PathLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for PathLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One bosonic mode: spatial path, polarisation and time bin.
///
/// `tbin` counts units of the base delay; 0 is the undelayed arrival.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub path: PathLabel,
    pub pol: Pol,
    pub tbin: u32,
}

impl Mode {
    pub fn new(path: impl Into<PathLabel>, pol: Pol, tbin: u32) -> Self {
        Mode { path: path.into(), pol, tbin }
    }

    pub fn with_tbin(&self, tbin: u32) -> Self {
        Mode { path: self.path.clone(), pol: self.pol, tbin }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}@{}", self.path, self.pol, self.tbin)
    }
}

/// A product of creation operators, stored as sorted `(mode, multiplicity)`
/// pairs with every multiplicity at least 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    occupations: Vec<(Mode, u32)>,
}

impl Monomial {
    pub fn from_modes<I: IntoIterator<Item = Mode>>(modes: I) -> Self {
        let mut all: Vec<Mode> = modes.into_iter().collect();
        all.sort();
        let mut occupations: Vec<(Mode, u32)> = Vec::with_capacity(all.len());
        for mode in all {
            match occupations.last_mut() {
                Some((last, n)) if *last == mode => *n += 1,
                _ => occupations.push((mode, 1)),
            }
        }
        Monomial { occupations }
    }

    pub fn occupations(&self) -> &[(Mode, u32)] {
        &self.occupations
    }

    /// Every photon, repeated by multiplicity, in canonical order.
    pub fn photons(&self) -> impl Iterator<Item = &Mode> {
        self.occupations
            .iter()
            .flat_map(|(m, n)| core::iter::repeat_n(m, *n as usize))
    }

    pub fn photon_count(&self) -> usize {
        self.occupations.iter().map(|(_, n)| *n as usize).sum()
    }

    pub fn occupation(&self, mode: &Mode) -> u32 {
        self.occupations
            .binary_search_by(|(m, _)| m.cmp(mode))
            .map(|i| self.occupations[i].1)
            .unwrap_or(0)
    }

    /// `Π n_i!`, the squared norm of the bare creation monomial.
    pub fn bosonic_factor(&self) -> f64 {
        self.occupations
            .iter()
            .map(|(_, n)| (1..=*n).map(f64::from).product::<f64>())
            .product()
    }

    /// Splits into (selected, rest) by a predicate on modes.
    pub fn partition<F: Fn(&Mode) -> bool>(&self, select: F) -> (Monomial, Monomial) {
        let (a, b): (Vec<_>, Vec<_>) = self.occupations.iter().cloned().partition(|(m, _)| select(m));
        (Monomial { occupations: a }, Monomial { occupations: b })
    }

    /// Product of two monomials.
    pub fn merge(&self, other: &Monomial) -> Monomial {
        Monomial::from_modes(self.photons().chain(other.photons()).cloned())
    }

    /// Applies `f` to each occupied mode and re-canonicalises.
    pub fn map_modes<F: Fn(&Mode) -> Mode>(&self, f: F) -> Monomial {
        Monomial::from_modes(self.photons().map(f))
    }

    fn is_canonical(&self) -> bool {
        self.occupations.windows(2).all(|w| w[0].0 < w[1].0) && self.occupations.iter().all(|(_, n)| *n >= 1)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for (i, (m, n)) in self.occupations.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if *n > 1 {
                write!(f, "{m}^{n}")?;
            } else {
                write!(f, "{m}")?;
            }
        }
        f.write_str(">")
    }
}

/// Linear combination of monomials with complex amplitudes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct State {
    terms: BTreeMap<Monomial, Complex64>,
}

impl State {
    pub fn new() -> Self {
        State::default()
    }

    /// One monomial with the given amplitude.
    pub fn single<I: IntoIterator<Item = Mode>>(modes: I, amp: Complex64) -> Self {
        let mut s = State::new();
        s.accumulate(Monomial::from_modes(modes), amp);
        s.prune();
        s
    }

    /// Sums the given terms, rejecting mixtures of photon numbers.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, Complex64)>>(terms: I) -> Result<Self> {
        let mut s = State::new();
        let mut count = None;
        for (m, a) in terms {
            let n = m.photon_count();
            match count {
                None => count = Some(n),
                Some(c) if c != n => return Err(Error::MixedPhotonNumber(c, n)),
                _ => {}
            }
            s.accumulate(m, a);
        }
        s.prune();
        Ok(s)
    }

    pub(crate) fn accumulate(&mut self, m: Monomial, amp: Complex64) {
        *self.terms.entry(m).or_insert_with(Complex64::zero) += amp;
    }

    pub(crate) fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_EPS);
    }

    pub fn terms(&self) -> impl ExactSizeIterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or_else(Complex64::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Photon number shared by all terms; `None` for the empty state.
    pub fn photon_count(&self) -> Option<usize> {
        self.terms.keys().next().map(Monomial::photon_count)
    }

    pub fn paths(&self) -> BTreeSet<PathLabel> {
        self.terms
            .keys()
            .flat_map(|m| m.occupations.iter().map(|(mode, _)| mode.path.clone()))
            .collect()
    }

    pub fn modes(&self) -> BTreeSet<Mode> {
        self.terms
            .keys()
            .flat_map(|m| m.occupations.iter().map(|(mode, _)| mode.clone()))
            .collect()
    }

    pub fn max_tbin(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|m| m.occupations.iter().map(|(mode, _)| mode.tbin))
            .max()
            .unwrap_or(0)
    }

    /// `Σ |amp|² Π n_i!`.
    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(m, a)| a.norm_sqr() * m.bosonic_factor()).sum()
    }

    pub fn scaled(&self, c: Complex64) -> State {
        let mut out = State {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        };
        out.prune();
        out
    }

    pub fn add(&self, other: &State) -> State {
        let mut out = self.clone();
        for (m, a) in &other.terms {
            out.accumulate(m.clone(), *a);
        }
        out.prune();
        out
    }

    pub fn normalize(&self) -> Result<State> {
        let n = self.norm_sqr();
        if n <= 0.0 || self.is_empty() {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / libm::sqrt(n), 0.0)))
    }

    /// Tensor product of states on disjoint path sets.
    pub fn tensor(&self, other: &State) -> Result<State> {
        let mine = self.paths();
        if let Some(p) = other.paths().into_iter().find(|p| mine.contains(p)) {
            return Err(Error::OverlappingPaths(p));
        }
        let mut out = State::new();
        for (m1, a1) in &self.terms {
            for (m2, a2) in &other.terms {
                out.accumulate(m1.merge(m2), a1 * a2);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Substitutes every creation operator by its image under `map`,
    /// expands and collects like monomials.
    pub fn apply(&self, map: &ModeMap) -> Result<State> {
        let report = map.unitarity();
        if !report.is_unitary(UNITARY_EPS) {
            return Err(Error::NonUnitary {
                singular_value: report.worst_singular_value,
                deviation: report.max_deviation,
            });
        }
        let targets = map.image_modes();
        for mode in self.modes() {
            if map.get(&mode).is_none() && targets.contains(&mode) {
                return Err(Error::MapNotClosed(mode));
            }
        }

        let mut out = State::new();
        for (mono, amp) in &self.terms {
            let mut partial: Vec<(Vec<Mode>, Complex64)> = vec![(Vec::with_capacity(mono.photon_count()), *amp)];
            for photon in mono.photons() {
                partial = match map.get(photon) {
                    None => partial
                        .into_iter()
                        .map(|(mut ms, a)| {
                            ms.push(photon.clone());
                            (ms, a)
                        })
                        .collect(),
                    Some(image) => {
                        let mut next = Vec::with_capacity(partial.len() * image.len());
                        for (ms, a) in &partial {
                            for (target, c) in image {
                                let mut grown = ms.clone();
                                grown.push(target.clone());
                                next.push((grown, a * c));
                            }
                        }
                        next
                    }
                };
            }
            for (ms, a) in partial {
                out.accumulate(Monomial::from_modes(ms), a);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Re-sorts every monomial; a no-op for states built through this API.
    pub fn canonicalized(&self) -> State {
        let mut out = State::new();
        for (m, a) in &self.terms {
            out.accumulate(Monomial::from_modes(m.photons().cloned()), *a);
        }
        out.prune();
        out
    }

    pub fn is_canonical(&self) -> bool {
        self.terms.keys().all(Monomial::is_canonical) && self.terms.values().all(|a| a.norm() >= PRUNE_EPS)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "({:+.12}{:+.12}i) {}", a.re, a.im, m)?;
        }
        Ok(())
    }
}

/// `⟨s1|s2⟩` with the bosonic `Π n_i!` weight per monomial.
pub fn inner_product(s1: &State, s2: &State) -> Complex64 {
    let (small, large, conj_small) = if s1.len() <= s2.len() { (s1, s2, true) } else { (s2, s1, false) };
    let mut acc = Complex64::zero();
    for (m, a) in &small.terms {
        if let Some(b) = large.terms.get(m) {
            let w = m.bosonic_factor();
            acc += if conj_small { a.conj() * b } else { b.conj() * a } * w;
        }
    }
    acc
}

/// `|⟨s1|s2⟩|² / (‖s1‖² ‖s2‖²)`, insensitive to global phase.
pub fn fidelity(s1: &State, s2: &State) -> Result<f64> {
    let n1 = s1.norm_sqr();
    let n2 = s2.norm_sqr();
    if n1 <= 0.0 || n2 <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((inner_product(s1, s2).norm_sqr() / (n1 * n2)).min(1.0))
}

/// Linear substitution of creation operators. Modes absent from the map are
/// left untouched.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeMap {
    image: BTreeMap<Mode, Vec<(Mode, Complex64)>>,
}

impl ModeMap {
    pub fn identity() -> Self {
        ModeMap::default()
    }

    pub fn insert(&mut self, mode: Mode, image: Vec<(Mode, Complex64)>) {
        self.image.insert(mode, image);
    }

    pub fn get(&self, mode: &Mode) -> Option<&[(Mode, Complex64)]> {
        self.image.get(mode).map(Vec::as_slice)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Mode> {
        self.image.keys()
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image_modes(&self) -> BTreeSet<Mode> {
        self.image.values().flat_map(|v| v.iter().map(|(m, _)| m.clone())).collect()
    }

    /// Adjoint map; the inverse whenever `self` is unitary.
    pub fn inverse(&self) -> ModeMap {
        let mut inv: BTreeMap<Mode, Vec<(Mode, Complex64)>> = BTreeMap::new();
        for (src, image) in &self.image {
            for (dst, c) in image {
                inv.entry(dst.clone()).or_default().push((src.clone(), c.conj()));
            }
        }
        ModeMap { image: inv }
    }

    /// Matrix with one column per domain mode and one row per image mode.
    pub fn matrix(&self) -> (Vec<Mode>, Vec<Mode>, DMatrix<Complex64>) {
        let cols: Vec<Mode> = self.image.keys().cloned().collect();
        let rows: Vec<Mode> = self.image_modes().into_iter().collect();
        let mut mat = DMatrix::from_element(rows.len(), cols.len(), Complex64::zero());
        for (j, src) in cols.iter().enumerate() {
            for (dst, c) in &self.image[src] {
                let i = rows.binary_search(dst).expect("image mode collected above");
                mat[(i, j)] += c;
            }
        }
        (rows, cols, mat)
    }

    /// Orthonormality of the images of the domain modes.
    pub fn unitarity(&self) -> UnitarityReport {
        let (rows, cols, mat) = self.matrix();
        let gram = mat.adjoint() * &mat;
        let mut max_deviation = 0.0f64;
        for i in 0..cols.len() {
            for j in 0..cols.len() {
                let expected = if i == j { 1.0 } else { 0.0 };
                max_deviation = max_deviation.max((gram[(i, j)] - Complex64::new(expected, 0.0)).norm());
            }
        }
        let worst_singular_value = if max_deviation <= UNITARY_EPS || cols.is_empty() {
            1.0
        } else {
            worst_singular_value(&mat)
        };
        UnitarityReport {
            rows: rows.len(),
            columns: cols.len(),
            max_deviation,
            worst_singular_value,
        }
    }
}

fn worst_singular_value(mat: &DMatrix<Complex64>) -> f64 {
    let svals = mat.clone().singular_values();
    let mut worst = 1.0f64;
    for s in svals.iter() {
        if (s - 1.0).abs() > (worst - 1.0).abs() {
            worst = *s;
        }
    }
    // rank-deficient tall matrices drop singular values; an isometry needs one per column
    if svals.len() < mat.ncols() {
        worst = 0.0;
    }
    worst
}

/// Outcome of a unitarity (isometry) check on a [`ModeMap`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitarityReport {
    pub rows: usize,
    pub columns: usize,
    /// `max |(M†M − I)_ij|`.
    pub max_deviation: f64,
    /// Singular value farthest from 1 (exactly 1 when the check passes).
    pub worst_singular_value: f64,
}

impl UnitarityReport {
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn m(path: &str, pol: Pol, t: u32) -> Mode {
        Mode::new(path, pol, t)
    }

    /// Balanced beam splitter x → (x+y)/√2, y → (x−y)/√2 at one pol/tbin.
    fn bs(x: &str, y: &str, pol: Pol, t: u32) -> ModeMap {
        let s = c(FRAC_1_SQRT_2);
        let mut map = ModeMap::identity();
        map.insert(m(x, pol, t), vec![(m(x, pol, t), s), (m(y, pol, t), s)]);
        map.insert(m(y, pol, t), vec![(m(x, pol, t), s), (m(y, pol, t), -s)]);
        map
    }

    #[test]
    fn single_photon_through_beam_splitter() {
        let s = State::single([m("b1", Pol::H, 0)], c(1.0));
        let out = s.apply(&bs("b1", "a1'", Pol::H, 0)).unwrap();
        assert_eq!(out.len(), 2);
        let a = out.amplitude(&Monomial::from_modes([m("b1", Pol::H, 0)]));
        let b = out.amplitude(&Monomial::from_modes([m("a1'", Pol::H, 0)]));
        assert!((a - c(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((b - c(FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn hong_ou_mandel_bunching() {
        let s = State::single([m("x", Pol::H, 0), m("y", Pol::H, 0)], c(1.0));
        let mut map = ModeMap::identity();
        let h = c(FRAC_1_SQRT_2);
        map.insert(m("x", Pol::H, 0), vec![(m("u", Pol::H, 0), h), (m("v", Pol::H, 0), h)]);
        map.insert(m("y", Pol::H, 0), vec![(m("u", Pol::H, 0), h), (m("v", Pol::H, 0), -h)]);
        let out = s.apply(&map).unwrap();
        let uu = Monomial::from_modes([m("u", Pol::H, 0), m("u", Pol::H, 0)]);
        let vv = Monomial::from_modes([m("v", Pol::H, 0), m("v", Pol::H, 0)]);
        let uv = Monomial::from_modes([m("u", Pol::H, 0), m("v", Pol::H, 0)]);
        assert!((out.amplitude(&uu) - c(0.5)).norm() < 1e-15);
        assert!((out.amplitude(&vv) - c(-0.5)).norm() < 1e-15);
        assert_eq!(out.amplitude(&uv), Complex64::zero());
        assert_eq!(out.len(), 2);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_map_is_noop() {
        let s = State::from_terms([
            (Monomial::from_modes([m("a", Pol::H, 0), m("b", Pol::V, 2)]), Complex64::new(0.6, 0.1)),
            (Monomial::from_modes([m("a", Pol::V, 0), m("a", Pol::V, 0)]), Complex64::new(0.0, -0.3)),
        ])
        .unwrap();
        assert_eq!(s.apply(&ModeMap::identity()).unwrap(), s);
    }

    #[test]
    fn doubly_occupied_mode_has_norm_two() {
        let s = State::single([m("b1", Pol::H, 0), m("b1", Pol::H, 0)], c(1.0));
        assert_eq!(s.norm_sqr(), 2.0);
        let mono = s.terms().next().unwrap().0;
        assert_eq!(mono.occupations().len(), 1);
        assert_eq!(mono.occupation(&m("b1", Pol::H, 0)), 2);
    }

    #[test]
    fn fidelity_ignores_global_phase() {
        let s = State::from_terms([
            (Monomial::from_modes([m("a", Pol::H, 0)]), c(0.6)),
            (Monomial::from_modes([m("b", Pol::V, 1)]), Complex64::new(0.0, 0.8)),
        ])
        .unwrap();
        for k in 0..8 {
            let phase = Complex64::from_polar(1.0, k as f64 * 0.7);
            assert!((fidelity(&s, &s.scaled(phase)).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn orthogonal_polarizations() {
        let hh = State::single([m("a", Pol::H, 0), m("b", Pol::H, 0)], c(1.0));
        let vv = State::single([m("a", Pol::V, 0), m("b", Pol::V, 0)], c(1.0));
        assert_eq!(fidelity(&hh, &vv).unwrap(), 0.0);
    }

    #[test]
    fn fidelity_rejects_zero_state() {
        let s = State::single([m("a", Pol::H, 0)], c(1.0));
        assert_eq!(fidelity(&s, &State::new()), Err(Error::ZeroNorm));
        assert_eq!(State::new().normalize(), Err(Error::ZeroNorm));
    }

    #[test]
    fn normalize_single_amplitude() {
        let s = State::single([m("a", Pol::H, 0)], c(2.0));
        let n = s.normalize().unwrap();
        assert!((n.terms().next().unwrap().1 - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn tensor_rejects_shared_paths() {
        let s1 = State::single([m("a", Pol::H, 0)], c(1.0));
        let s2 = State::single([m("a", Pol::V, 0)], c(1.0));
        assert_eq!(s1.tensor(&s2), Err(Error::OverlappingPaths(PathLabel::new("a"))));
    }

    #[test]
    fn tensor_with_unit_single_term() {
        let s = State::from_terms([
            (Monomial::from_modes([m("a", Pol::H, 0)]), c(0.6)),
            (Monomial::from_modes([m("a", Pol::V, 0)]), c(0.8)),
        ])
        .unwrap();
        let unit = State::single([m("z", Pol::H, 0)], c(1.0));
        let t = s.tensor(&unit).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.paths().contains(&PathLabel::new("z")));
        assert!((t.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_photon_numbers_rejected() {
        let r = State::from_terms([
            (Monomial::from_modes([m("a", Pol::H, 0)]), c(1.0)),
            (Monomial::from_modes([m("a", Pol::H, 0), m("b", Pol::H, 0)]), c(1.0)),
        ]);
        assert_eq!(r, Err(Error::MixedPhotonNumber(1, 2)));
    }

    #[test]
    fn scaled_map_is_rejected_with_singular_value() {
        let mut map = ModeMap::identity();
        map.insert(m("x", Pol::H, 0), vec![(m("x", Pol::H, 0), c(0.8)), (m("y", Pol::H, 0), c(0.8))]);
        map.insert(m("y", Pol::H, 0), vec![(m("x", Pol::H, 0), c(0.8)), (m("y", Pol::H, 0), c(-0.8))]);
        let report = map.unitarity();
        assert!(!report.is_unitary(UNITARY_EPS));
        // columns have squared norm 1.28, singular values 0.8·√2
        assert!((report.worst_singular_value - 0.8 * 2f64.sqrt()).abs() < 1e-12);
        let s = State::single([m("x", Pol::H, 0)], c(1.0));
        match s.apply(&map) {
            Err(Error::NonUnitary { singular_value, .. }) => assert!((singular_value - 1.131_370_849_898_476).abs() < 1e-12),
            other => panic!("expected NonUnitary, got {other:?}"),
        }
    }

    #[test]
    fn collision_with_untouched_occupied_mode() {
        let mut shift = ModeMap::identity();
        shift.insert(m("a", Pol::H, 0), vec![(m("a", Pol::H, 1), c(1.0))]);
        let s = State::single([m("a", Pol::H, 0), m("a", Pol::H, 1)], c(1.0));
        assert_eq!(s.apply(&shift), Err(Error::MapNotClosed(m("a", Pol::H, 1))));
    }

    #[test]
    fn inverse_undoes_map() {
        let s = State::single([m("x", Pol::H, 0), m("y", Pol::H, 0)], c(1.0));
        let map = bs("x", "y", Pol::H, 0);
        let back = s.apply(&map).unwrap().apply(&map.inverse()).unwrap();
        assert!((fidelity(&back, &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn display_marks_multiplicity() {
        let s = State::single([m("b1", Pol::H, 3), m("b1", Pol::H, 3)], c(0.5));
        let text = alloc::format!("{s}");
        assert!(text.contains("b1H@3^2"), "{text}");
    }
}
