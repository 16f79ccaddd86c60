//! Source states, concentration circuits, reference targets and the
//! feed-forward corrections on photon B′.
//!
//! Path naming: photon X with spatial index k lives on path `xk`, primed
//! photons on `xk'` (so `a1`, `b2'`, `c1'`). Detector rails are `d1`..`d8`
//! for Alice and Bob and `dh1`, `dv1`, `dh2`, `dv2` for Charlie; the unused
//! input port of every terminal PBS is a `u*` path.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{Mode, Monomial, PathLabel, Pol, State};
use crate::optics::{Circuit, Element, HwpAngle};

/// Normalisation tolerance for source parameters.
pub const PARAM_EPS: f64 = 1e-12;

/// Amplitudes of a partially hyperentangled source:
/// `(α|HH…⟩ + β|VV…⟩) ⊗ (γ|…1⟩ + δ|…2⟩)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceParams {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
}

impl SourceParams {
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64, delta: Complex64) -> Result<Self> {
        let pol = alpha.norm_sqr() + beta.norm_sqr();
        if (pol - 1.0).abs() > PARAM_EPS {
            return Err(Error::UnnormalizedParams { which: "alpha|^2+|beta", norm: pol });
        }
        let spatial = gamma.norm_sqr() + delta.norm_sqr();
        if (spatial - 1.0).abs() > PARAM_EPS {
            return Err(Error::UnnormalizedParams { which: "gamma|^2+|delta", norm: spatial });
        }
        Ok(SourceParams { alpha, beta, gamma, delta })
    }

    /// Builds parameters from `|α|²`, `|γ|²` and the phases of α and γ;
    /// β and δ are taken real and non-negative.
    pub fn from_moduli(alpha2: f64, gamma2: f64, alpha_phase: f64, gamma_phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha2) {
            return Err(Error::UnnormalizedParams { which: "alpha", norm: alpha2 });
        }
        if !(0.0..=1.0).contains(&gamma2) {
            return Err(Error::UnnormalizedParams { which: "gamma", norm: gamma2 });
        }
        SourceParams::new(
            Complex64::from_polar(libm::sqrt(alpha2), alpha_phase),
            Complex64::new(libm::sqrt(1.0 - alpha2), 0.0),
            Complex64::from_polar(libm::sqrt(gamma2), gamma_phase),
            Complex64::new(libm::sqrt(1.0 - gamma2), 0.0),
        )
    }

    pub fn balanced() -> Self {
        let s = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        SourceParams { alpha: s, beta: s, gamma: s, delta: s }
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma.norm_sqr()
    }

    /// `|α|⁴ + |β|⁴`.
    pub fn pol_weight(&self) -> f64 {
        let (a, b) = (self.alpha.norm_sqr(), self.beta.norm_sqr());
        a * a + b * b
    }

    /// `|γ|⁴ + |δ|⁴`.
    pub fn spatial_weight(&self) -> f64 {
        let (g, d) = (self.gamma.norm_sqr(), self.delta.norm_sqr());
        g * g + d * d
    }

    /// Parameters of the partially entangled state left by a recycle outcome.
    pub fn recycled(&self) -> RecycledParams {
        let np = libm::sqrt(self.pol_weight());
        let ns = libm::sqrt(self.spatial_weight());
        RecycledParams(SourceParams {
            alpha: self.alpha * self.alpha / np,
            beta: self.beta * self.beta / np,
            gamma: self.gamma * self.gamma / ns,
            delta: self.delta * self.delta / ns,
        })
    }
}

/// α′ = α²/√(|α|⁴+|β|⁴) and likewise for β′, γ′, δ′.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecycledParams(pub SourceParams);

impl RecycledParams {
    pub fn params(&self) -> &SourceParams {
        &self.0
    }
}

/// Photon identity: a stem letter plus prime, mapping spatial index k to a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhotonLabel {
    pub stem: char,
    pub primed: bool,
}

impl PhotonLabel {
    pub const A: PhotonLabel = PhotonLabel { stem: 'a', primed: false };
    pub const B: PhotonLabel = PhotonLabel { stem: 'b', primed: false };
    pub const C: PhotonLabel = PhotonLabel { stem: 'c', primed: false };
    pub const A_PRIME: PhotonLabel = PhotonLabel { stem: 'a', primed: true };
    pub const B_PRIME: PhotonLabel = PhotonLabel { stem: 'b', primed: true };
    pub const C_PRIME: PhotonLabel = PhotonLabel { stem: 'c', primed: true };

    pub fn path_name(&self, k: u8) -> String {
        if self.primed {
            format!("{}{}'", self.stem, k)
        } else {
            format!("{}{}", self.stem, k)
        }
    }

    pub fn path(&self, k: u8) -> PathLabel {
        PathLabel::new(&self.path_name(k))
    }

    pub fn mode(&self, k: u8, pol: Pol) -> Mode {
        Mode::new(self.path(k), pol, 0)
    }
}

/// `Σ_{pol, k} c_pol · c_k |pol…⟩|x_k y_k …⟩` over the given photons.
fn correlated_source(pol_amps: [Complex64; 2], path_amps: [Complex64; 2], photons: &[PhotonLabel]) -> State {
    let mut terms = Vec::with_capacity(4);
    for (pol, pc) in [Pol::H, Pol::V].into_iter().zip(pol_amps) {
        for (k, kc) in [1u8, 2].into_iter().zip(path_amps) {
            let mono = Monomial::from_modes(photons.iter().map(|ph| ph.mode(k, pol)));
            terms.push((mono, pc * kc));
        }
    }
    State::from_terms(terms).expect("every term has one photon per label")
}

/// Two-photon source `(α|HH⟩+β|VV⟩) ⊗ (γ|x1 y1⟩+δ|x2 y2⟩)`.
pub fn make_bell_source(p: &SourceParams, first: PhotonLabel, second: PhotonLabel) -> State {
    correlated_source([p.alpha, p.beta], [p.gamma, p.delta], &[first, second])
}

/// Three-photon source `(α|HHH⟩+β|VVV⟩) ⊗ (γ|x1 y1 z1⟩+δ|x2 y2 z2⟩)`.
pub fn make_ghz_source(p: &SourceParams, photons: [PhotonLabel; 3]) -> State {
    correlated_source([p.alpha, p.beta], [p.gamma, p.delta], &photons)
}

/// Four-photon input: pair AB ⊗ pair A′B′.
pub fn bell_input(p: &SourceParams) -> State {
    make_bell_source(p, PhotonLabel::A, PhotonLabel::B)
        .tensor(&make_bell_source(p, PhotonLabel::A_PRIME, PhotonLabel::B_PRIME))
        .expect("unprimed and primed paths are disjoint")
}

/// Six-photon input: triple ABC ⊗ triple A′B′C′.
pub fn ghz_input(p: &SourceParams) -> State {
    use PhotonLabel as L;
    make_ghz_source(p, [L::A, L::B, L::C])
        .tensor(&make_ghz_source(p, [L::A_PRIME, L::B_PRIME, L::C_PRIME]))
        .expect("unprimed and primed paths are disjoint")
}

/// Alice's polarisation-conditional delays on photon A′.
pub const ALICE_DELAYS: [(&str, Pol, u32); 4] = [("a1'", Pol::H, 1), ("a1'", Pol::V, 2), ("a2'", Pol::V, 3), ("a2'", Pol::H, 4)];
/// Bob's polarisation-conditional delays on photon B.
pub const BOB_DELAYS: [(&str, Pol, u32); 4] = [("b2", Pol::V, 1), ("b2", Pol::H, 2), ("b1", Pol::H, 3), ("b1", Pol::V, 4)];

/// BS1 on (b1, a1′) and BS2 on (b2, a2′); `b_i` takes the `+` row.
pub fn front_end() -> Circuit {
    [Element::bs("b1", "a1'"), Element::bs("b2", "a2'")].into_iter().collect()
}

/// Polarisation and spatial bit flip of photon B′.
pub fn bprime_flip_stage() -> Circuit {
    [
        Element::hwp("b1'", HwpAngle::Deg45),
        Element::hwp("b2'", HwpAngle::Deg45),
        Element::swap("b1'", "b2'"),
    ]
    .into_iter()
    .collect()
}

pub fn delay_stage() -> Circuit {
    [Element::delay(ALICE_DELAYS), Element::delay(BOB_DELAYS)].into_iter().collect()
}

/// Spatial and polarisation Hadamards on A′ and B.
pub fn hadamard_stage() -> Circuit {
    [
        Element::bs("a1'", "a2'"),
        Element::bs("b1", "b2"),
        Element::hwp("a1'", HwpAngle::Deg22_5),
        Element::hwp("a2'", HwpAngle::Deg22_5),
        Element::hwp("b1", HwpAngle::Deg22_5),
        Element::hwp("b2", HwpAngle::Deg22_5),
    ]
    .into_iter()
    .collect()
}

/// PBSs sending each measured path to an H rail and a V rail.
pub fn readout_stage() -> Circuit {
    [
        Element::pbs("a1'", "u1", "d1", "d2"),
        Element::pbs("a2'", "u2", "d3", "d4"),
        Element::pbs("b1", "u3", "d5", "d6"),
        Element::pbs("b2", "u4", "d7", "d8"),
    ]
    .into_iter()
    .collect()
}

/// Charlie's diagonal-basis measurement of C′ in both DOFs.
pub fn charlie_stage() -> Circuit {
    [
        Element::bs("c1'", "c2'"),
        Element::hwp("c1'", HwpAngle::Deg22_5),
        Element::hwp("c2'", HwpAngle::Deg22_5),
        Element::pbs("c1'", "u5", "dh1", "dv1"),
        Element::pbs("c2'", "u6", "dh2", "dv2"),
    ]
    .into_iter()
    .collect()
}

pub fn build_bell_circuit() -> Circuit {
    front_end()
        .then(bprime_flip_stage())
        .then(delay_stage())
        .then(hadamard_stage())
        .then(readout_stage())
}

/// Alice and Bob run the Bell apparatus; Charlie measures C′.
pub fn build_ghz_circuit() -> Circuit {
    build_bell_circuit().then(charlie_stage())
}

/// Which concentration protocol to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProtocolKind {
    Bell,
    Ghz,
}

impl ProtocolKind {
    pub fn input(self, p: &SourceParams) -> State {
        match self {
            ProtocolKind::Bell => bell_input(p),
            ProtocolKind::Ghz => ghz_input(p),
        }
    }

    pub fn circuit(self) -> Circuit {
        match self {
            ProtocolKind::Bell => build_bell_circuit(),
            ProtocolKind::Ghz => build_ghz_circuit(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Bell => "bell",
            ProtocolKind::Ghz => "ghz",
        }
    }

    /// Target family and recyclable family for this protocol.
    pub fn families(self) -> (FamilyCtor, FamilyCtor) {
        match self {
            ProtocolKind::Bell => (ReferenceFamily::Phi0, ReferenceFamily::Phi1),
            ProtocolKind::Ghz => (ReferenceFamily::Psi0, ReferenceFamily::Psi1),
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds one member of a four-state family from its two signs.
pub type FamilyCtor = fn(Sign, Sign) -> ReferenceFamily;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    fn factor(self) -> Complex64 {
        match self {
            Sign::Plus => Complex64::new(1.0, 0.0),
            Sign::Minus => Complex64::new(-1.0, 0.0),
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Named target states. Signs are (polarisation slot, spatial slot).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReferenceFamily {
    /// `½(|HH⟩ ± |VV⟩)(|a1 b1′⟩ ± |a2 b2′⟩)` on A, B′.
    Phi0(Sign, Sign),
    /// `(α′|HV⟩ ± β′|VH⟩)(γ′|a1 b2′⟩ ± δ′|a2 b1′⟩)` on A, B′.
    Phi1(Sign, Sign),
    /// `(α′|HH⟩ + β′|VV⟩)(γ′|a1 b1′⟩ + δ′|a2 b2′⟩)` on A, B′.
    Phi2,
    /// `½(|HHH⟩ ± |VVV⟩)(|a1 b1′ c1⟩ ± |a2 b2′ c2⟩)` on A, B′, C.
    Psi0(Sign, Sign),
    /// `(α′|HVH⟩ ± β′|VHV⟩)(γ′|a1 b2′ c1⟩ ± δ′|a2 b1′ c2⟩)` on A, B′, C.
    Psi1(Sign, Sign),
    /// Maximal hyperentangled pair on A, B.
    MaxBell,
    /// Maximal hyperentangled triple on A, B, C.
    MaxGhz,
}

impl ReferenceFamily {
    pub fn needs_params(self) -> bool {
        matches!(self, ReferenceFamily::Phi1(..) | ReferenceFamily::Phi2 | ReferenceFamily::Psi1(..))
    }

    pub fn signs(self) -> Option<(Sign, Sign)> {
        match self {
            ReferenceFamily::Phi0(p, s)
            | ReferenceFamily::Phi1(p, s)
            | ReferenceFamily::Psi0(p, s)
            | ReferenceFamily::Psi1(p, s) => Some((p, s)),
            _ => None,
        }
    }

    /// Correction that maps this member onto its `++` sibling.
    pub fn feed_forward(self) -> FeedForward {
        match self.signs() {
            Some((p, s)) => FeedForward { spatial: s == Sign::Minus, polarization: p == Sign::Minus },
            None => FeedForward::NONE,
        }
    }
}

impl fmt::Display for ReferenceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, signs) = match self {
            ReferenceFamily::Phi0(p, s) => ("phi0", Some((p, s))),
            ReferenceFamily::Phi1(p, s) => ("phi1", Some((p, s))),
            ReferenceFamily::Psi0(p, s) => ("psi0", Some((p, s))),
            ReferenceFamily::Psi1(p, s) => ("psi1", Some((p, s))),
            ReferenceFamily::Phi2 => ("phi2++", None),
            ReferenceFamily::MaxBell => ("bell-max", None),
            ReferenceFamily::MaxGhz => ("ghz-max", None),
        };
        f.write_str(name)?;
        if let Some((p, s)) = signs {
            write!(f, "{}{}", p.symbol(), s.symbol())?;
        }
        Ok(())
    }
}

/// `(pol amps) ⊗ (path amps)` where each entry lists (pol per photon, path index per photon).
fn reference_terms(entries: &[(&[Pol], &[u8], Complex64)], photons: &[PhotonLabel]) -> State {
    State::from_terms(entries.iter().map(|(pols, ks, amp)| {
        let modes = photons.iter().zip(pols.iter().zip(ks.iter())).map(|(ph, (pol, k))| ph.mode(*k, *pol));
        (Monomial::from_modes(modes), *amp)
    }))
    .expect("uniform photon number")
}

/// Builds a reference state; families built from recycled amplitudes
/// (φ1, φ2, ψ1) require `params`.
pub fn reference_state(r: ReferenceFamily, params: Option<&RecycledParams>) -> Result<State> {
    use PhotonLabel as L;
    use Pol::{H, V};
    let half = Complex64::new(0.5, 0.0);
    let recycled = || params.map(|p| p.0).ok_or_else(|| Error::MissingParams(format!("{r}")));
    let product = |pol: [(&'static [Pol], Complex64); 2], space: [(&'static [u8], Complex64); 2], photons: &[L]| {
        let mut entries: Vec<(&[Pol], &[u8], Complex64)> = Vec::with_capacity(4);
        for (pols, pc) in pol {
            for (ks, kc) in space {
                entries.push((pols, ks, pc * kc));
            }
        }
        reference_terms(&entries, photons)
    };
    let one = Complex64::new(1.0, 0.0);
    let state = match r {
        ReferenceFamily::Phi0(p, s) => product(
            [(&[H, H], one), (&[V, V], p.factor())],
            [(&[1, 1], one), (&[2, 2], s.factor())],
            &[L::A, L::B_PRIME],
        )
        .scaled(half),
        ReferenceFamily::Phi1(p, s) => {
            let q = recycled()?;
            product(
                [(&[H, V], q.alpha), (&[V, H], q.beta * p.factor())],
                [(&[1, 2], q.gamma), (&[2, 1], q.delta * s.factor())],
                &[L::A, L::B_PRIME],
            )
        }
        ReferenceFamily::Phi2 => {
            let q = recycled()?;
            product([(&[H, H], q.alpha), (&[V, V], q.beta)], [(&[1, 1], q.gamma), (&[2, 2], q.delta)], &[L::A, L::B_PRIME])
        }
        ReferenceFamily::Psi0(p, s) => product(
            [(&[H, H, H], one), (&[V, V, V], p.factor())],
            [(&[1, 1, 1], one), (&[2, 2, 2], s.factor())],
            &[L::A, L::B_PRIME, L::C],
        )
        .scaled(half),
        ReferenceFamily::Psi1(p, s) => {
            let q = recycled()?;
            product(
                [(&[H, V, H], q.alpha), (&[V, H, V], q.beta * p.factor())],
                [(&[1, 2, 1], q.gamma), (&[2, 1, 2], q.delta * s.factor())],
                &[L::A, L::B_PRIME, L::C],
            )
        }
        ReferenceFamily::MaxBell => make_bell_source(&SourceParams::balanced(), L::A, L::B),
        ReferenceFamily::MaxGhz => make_ghz_source(&SourceParams::balanced(), [L::A, L::B, L::C]),
    };
    Ok(state)
}

/// Classical corrections applied to photon B′.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeedForward {
    /// Z^S: phase shifter on `b2'`.
    pub spatial: bool,
    /// Z^P: HWP at 0° on both B′ paths.
    pub polarization: bool,
}

impl FeedForward {
    pub const NONE: FeedForward = FeedForward { spatial: false, polarization: false };

    pub fn is_none(&self) -> bool {
        !self.spatial && !self.polarization
    }

    pub fn circuit(&self) -> Circuit {
        let mut c = Circuit::new();
        if self.spatial {
            c.push(Element::ps("b2'"));
        }
        if self.polarization {
            c.push(Element::hwp("b1'", HwpAngle::Deg0));
            c.push(Element::hwp("b2'", HwpAngle::Deg0));
        }
        c
    }
}

impl fmt::Display for FeedForward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.spatial, self.polarization) {
            (false, false) => f.write_str("none"),
            (true, false) => f.write_str("Z^S"),
            (false, true) => f.write_str("Z^P"),
            (true, true) => f.write_str("Z^S,Z^P"),
        }
    }
}

fn require_bprime(s: &State) -> Result<()> {
    let paths = s.paths();
    if [PhotonLabel::B_PRIME.path(1), PhotonLabel::B_PRIME.path(2)].iter().any(|p| paths.contains(p)) {
        Ok(())
    } else {
        Err(Error::UnknownPath(PhotonLabel::B_PRIME.path(1)))
    }
}

pub fn feed_forward(s: &State, f: FeedForward) -> Result<State> {
    require_bprime(s)?;
    f.circuit().apply(s)
}

/// Polarisation flip plus spatial swap of photon B′.
pub fn flip_bprime(s: &State) -> Result<State> {
    require_bprime(s)?;
    bprime_flip_stage().apply(s)
}
