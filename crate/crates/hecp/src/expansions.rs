//! Hand-expanded intermediate states of the front end, built as products
//! of linear forms in creation operators without touching the circuit code.

use std::collections::BTreeMap;

use hecp_core::fock::{Mode, Monomial, Pol, State};
use hecp_core::protocol::SourceParams;
use hecp_core::Complex64;

type Factor = Vec<(Complex64, Mode)>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn m(path: &str, p: Pol) -> Mode {
    Mode::new(path, p, 0)
}

fn one(path: &str, p: Pol) -> Factor {
    vec![(c(1.0), m(path, p))]
}

fn two(x: &str, sx: f64, y: &str, sy: f64, p: Pol) -> Factor {
    vec![(c(sx), m(x, p)), (c(sy), m(y, p))]
}

/// `scale · Π factors`, multiplied out.
pub fn expand(scale: Complex64, factors: &[Factor]) -> State {
    let mut poly: BTreeMap<Vec<Mode>, Complex64> = BTreeMap::from([(Vec::new(), scale)]);
    for f in factors {
        let mut next = BTreeMap::new();
        for (modes, a) in &poly {
            for (b, mode) in f {
                let mut ms = modes.clone();
                ms.push(mode.clone());
                ms.sort();
                *next.entry(ms).or_insert(c(0.0)) += a * b;
            }
        }
        poly = next;
    }
    State::from_terms(poly.into_iter().map(|(ms, a)| (Monomial::from_modes(ms), a))).expect("fixed photon number")
}

fn sum(states: impl IntoIterator<Item = State>) -> State {
    states.into_iter().fold(State::new(), |acc, s| acc.add(&s))
}

const POLS: [Pol; 2] = [Pol::H, Pol::V];
const SIDES: [usize; 2] = [1, 2];

fn label(stem: &str, k: usize, primed: bool) -> String {
    format!("{stem}{k}{}", if primed { "'" } else { "" })
}

/// `(1/8)(HH+VV)(HH+VV)[a1(b1+a1′)+a2(b2+a2′)][(b1−a1′)b1′+(b2−a2′)b2′]`.
pub fn balanced_front_end() -> State {
    let mut terms = Vec::new();
    for p1 in POLS {
        for p2 in POLS {
            for j in SIDES {
                for k in SIDES {
                    terms.push(expand(
                        c(1.0 / 8.0),
                        &[
                            one(&label("a", j, false), p1),
                            two(&label("b", j, false), 1.0, &label("a", j, true), 1.0, p1),
                            two(&label("b", k, false), 1.0, &label("a", k, true), -1.0, p2),
                            one(&label("b", k, true), p2),
                        ],
                    ));
                }
            }
        }
    }
    sum(terms)
}

type Amplitudes = ([(Pol, Complex64); 2], [(usize, Complex64); 2]);

fn amps(p: &SourceParams) -> Amplitudes {
    ([(Pol::H, p.alpha), (Pol::V, p.beta)], [(1, p.gamma), (2, p.delta)])
}

/// Front end for general amplitudes. With `flip` set, photon B′ is also
/// flipped in polarisation and moved to the other spatial mode.
fn bell_front(p: &SourceParams, flip: bool) -> State {
    let (pols, paths) = amps(p);
    let mut terms = Vec::new();
    for (p1, c1) in pols {
        for (p2, c2) in pols {
            for (j, g1) in paths {
                for (k, g2) in paths {
                    let bprime = if flip { one(&label("b", 3 - k, true), p2.flipped()) } else { one(&label("b", k, true), p2) };
                    terms.push(expand(
                        c(0.5) * c1 * c2 * g1 * g2,
                        &[
                            one(&label("a", j, false), p1),
                            two(&label("b", j, false), 1.0, &label("a", j, true), 1.0, p1),
                            two(&label("b", k, false), 1.0, &label("a", k, true), -1.0, p2),
                            bprime,
                        ],
                    ));
                }
            }
        }
    }
    sum(terms)
}

pub fn front_end(p: &SourceParams) -> State {
    bell_front(p, false)
}

pub fn flipped_front_end(p: &SourceParams) -> State {
    bell_front(p, true)
}

/// GHZ front end: triple (A, B, C) ⊗ triple (A′, B′, C′) after the two
/// beam splitters mixing B with A′.
pub fn ghz_front_end(p: &SourceParams) -> State {
    let (pols, paths) = amps(p);
    let mut terms = Vec::new();
    for (p1, c1) in pols {
        for (p2, c2) in pols {
            for (j, g1) in paths {
                for (k, g2) in paths {
                    terms.push(expand(
                        c(0.5) * c1 * c2 * g1 * g2,
                        &[
                            one(&label("a", j, false), p1),
                            two(&label("b", j, false), 1.0, &label("a", j, true), 1.0, p1),
                            one(&label("c", j, false), p1),
                            two(&label("b", k, false), 1.0, &label("a", k, true), -1.0, p2),
                            one(&label("b", k, true), p2),
                            one(&label("c", k, true), p2),
                        ],
                    ));
                }
            }
        }
    }
    sum(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hecp_core::fock::fidelity;

    #[test]
    fn expansions_are_normalised() {
        let p = SourceParams::from_moduli(0.2, 0.7, 0.3, -1.0).unwrap();
        for s in [balanced_front_end(), front_end(&p), flipped_front_end(&p), ghz_front_end(&p)] {
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn balanced_forms_agree() {
        let f = fidelity(&balanced_front_end(), &front_end(&SourceParams::balanced())).unwrap();
        assert!(f > 1.0 - 1e-12);
    }
}
