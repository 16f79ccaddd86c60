use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use hecp_core::analysis::recycled_round_check;
use hecp_core::detection::{derive_signature_table, evolve, run_protocol, Class, Side, MATCH_FIDELITY, PROB_EPS};
use hecp_core::fock::{Monomial, Mode, Pol, State, UNITARY_EPS};
use hecp_core::heralds::{find_relabeling, published_table, side_of};
use hecp_core::optics::Element;
use hecp_core::protocol::{ProtocolKind, SourceParams};
use hecp_core::Complex64;

fn params() -> [SourceParams; 3] {
    [
        SourceParams::balanced(),
        SourceParams::from_moduli(0.3, 0.4, 0.0, 0.0).unwrap(),
        SourceParams::from_moduli(0.17, 0.71, 0.4, -2.0).unwrap(),
    ]
}

#[test]
fn bell_table_matches_published_rows() {
    for p in params() {
        let table = derive_signature_table(&p, ProtocolKind::Bell).unwrap();
        let r = find_relabeling(&table).expect("side-preserving bijection");
        for (from, to) in &r.map {
            assert_eq!(side_of(from), side_of(to), "{from} -> {to}");
        }
        assert_eq!(table.heralded().count(), published_table(ProtocolKind::Bell).len());
    }
}

#[test]
fn ghz_table_matches_published_rows() {
    let table = derive_signature_table(&SourceParams::from_moduli(0.3, 0.4, 0.0, 0.0).unwrap(), ProtocolKind::Ghz).unwrap();
    let r = find_relabeling(&table).expect("side-preserving bijection");
    for (from, to) in &r.map {
        assert_eq!(side_of(from), side_of(to));
        if side_of(from) == Some(Side::Charlie) {
            assert_eq!(from.starts_with("DH"), to.starts_with("DH"));
        }
    }
    assert_eq!(table.heralded().count(), 240);
}

#[test]
fn heralded_outcomes_reach_the_targets() {
    for kind in [ProtocolKind::Bell, ProtocolKind::Ghz] {
        let r = run_protocol(&params()[2], kind).unwrap();
        for o in r.outcomes.iter().filter(|o| o.class != Class::Fail) {
            assert!(o.corrected_fidelity.unwrap() >= MATCH_FIDELITY, "{} {}", kind, o.record);
        }
        assert!((r.completeness() - 1.0).abs() < PROB_EPS);
    }
}

#[test]
fn ghz_fail_ignores_charlie() {
    let table = derive_signature_table(&params()[1], ProtocolKind::Ghz).unwrap();
    let mut by_pattern: BTreeMap<_, BTreeSet<Class>> = BTreeMap::new();
    for row in &table.rows {
        by_pattern.entry(row.pattern()).or_default().insert(row.class);
    }
    let mut fails = 0;
    for (pattern, classes) in &by_pattern {
        if classes.contains(&Class::Fail) {
            assert_eq!(classes.len(), 1, "{pattern}");
            fails += 1;
        }
    }
    assert!(fails > 0);
    // Every Charlie click appears next to each failing Alice/Bob pattern.
    for row in table.rows.iter().filter(|r| r.class == Class::Fail) {
        let charlies: BTreeSet<_> =
            table.rows.iter().filter(|r| r.pattern() == row.pattern()).map(|r| r.charlie().to_string()).collect();
        assert_eq!(charlies.len(), 4, "{}", row.pattern());
    }
}

#[test]
fn ghz_marginal_over_charlie_is_bell() {
    let p = params()[2];
    let bell = derive_signature_table(&p, ProtocolKind::Bell).unwrap();
    let ghz = derive_signature_table(&p, ProtocolKind::Ghz).unwrap();
    let mut marginal: BTreeMap<String, f64> = BTreeMap::new();
    for row in &ghz.rows {
        *marginal.entry(row.pattern().to_string()).or_default() += row.probability;
    }
    assert_eq!(marginal.len(), bell.rows.len());
    for row in &bell.rows {
        assert!((marginal[&row.record.to_string()] - row.probability).abs() < 1e-12);
    }
}

#[test]
fn norm_through_full_circuits() {
    for kind in [ProtocolKind::Bell, ProtocolKind::Ghz] {
        for p in params() {
            let input = kind.input(&p);
            let out = evolve(&p, kind).unwrap();
            assert!((out.norm_sqr() - input.norm_sqr()).abs() <= 1e-12);
            assert!((out.norm_sqr() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn every_circuit_element_is_unitary() {
    for kind in [ProtocolKind::Bell, ProtocolKind::Ghz] {
        for e in kind.circuit().elements() {
            let report = e.check_unitarity(8);
            assert!(report.is_unitary(UNITARY_EPS), "{e:?}: {report:?}");
        }
    }
}

#[test]
fn hom_at_every_beam_splitter() {
    for kind in [ProtocolKind::Bell, ProtocolKind::Ghz] {
        for e in kind.circuit().elements() {
            let Element::BeamSplitter { plus, minus } = e else { continue };
            for pol in [Pol::H, Pol::V] {
                for t in 0..5 {
                    let x = Mode::new(plus.clone(), pol, t);
                    let y = Mode::new(minus.clone(), pol, t);
                    let out = e.apply(&State::single([x.clone(), y.clone()], Complex64::new(1.0, 0.0))).unwrap();
                    assert_eq!(out.amplitude(&Monomial::from_modes([x, y])), Complex64::new(0.0, 0.0));
                    assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn recycled_round_success(a in 0.05f64..0.95, g in 0.05f64..0.95, pa in -3.0f64..3.0, pg in -3.0f64..3.0) {
        let p = SourceParams::from_moduli(a, g, pa, pg).unwrap();
        let r = recycled_round_check(&p).unwrap();
        let q = r.params.params();
        let expected = 4.0 * (q.alpha * q.beta * q.gamma * q.delta).norm_sqr();
        prop_assert!((r.simulated - expected).abs() <= 1e-9);
    }
}
