//! Published herald tables and the detector-relabeling search that compares
//! them with derived signature tables.
//!
//! Patterns are written as in print: `D3` is a lone click, `(D1,D8)` two
//! simultaneous clicks, and `(D1^2t,D2)` means D1 fired two bins after D2.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use itertools::Itertools;

use crate::detection::{Side, SignatureTable};
use crate::protocol::{FeedForward, ProtocolKind, ReferenceFamily, Sign};

/// Named click pattern: (detector name, relative tbin).
pub type NamedRecord = BTreeSet<(String, u32)>;

const SINGLES: &str = "D1 D2 D3 D4 D5 D6 D7 D8";
const SAME_PS: &str = "(D2,D3) (D1,D4) (D6,D7) (D5,D8)";
const SAME_PP: &str = "(D1,D2) (D3,D4) (D5,D6) (D7,D8)";
const SAME_SP: &str = "(D1,D3) (D2,D4) (D5,D7) (D6,D8)";
const CROSS_S: &str = "(D1,D8) (D2,D7) (D3,D6) (D4,D5)";
const CROSS_P: &str = "(D1,D6) (D2,D5) (D3,D8) (D4,D7)";
const LATE_MINUS: &str = "(D1^2t,D2) (D1,D2^2t) (D3^2t,D4) (D3,D4^2t) (D1^2t,D3) (D1,D3^2t) (D2^2t,D4) (D2,D4^2t) \
                          (D5^2t,D6) (D5,D6^2t) (D7^2t,D8) (D7,D8^2t) (D5^2t,D7) (D5,D7^2t) (D6^2t,D8) (D6,D8^2t)";
const LATE_PLUS: &str = "(D1^2t,D1) (D2^2t,D2) (D3^2t,D3) (D4^2t,D4) (D5^2t,D5) (D6^2t,D6) (D7^2t,D7) (D8^2t,D8) \
                         (D1^2t,D4) (D1,D4^2t) (D2^2t,D3) (D2,D3^2t) (D5^2t,D8) (D5,D8^2t) (D6^2t,D7) (D6,D7^2t)";

const NONE: FeedForward = FeedForward { spatial: false, polarization: false };
const ZS: FeedForward = FeedForward { spatial: true, polarization: false };
const ZP: FeedForward = FeedForward { spatial: false, polarization: true };
const ZSZP: FeedForward = FeedForward { spatial: true, polarization: true };

use ReferenceFamily::{Phi0, Phi1, Psi0, Psi1};
use Sign::{Minus as M, Plus as P};

const BELL_ROWS: [(&str, ReferenceFamily, FeedForward); 8] = [
    (SINGLES, Phi1(P, P), NONE),
    (SAME_PP, Phi1(M, P), ZP),
    (SAME_PS, Phi1(P, M), ZS),
    (SAME_SP, Phi1(M, M), ZSZP),
    (CROSS_S, Phi0(P, M), ZS),
    (CROSS_P, Phi0(M, P), ZP),
    (LATE_MINUS, Phi0(M, M), ZSZP),
    (LATE_PLUS, Phi0(P, P), NONE),
];

const GHZ_ROWS: [(&str, &str, ReferenceFamily, FeedForward); 32] = [
    ("DH1", SINGLES, Psi1(P, P), NONE),
    ("DH2", SAME_PS, Psi1(P, P), NONE),
    ("DV1", SAME_PP, Psi1(P, P), NONE),
    ("DV2", SAME_SP, Psi1(P, P), NONE),
    ("DH2", SINGLES, Psi1(P, M), ZS),
    ("DH1", SAME_PS, Psi1(P, M), ZS),
    ("DV2", SAME_PP, Psi1(P, M), ZS),
    ("DV1", SAME_SP, Psi1(P, M), ZS),
    ("DV1", SINGLES, Psi1(M, P), ZP),
    ("DV2", SAME_PS, Psi1(M, P), ZP),
    ("DH1", SAME_PP, Psi1(M, P), ZP),
    ("DH2", SAME_SP, Psi1(M, P), ZP),
    ("DV2", SINGLES, Psi1(M, M), ZSZP),
    ("DV1", SAME_PS, Psi1(M, M), ZSZP),
    ("DH2", SAME_PP, Psi1(M, M), ZSZP),
    ("DH1", SAME_SP, Psi1(M, M), ZSZP),
    ("DH2", CROSS_S, Psi0(P, P), NONE),
    ("DV1", CROSS_P, Psi0(P, P), NONE),
    ("DH1", LATE_PLUS, Psi0(P, P), NONE),
    ("DV2", LATE_MINUS, Psi0(P, P), NONE),
    ("DH1", CROSS_S, Psi0(P, M), ZS),
    ("DV2", CROSS_P, Psi0(P, M), ZS),
    ("DH2", LATE_PLUS, Psi0(P, M), ZS),
    ("DV1", LATE_MINUS, Psi0(P, M), ZS),
    ("DV2", CROSS_S, Psi0(M, P), ZP),
    ("DH1", CROSS_P, Psi0(M, P), ZP),
    ("DV1", LATE_PLUS, Psi0(M, P), ZP),
    ("DH2", LATE_MINUS, Psi0(M, P), ZP),
    ("DV1", CROSS_S, Psi0(M, M), ZSZP),
    ("DH2", CROSS_P, Psi0(M, M), ZSZP),
    ("DV2", LATE_PLUS, Psi0(M, M), ZSZP),
    ("DH1", LATE_MINUS, Psi0(M, M), ZSZP),
];

/// One published pattern with its outcome and correction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct HeraldRow {
    pub record: NamedRecord,
    pub reference: ReferenceFamily,
    pub feedforward: FeedForward,
}

fn parse_click(token: &str) -> (String, u32) {
    match token.strip_suffix("^2t") {
        Some(name) => (name.to_string(), 2),
        None => (token.to_string(), 0),
    }
}

/// Splits a group such as `(D1^2t,D2) (D1,D2^2t)` into click patterns.
fn parse_group(group: &str) -> Vec<NamedRecord> {
    group
        .split_whitespace()
        .map(|item| {
            let inner = item.trim_start_matches('(').trim_end_matches(')');
            inner.split(',').map(parse_click).collect()
        })
        .collect()
}

/// Every heralded row of the published table for `kind`.
pub fn published_table(kind: ProtocolKind) -> Vec<HeraldRow> {
    let mut rows = Vec::new();
    match kind {
        ProtocolKind::Bell => {
            for (group, reference, feedforward) in BELL_ROWS {
                rows.extend(parse_group(group).into_iter().map(|record| HeraldRow { record, reference, feedforward }));
            }
        }
        ProtocolKind::Ghz => {
            for (charlie, group, reference, feedforward) in GHZ_ROWS {
                rows.extend(parse_group(group).into_iter().map(|mut record| {
                    record.insert((charlie.to_string(), 0));
                    HeraldRow { record, reference, feedforward }
                }));
            }
        }
    }
    rows.sort();
    rows
}

/// Detector bijection from derived names to published names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relabeling {
    pub map: BTreeMap<String, String>,
}

impl Relabeling {
    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(a, b)| a == b)
    }

    /// Only the detectors that move.
    pub fn moved(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().filter(|(a, b)| a != b).map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

impl core::fmt::Display for Relabeling {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.is_identity() {
            return f.write_str("identity");
        }
        for (i, (a, b)) in self.moved().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}->{b}")?;
        }
        Ok(())
    }
}

type RowKey = (NamedRecord, ReferenceFamily, FeedForward);

fn relabel(rows: &[RowKey], map: &BTreeMap<&str, &str>) -> BTreeSet<RowKey> {
    rows.iter()
        .map(|(record, r, ff)| {
            let record = record.iter().map(|(name, t)| (map.get(name.as_str()).copied().unwrap_or(name).to_string(), *t)).collect();
            (record, *r, *ff)
        })
        .collect()
}

/// Searches side-preserving detector bijections (Charlie's detectors only
/// within a polarisation) for one under which the heralded rows of `table`
/// equal the published table exactly. The first hit in lexicographic order
/// is returned.
pub fn find_relabeling(table: &SignatureTable) -> Option<Relabeling> {
    let published: BTreeSet<RowKey> =
        published_table(table.kind).into_iter().map(|r| (r.record, r.reference, r.feedforward)).collect();
    if table.heralded().any(|r| r.reference.is_none() || r.feedforward.is_none()) {
        return None;
    }
    let derived: Vec<RowKey> = table
        .heralded()
        .map(|row| (row.record.named(), row.reference.expect("checked"), row.feedforward.expect("checked")))
        .collect();
    if derived.len() != published.len() {
        return None;
    }
    let alice = ["D1", "D2", "D3", "D4"];
    let bob = ["D5", "D6", "D7", "D8"];
    let charlie_options: Vec<[(&str, &str); 4]> = match table.kind {
        ProtocolKind::Bell => alloc::vec![[("DH1", "DH1"), ("DH2", "DH2"), ("DV1", "DV1"), ("DV2", "DV2")]],
        ProtocolKind::Ghz => [false, true]
            .into_iter()
            .cartesian_product([false, true])
            .map(|(swap_h, swap_v)| {
                let (h1, h2) = if swap_h { ("DH2", "DH1") } else { ("DH1", "DH2") };
                let (v1, v2) = if swap_v { ("DV2", "DV1") } else { ("DV1", "DV2") };
                [("DH1", h1), ("DH2", h2), ("DV1", v1), ("DV2", v2)]
            })
            .collect(),
    };
    for pa in alice.iter().permutations(4) {
        for pb in bob.iter().permutations(4) {
            for ch in &charlie_options {
                let mut map: BTreeMap<&str, &str> = BTreeMap::new();
                map.extend(alice.iter().zip(&pa).map(|(a, b)| (*a, **b)));
                map.extend(bob.iter().zip(&pb).map(|(a, b)| (*a, **b)));
                map.extend(ch.iter().copied());
                if relabel(&derived, &map) == published {
                    return Some(Relabeling {
                        map: map.into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
                    });
                }
            }
        }
    }
    None
}

/// Side of a published detector name.
pub fn side_of(name: &str) -> Option<Side> {
    match name {
        "D1" | "D2" | "D3" | "D4" => Some(Side::Alice),
        "D5" | "D6" | "D7" | "D8" => Some(Side::Bob),
        "DH1" | "DH2" | "DV1" | "DV2" => Some(Side::Charlie),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::derive_signature_table;
    use crate::protocol::SourceParams;

    #[test]
    fn bell_table_counts() {
        let rows = published_table(ProtocolKind::Bell);
        assert_eq!(rows.len(), 8 + 3 * 4 + 2 * 4 + 2 * 16);
        let unique: BTreeSet<&NamedRecord> = rows.iter().map(|r| &r.record).collect();
        assert_eq!(unique.len(), rows.len());
        let late_plus = rows.iter().filter(|r| r.reference == Phi0(P, P)).count();
        let late_minus = rows.iter().filter(|r| r.reference == Phi0(M, M)).count();
        assert_eq!((late_plus, late_minus), (16, 16));
    }

    #[test]
    fn ghz_table_counts() {
        let rows = published_table(ProtocolKind::Ghz);
        assert_eq!(rows.len(), 4 * 60);
        let unique: BTreeSet<&NamedRecord> = rows.iter().map(|r| &r.record).collect();
        assert_eq!(unique.len(), rows.len());
    }

    #[test]
    fn published_corrections_follow_superscripts() {
        for kind in [ProtocolKind::Bell, ProtocolKind::Ghz] {
            for row in published_table(kind) {
                assert_eq!(row.feedforward, row.reference.feed_forward());
                for (name, _) in &row.record {
                    assert!(side_of(name).is_some(), "{name}");
                }
            }
        }
    }

    #[test]
    fn parse_late_pair() {
        let g = parse_group("(D1^2t,D1) D4");
        assert_eq!(g.len(), 2);
        assert!(g[0].contains(&("D1".to_string(), 2)) && g[0].contains(&("D1".to_string(), 0)));
        assert_eq!(g[1].len(), 1);
    }

    #[test]
    fn bell_relabeling_exists() {
        let t = derive_signature_table(&SourceParams::from_moduli(0.3, 0.4, 0.0, 0.0).unwrap(), ProtocolKind::Bell).unwrap();
        let r = find_relabeling(&t).expect("bijection");
        for (a, b) in r.moved() {
            assert_eq!(side_of(a), side_of(b));
        }
    }

    #[test]
    fn corrupted_table_has_no_relabeling() {
        let mut t = derive_signature_table(&SourceParams::balanced(), ProtocolKind::Bell).unwrap();
        let row = t.rows.iter_mut().find(|r| r.reference == Some(Phi0(P, M))).unwrap();
        row.reference = Some(Phi0(M, M));
        row.feedforward = Some(ZSZP);
        assert!(find_relabeling(&t).is_none());
    }
}
