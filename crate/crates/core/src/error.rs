use alloc::string::String;

use crate::fock::{Mode, PathLabel};

/// Everything that can go wrong while building, evolving or measuring states.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mode map is not unitary: singular value {singular_value:.3e} (max Gram deviation {deviation:.3e})")]
    NonUnitary { singular_value: f64, deviation: f64 },
    #[error("mode map sends a photon onto occupied mode {0} that it leaves untouched")]
    MapNotClosed(Mode),
    #[error("path {0} appears in both factors of a tensor product")]
    OverlappingPaths(PathLabel),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("monomials carry different photon numbers ({0} vs {1})")]
    MixedPhotonNumber(usize, usize),
    #[error("unknown path {0}")]
    UnknownPath(PathLabel),
    #[error("unnormalized source parameters: |{which}|^2 sums to {norm}")]
    UnnormalizedParams { which: &'static str, norm: f64 },
    #[error("reference {0} needs source parameters")]
    MissingParams(String),
    #[error("photon in {0} sits on a detector path but no detector watches that rail")]
    StrayPhoton(Mode),
    #[error("term with {found} detected photons, expected {expected}")]
    DetectedCountMismatch { expected: usize, found: usize },
    #[error("no photon reaches a detector")]
    NothingDetected,
    #[error("detector {0} is assigned twice")]
    DuplicateDetector(String),
    #[error("unclassified outcome {pattern}: best fidelity {fidelity:.3e}, interval {interval}")]
    Unclassified { pattern: String, fidelity: f64, interval: u32 },
    #[error("outcome {pattern} matched {reference} but its click interval {interval} says otherwise")]
    IntervalMismatch { pattern: String, reference: String, interval: u32 },
    #[error("click pattern {0} is shared by outcomes of different classes")]
    AmbiguousPattern(String),
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = core::result::Result<T, Error>;
