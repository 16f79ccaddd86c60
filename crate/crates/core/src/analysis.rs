//! Closed-form success probabilities, the recycled round and parameter sweeps.

use alloc::format;
use alloc::vec::Vec;

use crate::detection::{run_protocol, Class};
use crate::error::{Error, Result};
use crate::protocol::{ProtocolKind, RecycledParams, SourceParams};

/// `4|αβγδ|²`.
pub fn p1(p: &SourceParams) -> f64 {
    4.0 * p.alpha.norm_sqr() * p.beta.norm_sqr() * p.gamma.norm_sqr() * p.delta.norm_sqr()
}

/// `(|α|⁴+|β|⁴)(|γ|⁴+|δ|⁴)`.
pub fn recycle_prob(p: &SourceParams) -> f64 {
    p.pol_weight() * p.spatial_weight()
}

/// `P1 + 4|α′β′γ′δ′|² · R`, built from the recycled amplitudes.
pub fn p2_expanded(p: &SourceParams) -> f64 {
    p1(p) + p1(recycled_params(p).params()) * recycle_prob(p)
}

/// `P1 + 4|αβγδ|⁴ / R`.
pub fn p2_simplified(p: &SourceParams) -> f64 {
    let q = p1(p);
    q + q * q / (4.0 * recycle_prob(p))
}

pub fn recycled_params(p: &SourceParams) -> RecycledParams {
    p.recycled()
}

/// Success probability when the recycled state is fed back `rounds - 1` times.
pub fn multi_round_success(p: &SourceParams, rounds: usize) -> f64 {
    let mut total = 0.0;
    let mut reach = 1.0;
    let mut current = *p;
    for _ in 0..rounds {
        total += reach * p1(&current);
        reach *= recycle_prob(&current);
        current = *current.recycled().params();
    }
    total
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Simulated {
    pub success: f64,
    pub recycle: f64,
    pub fail: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbReport {
    pub p1: f64,
    pub recycle_prob: f64,
    pub p2: f64,
    pub simulated: Option<Simulated>,
    /// Largest gap between the simulated aggregates and their closed forms.
    pub max_abs_deviation: f64,
}

pub fn analytic_probs(p: &SourceParams) -> ProbReport {
    ProbReport {
        p1: p1(p),
        recycle_prob: recycle_prob(p),
        p2: p2_simplified(p),
        simulated: None,
        max_abs_deviation: 0.0,
    }
}

/// Closed forms next to a full enumeration of the protocol.
pub fn compare(p: &SourceParams, kind: ProtocolKind) -> Result<ProbReport> {
    let run = run_protocol(p, kind)?;
    let sim = Simulated { success: run.total(Class::Success), recycle: run.total(Class::Recycle), fail: run.total(Class::Fail) };
    let mut report = analytic_probs(p);
    let expected_fail = 1.0 - report.p1 - report.recycle_prob;
    report.max_abs_deviation = (sim.success - report.p1)
        .abs()
        .max((sim.recycle - report.recycle_prob).abs())
        .max((sim.fail - expected_fail).abs());
    report.simulated = Some(sim);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecycledRound {
    pub params: RecycledParams,
    /// `4|α′β′γ′δ′|²`.
    pub expected: f64,
    pub simulated: f64,
}

impl RecycledRound {
    pub fn deviation(&self) -> f64 {
        (self.expected - self.simulated).abs()
    }
}

/// Runs the Bell pipeline on two fresh pairs prepared with the recycled amplitudes.
pub fn recycled_round_check(p: &SourceParams) -> Result<RecycledRound> {
    let params = recycled_params(p);
    let run = run_protocol(params.params(), ProtocolKind::Bell)?;
    Ok(RecycledRound { params, expected: p1(params.params()), simulated: run.success() })
}

/// Grid of (|α|², |γ|²) points inside (0, 0.5]².
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    alpha2: Vec<f64>,
    gamma2: Vec<f64>,
}

impl Grid {
    pub const DEFAULT_STEP: f64 = 0.05;

    /// `step, 2·step, …, 0.5` on both axes; `step` must divide 0.5.
    pub fn with_step(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 0.5) {
            return Err(Error::InvalidGrid(format!("step {step} outside (0, 0.5]")));
        }
        let n = libm::round(0.5 / step);
        if (n * step - 0.5).abs() > 1e-9 {
            return Err(Error::InvalidGrid(format!("step {step} does not divide 0.5")));
        }
        let axis: Vec<f64> = (1..=n as u32).map(|k| f64::from(k) * 0.5 / n).collect();
        Ok(Grid { alpha2: axis.clone(), gamma2: axis })
    }

    pub fn from_axes(alpha2: Vec<f64>, gamma2: Vec<f64>) -> Result<Self> {
        for &x in alpha2.iter().chain(&gamma2) {
            if !(x > 0.0 && x <= 0.5) {
                return Err(Error::InvalidGrid(format!("{x} outside (0, 0.5]")));
            }
        }
        if alpha2.is_empty() || gamma2.is_empty() {
            return Err(Error::InvalidGrid("empty axis".into()));
        }
        Ok(Grid { alpha2, gamma2 })
    }

    /// Points sorted by (|α|², |γ|²).
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut a = self.alpha2.clone();
        let mut g = self.gamma2.clone();
        a.sort_by(f64::total_cmp);
        g.sort_by(f64::total_cmp);
        a.iter().flat_map(|&x| g.iter().map(move |&y| (x, y))).collect()
    }

    pub fn len(&self) -> usize {
        self.alpha2.len() * self.gamma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::with_step(Grid::DEFAULT_STEP).expect("0.05 divides 0.5")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha2: f64,
    pub gamma2: f64,
    pub p1: f64,
    pub p2: f64,
    pub sim_success: f64,
    pub sim_recycle: f64,
    pub sim_fail: f64,
    pub max_dev: f64,
}

pub fn sweep_point(alpha2: f64, gamma2: f64, kind: ProtocolKind) -> Result<SweepRow> {
    let p = SourceParams::from_moduli(alpha2, gamma2, 0.0, 0.0)?;
    let r = compare(&p, kind)?;
    let sim = r.simulated.expect("compare always simulates");
    Ok(SweepRow {
        alpha2,
        gamma2,
        p1: r.p1,
        p2: r.p2,
        sim_success: sim.success,
        sim_recycle: sim.recycle,
        sim_fail: sim.fail,
        max_dev: r.max_abs_deviation,
    })
}

/// One row per grid point in grid order.
pub fn sweep(grid: &Grid, kind: ProtocolKind) -> Result<Vec<SweepRow>> {
    grid.points().into_iter().map(|(a, g)| sweep_point(a, g, kind)).collect()
}
