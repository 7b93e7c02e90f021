//! Bounds on the ACE computable from `P(y, x | z)` alone.
//!
//! Three families are provided: the natural bounds, the eight lower and eight
//! upper closed-form instrumental bounds, and the LP-tight bounds obtained by
//! optimising the ACE over every canonical model that reproduces the data.
//! The upper list is generated from the lower list by the outcome relabeling
//! `y0 <-> y1` followed by a sign flip; [`printed_upper`] keeps the literal
//! transcription of the commonly reproduced table for comparison.

use serde::Serialize;

use crate::classical::{cells, ResponseType};
use crate::simplex::{self, LpOutcome};
use crate::trial_data::ObservedDistribution;

/// Phase-1 residual above which the LP is declared infeasible.
pub const LP_FEASIBILITY_TOL: f64 = 1e-8;
/// Tolerance for flagging a bound as violated by a supplied true ACE.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Which side of the ACE a bound sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// Natural bounds `(lower, upper)`.
pub fn natural_bounds(d: &ObservedDistribution) -> (f64, f64) {
    let p = |y, x, z| d.prob(y, x, z);
    let naive = d.recovery_rate(1) - d.recovery_rate(0);
    let lower = naive - p(1, 0, 1) - p(0, 1, 0);
    let upper = naive + p(0, 0, 1) + p(1, 1, 0);
    (lower, upper)
}

/// The eight lower instrumental bounds, in the conventional order.
pub fn instrumental_lower(d: &ObservedDistribution) -> [f64; 8] {
    let p = |y, x, z| d.prob(y, x, z);
    [
        p(1, 1, 1) + p(0, 0, 0) - 1.0,
        p(1, 1, 0) + p(0, 0, 1) - 1.0,
        p(1, 1, 0) - p(1, 1, 1) - p(1, 0, 1) - p(0, 1, 0) - p(1, 0, 0),
        p(1, 1, 1) - p(1, 1, 0) - p(1, 0, 0) - p(0, 1, 1) - p(1, 0, 1),
        -p(0, 1, 1) - p(1, 0, 1),
        -p(0, 1, 0) - p(1, 0, 0),
        p(0, 0, 1) - p(0, 1, 1) - p(1, 0, 1) - p(0, 1, 0) - p(0, 0, 0),
        p(0, 0, 0) - p(0, 1, 0) - p(1, 0, 0) - p(0, 1, 1) - p(0, 0, 1),
    ]
}

/// The eight upper bounds: entry `i` is minus lower entry `i` evaluated on the
/// outcome-relabeled distribution.
pub fn instrumental_upper(d: &ObservedDistribution) -> [f64; 8] {
    instrumental_lower(&d.swap_y()).map(|v| -v)
}

/// Literal transcription of the widely printed upper table, whose rows 3 and 4
/// end in `- P(y0,x0|z0)`. Diagnostic only; see [`printed_upper_diagnostics`].
pub fn printed_upper(d: &ObservedDistribution) -> [f64; 8] {
    let p = |y, x, z| d.prob(y, x, z);
    [
        1.0 - p(0, 1, 1) - p(1, 0, 0),
        1.0 - p(0, 1, 0) - p(1, 0, 1),
        -p(0, 1, 0) + p(0, 1, 1) + p(0, 0, 1) + p(1, 1, 0) - p(0, 0, 0),
        -p(0, 1, 1) + p(1, 1, 1) + p(0, 0, 1) + p(0, 1, 0) - p(0, 0, 0),
        p(1, 1, 1) + p(0, 0, 1),
        p(1, 1, 0) + p(0, 0, 0),
        -p(1, 0, 1) + p(1, 1, 1) + p(0, 0, 1) + p(1, 1, 0) + p(1, 0, 0),
        -p(1, 0, 0) + p(1, 1, 0) + p(0, 0, 0) + p(1, 1, 1) + p(1, 0, 1),
    ]
}

/// A row of the printed upper table that disagrees with the symmetry-generated row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrintedRowDiscrepancy {
    /// 1-based row index.
    pub index: usize,
    pub printed: f64,
    pub generated: f64,
    /// The printed value lies below the largest lower bound, i.e. it would
    /// exclude every ACE compatible with the other bounds.
    pub below_max_lower: bool,
}

pub fn printed_upper_diagnostics(d: &ObservedDistribution, tol: f64) -> Vec<PrintedRowDiscrepancy> {
    let printed = printed_upper(d);
    let generated = instrumental_upper(d);
    let max_lower = max(&instrumental_lower(d));
    (0..8)
        .filter(|&i| (printed[i] - generated[i]).abs() > tol)
        .map(|i| PrintedRowDiscrepancy {
            index: i + 1,
            printed: printed[i],
            generated: generated[i],
            below_max_lower: printed[i] < max_lower - tol,
        })
        .collect()
}

/// LP-tight bounds. `lower`/`upper` are `None` when no canonical model
/// reproduces the distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpBounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub feasible: bool,
}

/// Equality constraints `forward(q) = d`: one row per `(z, y, x)`.
fn lp_constraints(d: &ObservedDistribution) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a = Vec::with_capacity(8);
    let mut b = Vec::with_capacity(8);
    for z in 0..2u8 {
        for y in 0..2u8 {
            for x in 0..2u8 {
                let row: Vec<f64> = cells()
                    .map(|(bt, r)| {
                        let xx = bt.decision(z);
                        if xx == x && r.outcome(xx) == y {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                a.push(row);
                b.push(d.prob(y as usize, x as usize, z as usize));
            }
        }
    }
    (a, b)
}

fn ace_objective() -> Vec<f64> {
    cells()
        .map(|(_, r)| match r {
            ResponseType::Helped => 1.0,
            ResponseType::Hurt => -1.0,
            _ => 0.0,
        })
        .collect()
}

/// Minimises and maximises the ACE over latent distributions consistent with `d`.
pub fn tight_bounds_lp(d: &ObservedDistribution) -> LpBounds {
    let (a, b) = lp_constraints(d);
    let c = ace_objective();
    let lo = simplex::minimize(&a, &b, &c, LP_FEASIBILITY_TOL);
    let hi = simplex::maximize(&a, &b, &c, LP_FEASIBILITY_TOL);
    let feasible = !matches!(lo, LpOutcome::Infeasible { .. });
    LpBounds { lower: lo.value(), upper: hi.value(), feasible }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub natural_lower: f64,
    pub natural_upper: f64,
    pub inst_lower: [f64; 8],
    pub inst_upper: [f64; 8],
    pub lp_lower: Option<f64>,
    pub lp_upper: Option<f64>,
    pub feasible: bool,
}

impl BoundsReport {
    pub fn max_lower(&self) -> f64 {
        max(&self.inst_lower)
    }

    pub fn min_upper(&self) -> f64 {
        min(&self.inst_upper)
    }
}

/// An instrumental bound that excludes the supplied true ACE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub side: Side,
    /// 1-based index into the lower or upper list.
    pub index: usize,
    pub value: f64,
}

/// Everything [`full_report`] computes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullReport {
    pub bounds: BoundsReport,
    pub true_ace: Option<f64>,
    pub violations: Vec<BoundViolation>,
    pub printed_upper_diagnostics: Vec<PrintedRowDiscrepancy>,
}

pub fn bounds_report(d: &ObservedDistribution) -> BoundsReport {
    let (natural_lower, natural_upper) = natural_bounds(d);
    let lp = tight_bounds_lp(d);
    BoundsReport {
        natural_lower,
        natural_upper,
        inst_lower: instrumental_lower(d),
        inst_upper: instrumental_upper(d),
        lp_lower: lp.lower,
        lp_upper: lp.upper,
        feasible: lp.feasible,
    }
}

/// Lists every instrumental bound on the wrong side of `true_ace` by more than `tol`.
pub fn violations(report: &BoundsReport, true_ace: f64, tol: f64) -> Vec<BoundViolation> {
    let lower = report
        .inst_lower
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > true_ace + tol)
        .map(|(i, &v)| BoundViolation { side: Side::Lower, index: i + 1, value: v });
    let upper = report
        .inst_upper
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < true_ace - tol)
        .map(|(i, &v)| BoundViolation { side: Side::Upper, index: i + 1, value: v });
    lower.chain(upper).collect()
}

pub fn full_report(d: &ObservedDistribution, true_ace: Option<f64>) -> FullReport {
    full_report_with_tol(d, true_ace, VIOLATION_TOL)
}

/// [`full_report`] with an explicit violation tolerance.
pub fn full_report_with_tol(d: &ObservedDistribution, true_ace: Option<f64>, tol: f64) -> FullReport {
    let bounds = bounds_report(d);
    let violations = true_ace.map(|a| violations(&bounds, a, tol)).unwrap_or_default();
    FullReport { printed_upper_diagnostics: printed_upper_diagnostics(d, 1e-12), bounds, true_ace, violations }
}

pub(crate) fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}
