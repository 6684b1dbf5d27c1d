//! Budget-constrained selection of segments to underground.
//!
//! Every solver maximises removed risk `sum R_l z_l` subject to
//! `sum C_l z_l <= budget` with binary `z_l`. Among optimal selections the
//! solvers agree on a single answer:
//!
//! * segments with `R_l = 0` are never selected;
//! * otherwise the selection whose sorted index list is lexicographically
//!   smallest wins (equivalently, earlier segments are preferred).

mod bb;
mod brute;
mod compare;
mod dp;
mod greedy;
mod sweep;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

pub use bb::{solve_knapsack_bb, BbOptions};
pub use brute::{brute_force, BRUTE_FORCE_MAX_ITEMS};
pub use compare::{compare_plans, ComparisonReport, PairOverlap};
pub use dp::{solve_knapsack_dp, DpOptions};
pub use greedy::solve_greedy;
pub use sweep::{budget_sweep, budget_sweep_with, write_sweep_csv, SweepPoint};

use crate::geometry::LineSegment;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("{risks} risk values but {costs} costs")]
    LengthMismatch { risks: usize, costs: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("budget must be a nonnegative number, got {0}")]
    InvalidBudget(f64),
    #[error("dynamic-programming table too large: {needed} exceeds the limit of {limit} {what}")]
    CapacityOverflow {
        what: &'static str,
        needed: u128,
        limit: u128,
    },
    #[error("branch and bound exceeded its limit of {limit} nodes")]
    NodeLimitExceeded { limit: u64 },
    #[error("brute force handles at most {max} items, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("budgets must be nondecreasing (position {position})")]
    NonMonotoneBudgets { position: usize },
    #[error("plans and risk vectors do not share one segment universe: {0}")]
    SegmentUniverseMismatch(String),
}

pub const KM_TO_MILES: f64 = 0.621371;

/// Undergrounding cost proportional to length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub usd_per_mile: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            usd_per_mile: 2_000_000.0,
        }
    }
}

impl CostModel {
    pub fn cost_of_km(&self, length_km: f64) -> f64 {
        self.usd_per_mile * length_km * KM_TO_MILES
    }
}

pub fn segment_cost(segment: &LineSegment, model: &CostModel) -> f64 {
    model.cost_of_km(segment.length_km)
}

pub fn segment_costs(segments: &[LineSegment], model: &CostModel) -> Vec<f64> {
    segments.iter().map(|s| segment_cost(s, model)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Dp,
    BranchAndBound,
    Greedy,
    BruteForce,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Dp => "dp",
            SolverKind::BranchAndBound => "branch_and_bound",
            SolverKind::Greedy => "greedy",
            SolverKind::BruteForce => "brute_force",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dp" => Ok(SolverKind::Dp),
            "bb" | "branch_and_bound" | "branch-and-bound" => Ok(SolverKind::BranchAndBound),
            "greedy" => Ok(SolverKind::Greedy),
            "brute_force" | "brute-force" => Ok(SolverKind::BruteForce),
            other => Err(format!("unknown solver {other:?}")),
        }
    }
}

/// A configured solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    Dp(DpOptions),
    BranchAndBound(BbOptions),
    Greedy,
    BruteForce,
}

impl Solver {
    pub fn kind(&self) -> SolverKind {
        match self {
            Solver::Dp(_) => SolverKind::Dp,
            Solver::BranchAndBound(_) => SolverKind::BranchAndBound,
            Solver::Greedy => SolverKind::Greedy,
            Solver::BruteForce => SolverKind::BruteForce,
        }
    }

    /// Exact solvers return an optimum (of the rounded instance, for dp).
    pub fn is_exact(&self) -> bool {
        !matches!(self, Solver::Greedy)
    }

    pub fn solve(&self, risks: &[f64], costs: &[f64], budget_usd: f64) -> Result<UpgradePlan, OptimizeError> {
        match self {
            Solver::Dp(opts) => solve_knapsack_dp(risks, costs, budget_usd, opts),
            Solver::BranchAndBound(opts) => solve_knapsack_bb(risks, costs, budget_usd, opts),
            Solver::Greedy => solve_greedy(risks, costs, budget_usd),
            Solver::BruteForce => brute_force(risks, costs, budget_usd),
        }
    }
}

impl From<SolverKind> for Solver {
    fn from(kind: SolverKind) -> Self {
        match kind {
            SolverKind::Dp => Solver::Dp(DpOptions::default()),
            SolverKind::BranchAndBound => Solver::BranchAndBound(BbOptions::default()),
            SolverKind::Greedy => Solver::Greedy,
            SolverKind::BruteForce => Solver::BruteForce,
        }
    }
}

/// A feasible selection of segments.
#[derive(Debug, Clone, PartialEq)]
pub struct UpgradePlan {
    /// Selected segment indices, ascending.
    pub selected: Vec<usize>,
    pub total_cost_usd: f64,
    pub removed_risk: f64,
    pub residual_risk: f64,
    pub budget_usd: f64,
    pub solver: SolverKind,
}

impl UpgradePlan {
    /// Totals are summed in index order so that equal selections always
    /// report bit-identical numbers.
    pub(crate) fn from_selection(
        risks: &[f64],
        costs: &[f64],
        budget_usd: f64,
        mut selected: Vec<usize>,
        solver: SolverKind,
    ) -> Self {
        selected.sort_unstable();
        let mask = mask_of(&selected, risks.len());
        let mut removed = 0.0;
        let mut residual = 0.0;
        let mut cost = 0.0;
        for (i, &r) in risks.iter().enumerate() {
            if mask[i] {
                removed += r;
                cost += costs[i];
            } else {
                residual += r;
            }
        }
        Self {
            selected,
            total_cost_usd: cost,
            removed_risk: removed,
            residual_risk: residual,
            budget_usd,
            solver,
        }
    }

    pub fn n_selected(&self) -> usize {
        self.selected.len()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        mask_of(&self.selected, n)
    }
}

fn mask_of(selected: &[usize], n: usize) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &i in selected {
        mask[i] = true;
    }
    mask
}

pub(crate) fn validate(risks: &[f64], costs: &[f64], budget_usd: f64) -> Result<(), OptimizeError> {
    if risks.len() != costs.len() {
        return Err(OptimizeError::LengthMismatch {
            risks: risks.len(),
            costs: costs.len(),
        });
    }
    if !(budget_usd >= 0.0) || budget_usd.is_infinite() {
        return Err(OptimizeError::InvalidBudget(budget_usd));
    }
    if let Some(i) = risks.iter().position(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(OptimizeError::InvalidInput(format!(
            "risk {} at index {i} is not a nonnegative number",
            risks[i]
        )));
    }
    if let Some(i) = costs.iter().position(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(OptimizeError::InvalidInput(format!(
            "cost {} at index {i} is not positive",
            costs[i]
        )));
    }
    Ok(())
}

/// Indices worth considering: positive risk and individually affordable.
pub(crate) fn candidates(risks: &[f64], costs: &[f64], budget_usd: f64) -> Vec<usize> {
    (0..risks.len())
        .filter(|&i| risks[i] > 0.0 && costs[i] <= budget_usd)
        .collect()
}

/// Sorts item indices by decreasing risk density, then larger risk, then
/// smaller index.
pub(crate) fn sort_by_density(items: &mut [usize], risks: &[f64], costs: &[f64]) {
    items.sort_by(|&a, &b| {
        let da = risks[a] / costs[a];
        let db = risks[b] / costs[b];
        db.total_cmp(&da)
            .then(risks[b].total_cmp(&risks[a]))
            .then(a.cmp(&b))
    });
}

/// `segment_id,selected,R,cost_usd`, one row per segment.
pub fn write_plan_csv<W: Write>(
    plan: &UpgradePlan,
    segment_ids: &[String],
    risks: &[f64],
    costs: &[f64],
    out: W,
) -> csv::Result<()> {
    let mask = plan.mask(segment_ids.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["segment_id", "selected", "R", "cost_usd"])?;
    for (i, id) in segment_ids.iter().enumerate() {
        w.write_record([
            id.as_str(),
            if mask[i] { "true" } else { "false" },
            &risks[i].to_string(),
            &costs[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `key=value` summary lines of a plan.
pub fn plan_summary(plan: &UpgradePlan) -> String {
    format!(
        "budget_usd={}\ntotal_cost_usd={}\nremoved_risk={}\nresidual_risk={}\nsolver={}\n",
        plan.budget_usd, plan.total_cost_usd, plan.removed_risk, plan.residual_risk, plan.solver
    )
}
