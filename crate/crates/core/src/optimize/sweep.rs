use std::io::Write;

use super::{OptimizeError, Solver};
use crate::par::{self, Parallelism};

/// One point of a risk-versus-budget curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub budget_usd: f64,
    pub removed_risk: f64,
    pub residual_risk: f64,
    pub n_selected: usize,
}

pub fn budget_sweep(
    risks: &[f64],
    costs: &[f64],
    budgets: &[f64],
    solver: &Solver,
) -> Result<Vec<SweepPoint>, OptimizeError> {
    budget_sweep_with(risks, costs, budgets, solver, Parallelism::default())
}

/// Solves each budget independently, in parallel when requested.
pub fn budget_sweep_with(
    risks: &[f64],
    costs: &[f64],
    budgets: &[f64],
    solver: &Solver,
    parallelism: Parallelism,
) -> Result<Vec<SweepPoint>, OptimizeError> {
    if let Some(k) = budgets.windows(2).position(|w| !(w[1] >= w[0])) {
        return Err(OptimizeError::NonMonotoneBudgets { position: k + 1 });
    }
    par::map(budgets, parallelism, |&b| {
        solver.solve(risks, costs, b).map(|plan| SweepPoint {
            budget_usd: b,
            removed_risk: plan.removed_risk,
            residual_risk: plan.residual_risk,
            n_selected: plan.n_selected(),
        })
    })
    .into_iter()
    .collect()
}

/// `budget_usd,removed_risk,residual_risk,n_selected`
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["budget_usd", "removed_risk", "residual_risk", "n_selected"])?;
    for p in points {
        w.write_record([
            p.budget_usd.to_string(),
            p.removed_risk.to_string(),
            p.residual_risk.to_string(),
            p.n_selected.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
