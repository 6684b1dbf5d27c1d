use super::{candidates, sort_by_density, validate, OptimizeError, SolverKind, UpgradePlan};

/// Density-ordered greedy fill. Feasible but not optimal in general.
pub fn solve_greedy(risks: &[f64], costs: &[f64], budget_usd: f64) -> Result<UpgradePlan, OptimizeError> {
    validate(risks, costs, budget_usd)?;
    let mut items = candidates(risks, costs, budget_usd);
    sort_by_density(&mut items, risks, costs);
    let mut spent = 0.0;
    let mut selected = Vec::new();
    for i in items {
        if spent + costs[i] <= budget_usd {
            spent += costs[i];
            selected.push(i);
        }
    }
    Ok(UpgradePlan::from_selection(risks, costs, budget_usd, selected, SolverKind::Greedy))
}
