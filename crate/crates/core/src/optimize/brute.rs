use super::{validate, OptimizeError, SolverKind, UpgradePlan};

pub const BRUTE_FORCE_MAX_ITEMS: usize = 25;

/// Exhaustive search over all subsets. Intended as a test oracle.
///
/// Subsets are visited include-first in index order and only a strictly
/// better value replaces the incumbent, so the first optimal subset found
/// is the canonical one.
pub fn brute_force(risks: &[f64], costs: &[f64], budget_usd: f64) -> Result<UpgradePlan, OptimizeError> {
    validate(risks, costs, budget_usd)?;
    if risks.len() > BRUTE_FORCE_MAX_ITEMS {
        return Err(OptimizeError::TooLarge {
            n: risks.len(),
            max: BRUTE_FORCE_MAX_ITEMS,
        });
    }
    let mut search = Search {
        risks,
        costs,
        budget: budget_usd,
        current: Vec::new(),
        best: Vec::new(),
        best_value: 0.0,
    };
    search.visit(0, 0.0, 0.0);
    let best = search.best;
    Ok(UpgradePlan::from_selection(risks, costs, budget_usd, best, SolverKind::BruteForce))
}

struct Search<'a> {
    risks: &'a [f64],
    costs: &'a [f64],
    budget: f64,
    current: Vec<usize>,
    best: Vec<usize>,
    best_value: f64,
}

impl Search<'_> {
    fn visit(&mut self, i: usize, value: f64, cost: f64) {
        if i == self.risks.len() {
            if value > self.best_value {
                self.best_value = value;
                self.best.clone_from(&self.current);
            }
            return;
        }
        let c = cost + self.costs[i];
        if self.risks[i] > 0.0 && c <= self.budget {
            self.current.push(i);
            self.visit(i + 1, value + self.risks[i], c);
            self.current.pop();
        }
        self.visit(i + 1, value, cost);
    }
}
