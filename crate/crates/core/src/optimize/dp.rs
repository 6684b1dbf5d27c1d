use super::{candidates, validate, OptimizeError, SolverKind, UpgradePlan};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpOptions {
    /// Cost unit; every cost is rounded up to a whole number of units.
    pub granularity_usd: f64,
    /// Largest capacity (in units) the table may have.
    pub max_units: u64,
    /// Largest decision table, in bits (items x capacity).
    pub max_table_bits: u64,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self {
            granularity_usd: 100_000.0,
            max_units: 10_000_000,
            max_table_bits: 1 << 33,
        }
    }
}

/// Whole cost units covering `cost`; never less than the true cost.
fn units_for(cost: f64, granularity: f64) -> u64 {
    let mut units = (cost / granularity).ceil();
    if units * granularity < cost {
        units += 1.0;
    }
    units as u64
}

/// Exact 0-1 knapsack on costs rounded up to `granularity_usd`.
///
/// The table runs over suffixes of the item list so that the forward
/// reconstruction can prefer including each earlier item whenever that
/// keeps the optimum.
pub fn solve_knapsack_dp(
    risks: &[f64],
    costs: &[f64],
    budget_usd: f64,
    opts: &DpOptions,
) -> Result<UpgradePlan, OptimizeError> {
    validate(risks, costs, budget_usd)?;
    if !(opts.granularity_usd > 0.0 && opts.granularity_usd.is_finite()) {
        return Err(OptimizeError::InvalidInput(format!(
            "granularity must be positive, got {}",
            opts.granularity_usd
        )));
    }
    let g = opts.granularity_usd;
    let all = candidates(risks, costs, budget_usd);
    if all.iter().map(|&i| costs[i]).sum::<f64>() <= budget_usd {
        // Trivially optimal; rounding must not cost anything here.
        return Ok(UpgradePlan::from_selection(risks, costs, budget_usd, all, SolverKind::Dp));
    }
    let mut budget_units = (budget_usd / g).floor();
    if budget_units * g > budget_usd {
        budget_units -= 1.0;
    }

    let units: Vec<u64> = costs.iter().map(|&c| units_for(c, g)).collect();
    let items: Vec<usize> = all
        .into_iter()
        .filter(|&i| (units[i] as f64) <= budget_units)
        .collect();
    let capacity = budget_units as u128;
    if capacity > opts.max_units as u128 {
        return Err(OptimizeError::CapacityOverflow {
            what: "cost units",
            needed: capacity,
            limit: opts.max_units as u128,
        });
    }
    let bits = items.len() as u128 * (capacity + 1);
    if bits > opts.max_table_bits as u128 {
        return Err(OptimizeError::CapacityOverflow {
            what: "table bits",
            needed: bits,
            limit: opts.max_table_bits as u128,
        });
    }
    let capacity = capacity as usize;

    let words = (capacity + 1).div_ceil(64);
    let mut take = vec![0u64; items.len() * words];
    let mut best = vec![0.0f64; capacity + 1];
    for (k, &i) in items.iter().enumerate().rev() {
        let u = units[i] as usize;
        let r = risks[i];
        let row = &mut take[k * words..(k + 1) * words];
        for w in (u..=capacity).rev() {
            let with = best[w - u] + r;
            if with >= best[w] {
                best[w] = with;
                row[w / 64] |= 1 << (w % 64);
            }
        }
    }

    let mut selected = Vec::new();
    let mut w = capacity;
    for (k, &i) in items.iter().enumerate() {
        if take[k * words + w / 64] >> (w % 64) & 1 == 1 {
            selected.push(i);
            w -= units[i] as usize;
        }
    }
    Ok(UpgradePlan::from_selection(
        risks,
        costs,
        budget_usd,
        selected,
        SolverKind::Dp,
    ))
}
