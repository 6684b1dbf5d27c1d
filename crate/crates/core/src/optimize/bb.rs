use super::{candidates, sort_by_density, validate, OptimizeError, SolverKind, UpgradePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BbOptions {
    /// Search states generated, over all searches of one solve, before
    /// giving up.
    pub node_limit: u64,
}

impl Default for BbOptions {
    fn default() -> Self {
        Self {
            node_limit: 100_000_000,
        }
    }
}

/// Exact 0-1 knapsack on real-valued costs.
///
/// The optimum comes from a branch and bound that starts at the greedy
/// break solution and widens a core of items around the break item, one
/// include or exclude decision at a time. Partial selections are pruned by
/// fractional-relaxation bounds and by dominance (no heavier, less valuable
/// state is kept), which collapses the many equivalent branches of tied
/// instances.
///
/// Fractional bounds then fix every item on which all optimal selections
/// agree. The free items left are decided in index order, taking each one
/// whenever the optimum is still reachable with it, which yields the
/// canonical selection.
pub fn solve_knapsack_bb(
    risks: &[f64],
    costs: &[f64],
    budget_usd: f64,
    opts: &BbOptions,
) -> Result<UpgradePlan, OptimizeError> {
    validate(risks, costs, budget_usd)?;
    let items = candidates(risks, costs, budget_usd);
    let plan = |selected| {
        UpgradePlan::from_selection(risks, costs, budget_usd, selected, SolverKind::BranchAndBound)
    };
    if items.is_empty() {
        return Ok(plan(Vec::new()));
    }
    let total_cost: f64 = items.iter().map(|&i| costs[i]).sum();
    if total_cost <= budget_usd {
        return Ok(plan(items));
    }

    let r: Vec<f64> = items.iter().map(|&i| risks[i]).collect();
    let c: Vec<f64> = items.iter().map(|&i| costs[i]).collect();
    let mut search = CoreSearch {
        r: &r,
        c: &c,
        bound: Bound::for_risks(&r),
        nodes: 0,
        node_limit: opts.node_limit,
    };
    let all: Vec<usize> = (0..r.len()).collect();
    let optimum = search.run(&all, budget_usd, Goal::Maximize)?;

    // Rounding differs between summation orders; accept anything within a
    // few ulps per item of the optimum.
    let target = optimum - 8.0 * f64::EPSILON * optimum * (r.len() + 1) as f64;
    let (mut chosen, free) = DensityPrefix::new(&r, &c).reduce(budget_usd, target, search.bound);
    let mut room = budget_usd - chosen.iter().map(|&k| c[k]).sum::<f64>();
    let mut need = target - chosen.iter().map(|&k| r[k]).sum::<f64>();
    for (pos, &k) in free.iter().enumerate() {
        if c[k] <= room && search.reaches(&free[pos + 1..], room - c[k], need - r[k])? {
            chosen.push(k);
            room -= c[k];
            need -= r[k];
        }
    }
    Ok(plan(chosen.into_iter().map(|k| items[k]).collect()))
}

/// Integer-valued risks (threshold counts, say) only reach integer totals,
/// so a relaxation bound may be rounded down.
#[derive(Debug, Clone, Copy)]
enum Bound {
    Real,
    Integer,
}

impl Bound {
    fn for_risks(r: &[f64]) -> Self {
        let limit = 2f64.powi(52) / (r.len() as f64 + 1.0);
        if r.iter().all(|&x| x.fract() == 0.0 && x < limit) {
            Bound::Integer
        } else {
            Bound::Real
        }
    }

    fn tighten(self, relaxation: f64) -> f64 {
        match self {
            Bound::Real => relaxation,
            // The margin absorbs rounding in the relaxation itself.
            Bound::Integer => (relaxation + 1e-9 * relaxation.abs().max(1.0)).floor(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Goal {
    Maximize,
    /// Stop as soon as some selection reaches this value.
    Reach(f64),
}

struct CoreSearch<'a> {
    r: &'a [f64],
    c: &'a [f64],
    bound: Bound,
    nodes: u64,
    node_limit: u64,
}

impl CoreSearch<'_> {
    /// Whether some subset of `items` within `room` is worth at least `need`.
    fn reaches(&mut self, items: &[usize], room: f64, need: f64) -> Result<bool, OptimizeError> {
        if need <= 0.0 {
            return Ok(true);
        }
        Ok(self.run(items, room, Goal::Reach(need))? >= need)
    }

    /// Best value over subsets of `items` within `budget`; with
    /// [`Goal::Reach`] the search may stop at any value reaching the goal.
    fn run(&mut self, items: &[usize], budget: f64, goal: Goal) -> Result<f64, OptimizeError> {
        let (r, c) = (self.r, self.c);
        let mut order = items.to_vec();
        sort_by_density(&mut order, r, c);
        let n = order.len();
        let density = |k: usize| r[order[k]] / c[order[k]];
        let next_density = |t: usize| if t < n { density(t) } else { 0.0 };

        let (mut w, mut v, mut b) = (0.0, 0.0, 0);
        while b < n && w + c[order[b]] <= budget {
            w += c[order[b]];
            v += r[order[b]];
            b += 1;
        }
        // Greedy completion past the break item seeds the incumbent.
        let mut best = {
            let (mut gw, mut gv) = (w, v);
            for &i in &order[b..] {
                if gw + c[i] <= budget {
                    gw += c[i];
                    gv += r[i];
                }
            }
            gv
        };
        let floor = match goal {
            Goal::Maximize => f64::NEG_INFINITY,
            Goal::Reach(need) if best >= need => return Ok(best),
            Goal::Reach(need) => need - 1e-9 * need.abs().max(1.0),
        };

        // Items before `s` are in every state, items from `t` in none.
        let mut states = vec![(w, v)];
        let (mut s, mut t) = (b, b);
        while !states.is_empty() && (s > 0 || t < n) {
            if t < n {
                let i = order[t];
                t += 1;
                states = merge(&states, c[i], r[i]);
                let next_out = (s > 0).then(|| density(s - 1));
                self.prune(&mut states, budget, next_density(t), next_out, &mut best, floor)?;
            }
            if s > 0 {
                s -= 1;
                let i = order[s];
                states = merge(&states, -c[i], -r[i]);
                let next_out = (s > 0).then(|| density(s - 1));
                self.prune(&mut states, budget, next_density(t), next_out, &mut best, floor)?;
            }
            if let Goal::Reach(need) = goal {
                if best >= need {
                    break;
                }
            }
        }
        Ok(best)
    }

    /// Drops states whose bound cannot beat `best` or reach `floor`.
    /// Feasible states can only add items of density up to `next_in`;
    /// overweight ones must shed weight worth at least `next_out` per unit.
    fn prune(
        &mut self,
        states: &mut Vec<(f64, f64)>,
        budget: f64,
        next_in: f64,
        next_out: Option<f64>,
        best: &mut f64,
        floor: f64,
    ) -> Result<(), OptimizeError> {
        self.nodes += states.len() as u64;
        if self.nodes > self.node_limit {
            return Err(OptimizeError::NodeLimitExceeded {
                limit: self.node_limit,
            });
        }
        for &(w, v) in states.iter() {
            if w <= budget && v > *best {
                *best = v;
            }
        }
        let (bound, best) = (self.bound, *best);
        states.retain(|&(w, v)| {
            let relaxation = if w <= budget {
                v + (budget - w) * next_in
            } else {
                match next_out {
                    Some(d) => v - (w - budget) * d,
                    None => return false,
                }
            };
            let ub = bound.tighten(relaxation);
            ub > best && ub >= floor
        });
        Ok(())
    }
}

/// Union of `states` and `states` shifted by one item, keeping only states
/// that no lighter state matches in value. Input and output are sorted by
/// weight with strictly increasing values.
fn merge(states: &[(f64, f64)], dw: f64, dv: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(states.len() * 2);
    let mut push = |p: (f64, f64)| {
        if out.last().is_none_or(|last| p.1 > last.1) {
            out.push(p);
        }
    };
    let (mut a, mut b) = (0, 0);
    while a < states.len() || b < states.len() {
        let shifted = (b < states.len()).then(|| (states[b].0 + dw, states[b].1 + dv));
        let take_a = match (states.get(a), shifted) {
            (Some(x), Some(y)) => x.0 < y.0 || (x.0 == y.0 && x.1 >= y.1),
            (Some(_), None) => true,
            _ => false,
        };
        if take_a {
            push(states[a]);
            a += 1;
        } else {
            push(shifted.expect("b in range"));
            b += 1;
        }
    }
    out
}

/// Items sorted by density with prefix sums, for fractional bounds.
struct DensityPrefix {
    order: Vec<usize>,
    risk: Vec<f64>,
    cost: Vec<f64>,
    prefix_risk: Vec<f64>,
    prefix_cost: Vec<f64>,
}

impl DensityPrefix {
    fn new(r: &[f64], c: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..r.len()).collect();
        sort_by_density(&mut order, r, c);
        let risk: Vec<f64> = order.iter().map(|&i| r[i]).collect();
        let cost: Vec<f64> = order.iter().map(|&i| c[i]).collect();
        let mut prefix_risk = vec![0.0; r.len() + 1];
        let mut prefix_cost = vec![0.0; r.len() + 1];
        for k in 0..r.len() {
            prefix_risk[k + 1] = prefix_risk[k] + risk[k];
            prefix_cost[k + 1] = prefix_cost[k] + cost[k];
        }
        Self {
            order,
            risk,
            cost,
            prefix_risk,
            prefix_cost,
        }
    }

    fn len(&self) -> usize {
        self.risk.len()
    }

    /// Fractional knapsack value of every item except rank `skip` in `room`.
    fn relaxation(&self, room: f64, skip: usize) -> f64 {
        let n = self.len();
        let without = |j: usize, p: &[f64], x: &[f64]| p[j] - if skip < j { x[skip] } else { 0.0 };
        // Largest j whose first j ranks (less `skip`) fit.
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if without(mid, &self.prefix_cost, &self.cost) <= room {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let j = lo;
        let mut value = without(j, &self.prefix_risk, &self.risk);
        let next = if j == skip { j + 1 } else { j };
        if next < n {
            let left = room - without(j, &self.prefix_cost, &self.cost);
            value += left.max(0.0) * self.risk[next] / self.cost[next];
        }
        value
    }

    /// Splits items into those every selection worth `target` or more
    /// contains, and the rest, both by ascending index. Items that no such
    /// selection contains are dropped.
    fn reduce(&self, budget: f64, target: f64, bound: Bound) -> (Vec<usize>, Vec<usize>) {
        let n = self.len();
        let below = |relaxation: f64| bound.tighten(relaxation) < target - 1e-9 * target.abs().max(1.0);
        let fits = self.prefix_cost.partition_point(|&p| p <= budget).saturating_sub(1);
        let mut fixed = Vec::new();
        let mut free = Vec::new();
        for k in 0..n {
            if k < fits {
                if below(self.relaxation(budget, k)) {
                    fixed.push(self.order[k]);
                } else {
                    free.push(self.order[k]);
                }
            } else if self.cost[k] <= budget && !below(self.risk[k] + self.relaxation(budget - self.cost[k], k)) {
                free.push(self.order[k]);
            }
        }
        fixed.sort_unstable();
        free.sort_unstable();
        (fixed, free)
    }
}
