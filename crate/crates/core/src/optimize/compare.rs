use std::collections::BTreeMap;
use std::fmt::{self, Display, Write as _};

use super::{OptimizeError, UpgradePlan};
use crate::risk::RiskVector;

/// Exact-match count between two plans.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOverlap<K> {
    pub a: K,
    pub b: K,
    pub matches: usize,
    /// Matches as a percentage of each plan's size; `None` for an empty plan.
    pub percent_of_a: Option<f64>,
    pub percent_of_b: Option<f64>,
}

/// Cross-evaluation of plans built from different risk metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<K> {
    /// Plan keys, in key order.
    pub plans: Vec<K>,
    /// Risk-vector keys, in key order.
    pub metrics: Vec<K>,
    pub n_selected: Vec<usize>,
    /// `percent_reduction[m][p]`: share of metric `m` removed by plan `p`;
    /// `None` when metric `m` sums to zero.
    pub percent_reduction: Vec<Vec<Option<f64>>>,
    pub pairwise: Vec<PairOverlap<K>>,
    /// Segments selected by every plan.
    pub common: usize,
    pub common_percent: Vec<Option<f64>>,
}

fn percent(part: usize, whole: usize) -> Option<f64> {
    (whole > 0).then(|| 100.0 * part as f64 / whole as f64)
}

fn check_universe(
    ids: &[String],
    vector: &RiskVector,
    key: &dyn fmt::Debug,
) -> Result<(), OptimizeError> {
    if vector.segment_ids.len() != vector.values.len() {
        return Err(OptimizeError::SegmentUniverseMismatch(format!(
            "vector {key:?} has {} ids but {} values",
            vector.segment_ids.len(),
            vector.values.len()
        )));
    }
    if vector.segment_ids != ids {
        let at = ids
            .iter()
            .zip(&vector.segment_ids)
            .position(|(a, b)| a != b)
            .unwrap_or(ids.len().min(vector.segment_ids.len()));
        return Err(OptimizeError::SegmentUniverseMismatch(format!(
            "vector {key:?} differs from the first vector at position {at}"
        )));
    }
    Ok(())
}

pub fn compare_plans<K: Ord + Clone + fmt::Debug>(
    plans: &BTreeMap<K, UpgradePlan>,
    vectors: &BTreeMap<K, RiskVector>,
) -> Result<ComparisonReport<K>, OptimizeError> {
    let Some((_, first)) = vectors.iter().next() else {
        return Err(OptimizeError::SegmentUniverseMismatch("no risk vectors".into()));
    };
    if plans.is_empty() {
        return Err(OptimizeError::SegmentUniverseMismatch("no plans".into()));
    }
    let ids = &first.segment_ids;
    let n = ids.len();
    for (key, v) in vectors {
        check_universe(ids, v, key)?;
    }
    let mut masks = Vec::with_capacity(plans.len());
    for (key, plan) in plans {
        if let Some(&i) = plan.selected.iter().find(|&&i| i >= n) {
            return Err(OptimizeError::SegmentUniverseMismatch(format!(
                "plan {key:?} selects index {i} of {n} segments"
            )));
        }
        masks.push(plan.mask(n));
    }

    let percent_reduction = vectors
        .values()
        .map(|v| {
            let total: f64 = v.values.iter().sum();
            masks
                .iter()
                .map(|mask| {
                    let removed: f64 = v.values.iter().zip(mask).filter(|(_, &m)| m).map(|(r, _)| r).sum();
                    (total > 0.0).then(|| 100.0 * removed / total)
                })
                .collect()
        })
        .collect();

    let keys: Vec<K> = plans.keys().cloned().collect();
    let sizes: Vec<usize> = plans.values().map(|p| p.n_selected()).collect();
    let mut pairwise = Vec::new();
    for a in 0..keys.len() {
        for b in a + 1..keys.len() {
            let matches = (0..n).filter(|&i| masks[a][i] && masks[b][i]).count();
            pairwise.push(PairOverlap {
                a: keys[a].clone(),
                b: keys[b].clone(),
                matches,
                percent_of_a: percent(matches, sizes[a]),
                percent_of_b: percent(matches, sizes[b]),
            });
        }
    }
    let common = (0..n).filter(|&i| masks.iter().all(|m| m[i])).count();

    Ok(ComparisonReport {
        plans: keys,
        metrics: vectors.keys().cloned().collect(),
        common_percent: sizes.iter().map(|&s| percent(common, s)).collect(),
        n_selected: sizes,
        percent_reduction,
        pairwise,
        common,
    })
}

fn fmt_pct(p: Option<f64>) -> String {
    match p {
        Some(p) => format!("{p:.1}"),
        None => "n/a".to_string(),
    }
}

impl<K: Display> ComparisonReport<K> {
    /// Plain-text table: one column per plan, a `Segments Upgraded` row and
    /// one `<Metric> Risk [% reduction]` row per risk vector, followed by
    /// exact-match counts.
    pub fn render(&self) -> String {
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec![String::new()];
        header.extend(self.plans.iter().map(|k| k.to_string()));
        rows.push(header);
        let mut upgraded = vec!["Segments Upgraded".to_string()];
        upgraded.extend(self.n_selected.iter().map(|n| n.to_string()));
        rows.push(upgraded);
        for (m, key) in self.metrics.iter().enumerate() {
            let mut row = vec![format!("{key} Risk [% reduction]")];
            row.extend(self.percent_reduction[m].iter().map(|&p| fmt_pct(p)));
            rows.push(row);
        }

        let ncols = rows[0].len();
        let widths: Vec<usize> = (0..ncols)
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let mut line = format!("{:<w$}", row[0], w = widths[0]);
            for (cell, &w) in row.iter().zip(&widths).skip(1) {
                let _ = write!(line, "  {cell:>w$}");
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }

        out.push_str("\nExact matches\n");
        for p in &self.pairwise {
            let _ = writeln!(
                out,
                "{} & {}: {} ({}% of {}, {}% of {})",
                p.a,
                p.b,
                p.matches,
                fmt_pct(p.percent_of_a),
                p.a,
                fmt_pct(p.percent_of_b),
                p.b
            );
        }
        let shares: Vec<String> = self
            .plans
            .iter()
            .zip(&self.common_percent)
            .map(|(k, &p)| format!("{}% of {k}", fmt_pct(p)))
            .collect();
        let _ = writeln!(out, "All plans: {} ({})", self.common, shares.join(", "));
        out
    }
}
