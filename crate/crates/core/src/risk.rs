//! Per-segment wildfire risk: maximum and cumulative (line-integral)
//! metrics per scenario, scenario aggregation, threshold counts, and
//! voltage weighting.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{traverse_cells, CellTraversal, LineSegment};
use crate::par::{self, Parallelism};
use crate::raster::{RasterGrid, ScenarioSet};

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("risk table is empty")]
    EmptyTable,
    #[error("threshold is defined on the {spec} metric but the table holds {table} risk")]
    MetricMismatch { spec: BaseMetric, table: BaseMetric },
    #[error("threshold has not been computed")]
    ThresholdNotComputed,
    #[error("percentile must lie in (0, 100], got {0}")]
    InvalidPercentile(f64),
    #[error("segment order does not match the risk vector (position {position})")]
    SegmentMismatch { position: usize },
    #[error("invalid risk file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-scenario risk definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseMetric {
    /// Largest cell value the segment passes through.
    Maximum,
    /// Sum of cell value times in-cell length (km).
    Cumulative,
}

impl BaseMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseMetric::Maximum => "maximum",
            BaseMetric::Cumulative => "cumulative",
        }
    }
}

impl fmt::Display for BaseMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaseMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maximum" | "max" => Ok(BaseMetric::Maximum),
            "cumulative" | "cum" => Ok(BaseMetric::Cumulative),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

fn cell_value(grid: &RasterGrid, row: usize, col: usize) -> f64 {
    f64::from(grid.get(row, col))
}

/// Maximum metric over a precomputed traversal; 0 when no cell is hit.
pub fn max_over(traversal: &CellTraversal, grid: &RasterGrid) -> f64 {
    traversal
        .cells
        .iter()
        .filter(|c| c.length_km > 0.0)
        .map(|c| cell_value(grid, c.row, c.col))
        .fold(0.0, f64::max)
}

/// Cumulative metric over a precomputed traversal.
pub fn cumulative_over(traversal: &CellTraversal, grid: &RasterGrid) -> f64 {
    traversal
        .cells
        .iter()
        .map(|c| cell_value(grid, c.row, c.col) * c.length_km)
        .sum()
}

pub fn risk_max(segment: &LineSegment, grid: &RasterGrid) -> f64 {
    max_over(&traverse_cells(segment, grid.geometry()), grid)
}

pub fn risk_cumulative(segment: &LineSegment, grid: &RasterGrid) -> f64 {
    cumulative_over(&traverse_cells(segment, grid.geometry()), grid)
}

/// `r[l][s]` for one base metric.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    pub metric: BaseMetric,
    pub segment_ids: Vec<String>,
    pub scenario_ids: Vec<String>,
    /// Row-major, one row per segment.
    values: Vec<f64>,
}

impl RiskTable {
    pub fn new(
        metric: BaseMetric,
        segment_ids: Vec<String>,
        scenario_ids: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self, RiskError> {
        if values.len() != segment_ids.len() * scenario_ids.len() {
            return Err(RiskError::Format(format!(
                "{} values for a {}x{} table",
                values.len(),
                segment_ids.len(),
                scenario_ids.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(RiskError::Format(format!("risk value {bad} is not a nonnegative number")));
        }
        Ok(Self {
            metric,
            segment_ids,
            scenario_ids,
            values,
        })
    }

    pub fn n_segments(&self) -> usize {
        self.segment_ids.len()
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenario_ids.len()
    }

    pub fn get(&self, segment: usize, scenario: usize) -> f64 {
        self.values[segment * self.n_scenarios() + scenario]
    }

    pub fn row(&self, segment: usize) -> &[f64] {
        let n = self.n_scenarios();
        &self.values[segment * n..(segment + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero, and a zero-scenario table has no cells.
        let n = self.n_scenarios().max(1);
        self.values.chunks_exact(n)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, scenario: usize) -> Vec<f64> {
        (0..self.n_segments()).map(|l| self.get(l, scenario)).collect()
    }

    /// Same table with every value multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * alpha).collect(),
            ..self.clone()
        }
    }
}

pub fn build_risk_table(
    segments: &[LineSegment],
    scenarios: &ScenarioSet,
    metric: BaseMetric,
) -> RiskTable {
    build_risk_table_with(segments, scenarios, metric, Parallelism::default())
}

/// Fills `r[l][s]` for every segment and scenario. Each segment's cell
/// traversal is computed once and reused across scenarios.
pub fn build_risk_table_with(
    segments: &[LineSegment],
    scenarios: &ScenarioSet,
    metric: BaseMetric,
    parallelism: Parallelism,
) -> RiskTable {
    let geometry = scenarios.geometry();
    let rows = par::map(segments, parallelism, |segment| {
        let traversal = traverse_cells(segment, geometry);
        scenarios
            .scenarios()
            .iter()
            .map(|s| match metric {
                BaseMetric::Maximum => max_over(&traversal, &s.grid),
                BaseMetric::Cumulative => cumulative_over(&traversal, &s.grid),
            })
            .collect::<Vec<_>>()
    });
    RiskTable {
        metric,
        segment_ids: segments.iter().map(|s| s.segment_id.clone()).collect(),
        scenario_ids: scenarios.ids().map(str::to_string).collect(),
        values: rows.into_iter().flatten().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKind {
    ScenarioSum,
    ThresholdCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ScenarioSum,
    ThresholdCount,
    VoltageWeighted(AggregateKind),
}

impl Provenance {
    pub fn base(self) -> AggregateKind {
        match self {
            Provenance::ScenarioSum => AggregateKind::ScenarioSum,
            Provenance::ThresholdCount => AggregateKind::ThresholdCount,
            Provenance::VoltageWeighted(base) => base,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |k: AggregateKind| match k {
            AggregateKind::ScenarioSum => "scenario_sum",
            AggregateKind::ThresholdCount => "threshold_count",
        };
        match self {
            Provenance::VoltageWeighted(base) => write!(f, "voltage_weighted({})", name(*base)),
            other => f.write_str(name(other.base())),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let base = |s: &str| match s {
            "scenario_sum" => Ok(AggregateKind::ScenarioSum),
            "threshold_count" => Ok(AggregateKind::ThresholdCount),
            other => Err(format!("unknown provenance {other:?}")),
        };
        if let Some(inner) = s
            .strip_prefix("voltage_weighted(")
            .and_then(|r| r.strip_suffix(')'))
        {
            return base(inner).map(Provenance::VoltageWeighted);
        }
        base(s).map(|k| match k {
            AggregateKind::ScenarioSum => Provenance::ScenarioSum,
            AggregateKind::ThresholdCount => Provenance::ThresholdCount,
        })
    }
}

/// Aggregated risk `R_l` per segment; the knapsack's item values.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskVector {
    pub segment_ids: Vec<String>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl RiskVector {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `R_l = sum_s r[l][s]`, summed in scenario order.
pub fn aggregate_scenarios(table: &RiskTable) -> RiskVector {
    let values = if table.n_scenarios() == 0 {
        vec![0.0; table.n_segments()]
    } else {
        table.rows().map(|row| row.iter().sum()).collect()
    };
    RiskVector {
        segment_ids: table.segment_ids.clone(),
        values,
        provenance: Provenance::ScenarioSum,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdPopulation {
    /// One threshold over all `(l, s)` values.
    GlobalPooled,
    /// One threshold per segment, over that segment's scenarios.
    PerLine,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tau {
    Global(f64),
    PerLine(Vec<f64>),
}

impl Tau {
    pub fn for_segment(&self, l: usize) -> f64 {
        match self {
            Tau::Global(t) => *t,
            Tau::PerLine(ts) => ts[l],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec {
    pub base_metric: BaseMetric,
    pub percentile: f64,
    pub population: ThresholdPopulation,
    /// Count only values strictly above the threshold.
    pub strict: bool,
    pub tau: Option<Tau>,
}

impl ThresholdSpec {
    pub fn new(base_metric: BaseMetric) -> Self {
        Self {
            base_metric,
            percentile: 75.0,
            population: ThresholdPopulation::GlobalPooled,
            strict: false,
            tau: None,
        }
    }
}

/// Rank `ceil(p/100 * n)` (1-based, at least 1) of a population of `n`.
pub fn nearest_rank(percentile: f64, n: usize) -> usize {
    let x = percentile * n as f64 / 100.0;
    // Absorb representation error such as 70 * 10 / 100 = 7.000000000000001.
    let rank = (x - x.abs() * 1e-12).ceil() as usize;
    rank.clamp(1, n.max(1))
}

/// Nearest-rank percentile; reorders `values`.
pub fn nearest_rank_percentile(values: &mut [f64], percentile: f64) -> f64 {
    let k = nearest_rank(percentile, values.len());
    let (_, v, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

/// Fills `spec.tau` from the table.
pub fn compute_threshold(table: &RiskTable, spec: &ThresholdSpec) -> Result<ThresholdSpec, RiskError> {
    if spec.base_metric != table.metric {
        return Err(RiskError::MetricMismatch {
            spec: spec.base_metric,
            table: table.metric,
        });
    }
    if !(spec.percentile > 0.0 && spec.percentile <= 100.0) {
        return Err(RiskError::InvalidPercentile(spec.percentile));
    }
    if table.values.is_empty() {
        return Err(RiskError::EmptyTable);
    }
    let tau = match spec.population {
        ThresholdPopulation::GlobalPooled => {
            let mut pool = table.values.clone();
            Tau::Global(nearest_rank_percentile(&mut pool, spec.percentile))
        }
        ThresholdPopulation::PerLine => Tau::PerLine(
            table
                .rows()
                .map(|row| nearest_rank_percentile(&mut row.to_vec(), spec.percentile))
                .collect(),
        ),
    };
    Ok(ThresholdSpec {
        tau: Some(tau),
        ..spec.clone()
    })
}

/// Number of scenarios in which each segment meets (or, in strict mode,
/// exceeds) its threshold.
pub fn threshold_counts(table: &RiskTable, spec: &ThresholdSpec) -> Result<RiskVector, RiskError> {
    let tau = spec.tau.as_ref().ok_or(RiskError::ThresholdNotComputed)?;
    if spec.base_metric != table.metric {
        return Err(RiskError::MetricMismatch {
            spec: spec.base_metric,
            table: table.metric,
        });
    }
    if let Tau::PerLine(ts) = tau {
        if ts.len() != table.n_segments() {
            return Err(RiskError::SegmentMismatch {
                position: ts.len().min(table.n_segments()),
            });
        }
    }
    let values = (0..table.n_segments())
        .map(|l| {
            let t = tau.for_segment(l);
            table
                .row(l)
                .iter()
                .filter(|&&r| if spec.strict { r > t } else { r >= t })
                .count() as f64
        })
        .collect();
    Ok(RiskVector {
        segment_ids: table.segment_ids.clone(),
        values,
        provenance: Provenance::ThresholdCount,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageWeighting {
    /// Segments rated below this voltage are weighted.
    pub kv_threshold: f64,
    pub factor: f64,
}

impl Default for VoltageWeighting {
    fn default() -> Self {
        Self {
            kv_threshold: 69.0,
            factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRisk {
    pub vector: RiskVector,
    /// Segments left unweighted because they carry no voltage.
    pub missing_voltage: Vec<String>,
}

/// Multiplies `R_l` by the factor for segments below the voltage
/// threshold. Segments without a voltage are left unchanged and reported.
pub fn apply_voltage_weight(
    vector: &RiskVector,
    segments: &[LineSegment],
    weighting: VoltageWeighting,
) -> Result<WeightedRisk, RiskError> {
    if segments.len() != vector.len() {
        return Err(RiskError::SegmentMismatch {
            position: segments.len().min(vector.len()),
        });
    }
    let mut missing_voltage = Vec::new();
    let mut values = Vec::with_capacity(vector.len());
    for (position, ((seg, id), &r)) in segments
        .iter()
        .zip(&vector.segment_ids)
        .zip(&vector.values)
        .enumerate()
    {
        if &seg.segment_id != id {
            return Err(RiskError::SegmentMismatch { position });
        }
        values.push(match seg.voltage_kv {
            Some(kv) if kv < weighting.kv_threshold => weighting.factor * r,
            Some(_) => r,
            None => {
                missing_voltage.push(seg.segment_id.clone());
                r
            }
        });
    }
    Ok(WeightedRisk {
        vector: RiskVector {
            segment_ids: vector.segment_ids.clone(),
            values,
            provenance: Provenance::VoltageWeighted(vector.provenance.base()),
        },
        missing_voltage,
    })
}

/// `segment_id,scenario_id,value,metric`, one row per `(l, s)`.
pub fn write_risk_table_csv<W: Write>(table: &RiskTable, out: W) -> Result<(), RiskError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["segment_id", "scenario_id", "value", "metric"])?;
    let metric = table.metric.as_str();
    for (l, seg) in table.segment_ids.iter().enumerate() {
        for (s, scen) in table.scenario_ids.iter().enumerate() {
            w.write_record([seg, scen, &table.get(l, s).to_string(), metric])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `segment_id,R,provenance`.
pub fn write_risk_vector_csv<W: Write>(vector: &RiskVector, out: W) -> Result<(), RiskError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["segment_id", "R", "provenance"])?;
    let provenance = vector.provenance.to_string();
    for (id, r) in vector.segment_ids.iter().zip(&vector.values) {
        w.write_record([id, &r.to_string(), &provenance])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_risk_vector_csv<R: Read>(input: R) -> Result<RiskVector, RiskError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["segment_id", "R", "provenance"] {
        return Err(RiskError::Format(format!(
            "expected header segment_id,R,provenance, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut segment_ids = Vec::new();
    let mut values = Vec::new();
    let mut provenance: Option<Provenance> = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let r: f64 = record[1]
            .parse()
            .map_err(|_| RiskError::Format(format!("row {}: bad R {:?}", line + 1, &record[1])))?;
        if !(r >= 0.0 && r.is_finite()) {
            return Err(RiskError::Format(format!("row {}: negative or non-finite R", line + 1)));
        }
        let p: Provenance = record[2].parse().map_err(RiskError::Format)?;
        match provenance {
            None => provenance = Some(p),
            Some(q) if q != p => {
                return Err(RiskError::Format(format!("row {}: mixed provenance", line + 1)))
            }
            _ => {}
        }
        segment_ids.push(record[0].to_string());
        values.push(r);
    }
    Ok(RiskVector {
        segment_ids,
        values,
        provenance: provenance.unwrap_or(Provenance::ScenarioSum),
    })
}
