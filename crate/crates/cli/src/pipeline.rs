//! Steps shared by several subcommands.

use std::path::{Path, PathBuf};

use fireline_core::geometry::{segment_line, LineSegment};
use fireline_core::network::{parse_network, CrsMode, NetworkOptions};
use fireline_core::optimize::{
    BbOptions, CostModel, DpOptions, OptimizeError, Solver, UpgradePlan,
};
use fireline_core::raster::{load_scenario_set, RasterError, ScenarioSet};
use fireline_core::risk::{
    aggregate_scenarios, apply_voltage_weight, build_risk_table, compute_threshold, threshold_counts, BaseMetric,
    RiskTable, RiskVector, ThresholdPopulation, ThresholdSpec, VoltageWeighting,
};
use serde::{Deserialize, Serialize};

use crate::args::{Base, Crs, Metric, MetricArgs, Population, SolverArg, SolverArgs, VoltageArgs};
use crate::error::CliError;

/// Contents of the file written by `segment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentsFile {
    pub crs_mode: CrsMode,
    pub interval_km: f64,
    pub segments: Vec<LineSegment>,
}

impl From<Crs> for CrsMode {
    fn from(c: Crs) -> Self {
        match c {
            Crs::Planar => CrsMode::Planar,
            Crs::Geographic => CrsMode::Geographic,
        }
    }
}

impl From<Base> for BaseMetric {
    fn from(b: Base) -> Self {
        match b {
            Base::Maximum => BaseMetric::Maximum,
            Base::Cumulative => BaseMetric::Cumulative,
        }
    }
}

impl From<Population> for ThresholdPopulation {
    fn from(p: Population) -> Self {
        match p {
            Population::Global => ThresholdPopulation::GlobalPooled,
            Population::PerLine => ThresholdPopulation::PerLine,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn check_interval(interval_km: f64) -> Result<(), CliError> {
    if interval_km >= 0.0 && interval_km.is_finite() {
        Ok(())
    } else {
        Err(CliError::Infeasible(format!(
            "segment interval must be a nonnegative number of km, got {interval_km}"
        )))
    }
}

/// Parses and segments a network, warning about lines without a voltage.
pub fn segment_network(
    path: &Path,
    crs: Crs,
    voltage_key: &str,
    interval_km: f64,
) -> Result<Vec<LineSegment>, CliError> {
    check_interval(interval_km)?;
    let options = NetworkOptions {
        voltage_key: voltage_key.to_string(),
        crs_mode: crs.into(),
    };
    let lines = parse_network(&read_text(path)?, &options).map_err(|e| CliError::network(path, e))?;
    let missing = lines.iter().filter(|l| l.voltage_kv.is_none()).count();
    if missing > 0 {
        eprintln!("warning: {missing} of {} lines have no {voltage_key:?} property", lines.len());
    }
    Ok(lines.iter().flat_map(|l| segment_line(l, interval_km)).collect())
}

pub fn read_segments(path: &Path) -> Result<SegmentsFile, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::parse(path, e))
}

/// Raster files ordered by file stem, with the stems as scenario labels.
pub fn resolve_rasters(dir: Option<&Path>, files: Option<&[PathBuf]>) -> Result<(Vec<PathBuf>, Vec<String>), CliError> {
    let mut paths: Vec<PathBuf> = match (dir, files) {
        (Some(dir), _) => {
            let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
            let mut v = Vec::new();
            for entry in entries {
                let path = entry.map_err(|e| CliError::io(dir, e))?.path();
                let is_asc = path
                    .extension()
                    .is_some_and(|x| x.eq_ignore_ascii_case("asc"));
                if is_asc && path.is_file() {
                    v.push(path);
                }
            }
            v
        }
        (None, Some(files)) => files.to_vec(),
        (None, None) => return Err(CliError::Infeasible("no rasters given (--raster-dir or --rasters)".into())),
    };
    let stem = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    paths.sort_by(|a, b| stem(a).cmp(&stem(b)).then_with(|| a.cmp(b)));
    let labels = paths.iter().map(|p| stem(p)).collect();
    Ok((paths, labels))
}

pub fn load_rasters(dir: Option<&Path>, files: Option<&[PathBuf]>) -> Result<(ScenarioSet, Vec<PathBuf>), CliError> {
    let (paths, labels) = resolve_rasters(dir, files)?;
    if paths.is_empty() {
        return Err(RasterError::EmptyScenarioSet.into());
    }
    let set = load_scenario_set(&paths, &labels)?;
    Ok((set, paths))
}

pub fn warn_outside_extent(segments: &[LineSegment], set: &ScenarioSet) {
    let g = set.geometry();
    let outside = segments
        .iter()
        .filter(|s| s.vertices.iter().any(|&[x, y]| !g.contains(x, y)))
        .count();
    if outside > 0 {
        eprintln!(
            "warning: {outside} of {} segments extend beyond the raster extent; those parts carry no risk",
            segments.len()
        );
    }
}

pub fn check_metric_args(m: &MetricArgs) -> Result<(), CliError> {
    if !(m.percentile > 0.0 && m.percentile <= 100.0) {
        return Err(CliError::Infeasible(format!("percentile must be in (0, 100], got {}", m.percentile)));
    }
    Ok(())
}

pub fn check_voltage_args(v: &VoltageArgs) -> Result<(), CliError> {
    if !(v.kv_threshold > 0.0 && v.kv_threshold.is_finite()) || !(v.kv_factor > 0.0 && v.kv_factor.is_finite()) {
        return Err(CliError::Infeasible(format!(
            "kv threshold and factor must be positive, got {} and {}",
            v.kv_threshold, v.kv_factor
        )));
    }
    Ok(())
}

pub fn threshold_spec(base: Base, percentile: f64, population: Population, strict: bool) -> ThresholdSpec {
    ThresholdSpec {
        percentile,
        population: population.into(),
        strict,
        ..ThresholdSpec::new(base.into())
    }
}

/// Threshold counts of a base-metric table.
pub fn threshold_vector(table: &RiskTable, spec: &ThresholdSpec) -> Result<RiskVector, CliError> {
    let spec = compute_threshold(table, spec).map_err(|e| CliError::Infeasible(e.to_string()))?;
    threshold_counts(table, &spec).map_err(|e| CliError::Infeasible(e.to_string()))
}

/// Per-scenario table and aggregated vector for the configured metric.
pub fn risk_for(
    segments: &[LineSegment],
    set: &ScenarioSet,
    metric: &MetricArgs,
    voltage: &VoltageArgs,
) -> Result<(RiskTable, RiskVector), CliError> {
    check_metric_args(metric)?;
    check_voltage_args(voltage)?;
    let (table, vector) = match metric.metric {
        Metric::Maximum | Metric::Cumulative => {
            let base = if metric.metric == Metric::Maximum {
                BaseMetric::Maximum
            } else {
                BaseMetric::Cumulative
            };
            let table = build_risk_table(segments, set, base);
            let vector = aggregate_scenarios(&table);
            (table, vector)
        }
        Metric::Threshold => {
            let table = build_risk_table(segments, set, metric.threshold_base.into());
            let spec = threshold_spec(metric.threshold_base, metric.percentile, metric.population, metric.strict);
            let vector = threshold_vector(&table, &spec)?;
            (table, vector)
        }
    };
    if !voltage.kv_weighting {
        return Ok((table, vector));
    }
    let weighting = VoltageWeighting {
        kv_threshold: voltage.kv_threshold,
        factor: voltage.kv_factor,
    };
    let weighted = apply_voltage_weight(&vector, segments, weighting).map_err(|e| CliError::Other(e.to_string()))?;
    if !weighted.missing_voltage.is_empty() {
        eprintln!(
            "warning: {} segments have no voltage and were left unweighted",
            weighted.missing_voltage.len()
        );
    }
    Ok((table, weighted.vector))
}

pub fn cost_model(args: &SolverArgs) -> Result<CostModel, CliError> {
    if !(args.cost_per_mile > 0.0 && args.cost_per_mile.is_finite()) {
        return Err(CliError::Infeasible(format!(
            "cost per mile must be positive, got {}",
            args.cost_per_mile
        )));
    }
    Ok(CostModel {
        usd_per_mile: args.cost_per_mile,
    })
}

pub fn dp_options(args: &SolverArgs) -> Result<DpOptions, CliError> {
    if !(args.granularity > 0.0 && args.granularity.is_finite()) {
        return Err(CliError::Infeasible(format!(
            "dp granularity must be positive, got {}",
            args.granularity
        )));
    }
    Ok(DpOptions {
        granularity_usd: args.granularity,
        ..DpOptions::default()
    })
}

pub fn solver(args: &SolverArgs) -> Result<Solver, CliError> {
    Ok(match args.solver {
        SolverArg::Bb => Solver::BranchAndBound(BbOptions {
            node_limit: args.node_limit,
        }),
        SolverArg::Dp => Solver::Dp(dp_options(args)?),
        SolverArg::Greedy => Solver::Greedy,
        SolverArg::BruteForce => Solver::BruteForce,
    })
}

pub fn check_budget(budget: f64) -> Result<(), CliError> {
    if budget >= 0.0 && budget.is_finite() {
        Ok(())
    } else {
        Err(CliError::Infeasible(format!("budget must be a nonnegative number of USD, got {budget}")))
    }
}

/// Solves with the configured solver; bb falls back to dp at its node limit.
pub fn solve(args: &SolverArgs, risks: &[f64], costs: &[f64], budget: f64) -> Result<UpgradePlan, CliError> {
    check_budget(budget)?;
    match solver(args)?.solve(risks, costs, budget) {
        Err(OptimizeError::NodeLimitExceeded { limit }) => {
            eprintln!("warning: branch and bound hit its {limit}-node limit; solving with dp instead");
            Ok(Solver::Dp(dp_options(args)?).solve(risks, costs, budget)?)
        }
        other => Ok(other?),
    }
}

/// Fails unless `vector` lists exactly the segments, in order.
pub fn check_vector_matches(vector: &RiskVector, segments: &[LineSegment], path: &Path) -> Result<(), CliError> {
    if vector.len() != segments.len() {
        return Err(CliError::Mismatch {
            path: path.to_path_buf(),
            detail: format!("{} risk values for {} segments", vector.len(), segments.len()),
        });
    }
    if let Some(i) = segments
        .iter()
        .zip(&vector.segment_ids)
        .position(|(s, id)| &s.segment_id != id)
    {
        return Err(CliError::Mismatch {
            path: path.to_path_buf(),
            detail: format!(
                "row {} is {:?}, expected {:?}",
                i + 1,
                vector.segment_ids[i],
                segments[i].segment_id
            ),
        });
    }
    Ok(())
}

/// Reads a risk vector and checks it against the segments.
pub fn read_vector(path: &Path, segments: &[LineSegment]) -> Result<RiskVector, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let vector = fireline_core::risk::read_risk_vector_csv(std::io::BufReader::new(file))
        .map_err(|e| CliError::risk(path, e))?;
    check_vector_matches(&vector, segments, path)?;
    Ok(vector)
}

pub fn check_segments_valid(segments: &[LineSegment], path: &Path) -> Result<(), CliError> {
    if let Some(s) = segments.iter().find(|s| !(s.length_km > 0.0 && s.length_km.is_finite())) {
        return Err(CliError::parse(
            path,
            format!("segment {} has length {} km", s.segment_id, s.length_km),
        ));
    }
    Ok(())
}
