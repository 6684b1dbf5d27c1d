use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use fireline_core::geometry::LineSegment;
use fireline_core::optimize::{
    budget_sweep, compare_plans, plan_summary, segment_costs, write_plan_csv, write_sweep_csv, OptimizeError, Solver,
    SweepPoint, UpgradePlan,
};
use fireline_core::risk::{aggregate_scenarios, build_risk_table, write_risk_table_csv, write_risk_vector_csv, BaseMetric, RiskVector};
use serde_json::json;

use crate::args::{CompareArgs, Metric, OptimizeArgs, RiskArgs, SegmentArgs, SweepArgs};
use crate::error::CliError;
use crate::manifest::{self, Manifest};
use crate::pipeline::*;

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), String>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(CliError::Other)?;
    Ok(buf)
}

pub fn segment(args: &SegmentArgs) -> Result<(), CliError> {
    let net = &args.network;
    let segments = segment_network(&net.network, net.crs, &net.voltage_key, args.interval_km)?;
    let file = SegmentsFile {
        crs_mode: net.crs.into(),
        interval_km: args.interval_km,
        segments,
    };
    let mut text = serde_json::to_string(&file).map_err(|e| CliError::Other(e.to_string()))?;
    text.push('\n');
    write_bytes(&args.out, text.as_bytes())?;

    let total: f64 = file.segments.iter().map(|s| s.length_km).sum();
    println!("segments={}\ntotal_length_km={total}", file.segments.len());

    let mut m = Manifest::new("segment", args);
    m.input(&net.network)?;
    m.output(&args.out);
    m.write(&args.manifest.clone().unwrap_or_else(|| manifest::default_path(&args.out)))
}

pub fn risk(args: &RiskArgs) -> Result<(), CliError> {
    let file = read_segments(&args.segments)?;
    check_segments_valid(&file.segments, &args.segments)?;
    let (set, paths) = load_rasters(args.rasters.raster_dir.as_deref(), args.rasters.rasters.as_deref())?;
    warn_outside_extent(&file.segments, &set);
    let (table, vector) = risk_for(&file.segments, &set, &args.metric, &args.voltage)?;

    let bytes = csv_bytes(|b| write_risk_table_csv(&table, b).map_err(|e| e.to_string()))?;
    write_bytes(&args.table_out, &bytes)?;
    let bytes = csv_bytes(|b| write_risk_vector_csv(&vector, b).map_err(|e| e.to_string()))?;
    write_bytes(&args.vector_out, &bytes)?;
    println!(
        "segments={}\nscenarios={}\nprovenance={}\ntotal_risk={}",
        vector.len(),
        set.len(),
        vector.provenance,
        vector.total()
    );

    let mut m = Manifest::new("risk", args);
    m.input(&args.segments)?;
    for p in &paths {
        m.input(p)?;
    }
    m.output(&args.table_out);
    m.output(&args.vector_out);
    m.write(&args.manifest.clone().unwrap_or_else(|| manifest::default_path(&args.vector_out)))
}

fn plan_geojson(plan: &UpgradePlan, segments: &[LineSegment], risks: &[f64], costs: &[f64], all: bool) -> String {
    let mask = plan.mask(segments.len());
    let features: Vec<_> = segments
        .iter()
        .enumerate()
        .filter(|(i, _)| all || mask[*i])
        .map(|(i, s)| {
            json!({
                "type": "Feature",
                "properties": {
                    "segment_id": s.segment_id,
                    "parent_line_id": s.parent_line_id,
                    "selected": mask[i],
                    "R": risks[i],
                    "cost_usd": costs[i],
                    "length_km": s.length_km,
                    "voltage_kv": s.voltage_kv,
                },
                "geometry": {"type": "LineString", "coordinates": s.vertices},
            })
        })
        .collect();
    let mut text = json!({"type": "FeatureCollection", "features": features}).to_string();
    text.push('\n');
    text
}

pub fn optimize(args: &OptimizeArgs) -> Result<(), CliError> {
    check_budget(args.budget)?;
    let file = read_segments(&args.segments)?;
    check_segments_valid(&file.segments, &args.segments)?;
    let vector = read_vector(&args.risk, &file.segments)?;
    let costs = segment_costs(&file.segments, &cost_model(&args.solver)?);
    let plan = solve(&args.solver, &vector.values, &costs, args.budget)?;

    let bytes = csv_bytes(|b| {
        write_plan_csv(&plan, &vector.segment_ids, &vector.values, &costs, b).map_err(|e| e.to_string())
    })?;
    write_bytes(&args.plan_out, &bytes)?;
    let summary = format!("{}n_selected={}\n", plan_summary(&plan), plan.n_selected());
    let summary_path = args.plan_out.with_extension("summary");
    write_bytes(&summary_path, summary.as_bytes())?;
    print!("{summary}");
    if let Some(path) = &args.geojson_out {
        let text = plan_geojson(&plan, &file.segments, &vector.values, &costs, args.include_unselected);
        write_bytes(path, text.as_bytes())?;
    }

    let mut m = Manifest::new("optimize", args);
    m.input(&args.segments)?;
    m.input(&args.risk)?;
    m.output(&args.plan_out);
    m.output(&summary_path);
    if let Some(path) = &args.geojson_out {
        m.output(path);
    }
    m.write(&args.manifest.clone().unwrap_or_else(|| manifest::default_path(&args.plan_out)))
}

/// File label of a sweep series: `none` for whole lines, else `<interval>km`.
pub fn series_label(interval_km: f64) -> String {
    if interval_km == 0.0 {
        "none".to_string()
    } else {
        format!("{interval_km}km")
    }
}

fn sweep_budgets(args: &SweepArgs, max_total_cost: f64) -> Result<Vec<f64>, CliError> {
    match (&args.budgets.budgets, args.budgets.budget_steps) {
        (Some(b), None) => {
            for &x in b {
                check_budget(x)?;
            }
            Ok(b.clone())
        }
        (None, Some(steps)) if steps > 0 => Ok((0..=steps)
            .map(|k| if k == steps { max_total_cost } else { max_total_cost * k as f64 / steps as f64 })
            .collect()),
        _ => Err(CliError::Infeasible("give either --budgets or a positive --budget-steps".into())),
    }
}

fn run_series(args: &SweepArgs, risks: &[f64], costs: &[f64], budgets: &[f64]) -> Result<Vec<SweepPoint>, CliError> {
    match budget_sweep(risks, costs, budgets, &solver(&args.solver)?) {
        Err(OptimizeError::NodeLimitExceeded { limit }) => {
            eprintln!("warning: branch and bound hit its {limit}-node limit; sweeping with dp instead");
            Ok(budget_sweep(risks, costs, budgets, &Solver::Dp(dp_options(&args.solver)?))?)
        }
        other => Ok(other?),
    }
}

/// Label, budgets and removed risk of one sweep.
type Series = (String, Vec<f64>, Vec<f64>);

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let model = cost_model(&args.solver)?;
    let mut m = Manifest::new("sweep", args);

    let (series, out_files, manifest_path): (Vec<Series>, Vec<PathBuf>, PathBuf) =
        match (&args.segments, &args.risk, &args.network, &args.intervals) {
            (Some(seg_path), Some(risk_path), None, None) => {
                let file = read_segments(seg_path)?;
                check_segments_valid(&file.segments, seg_path)?;
                let vector = read_vector(risk_path, &file.segments)?;
                m.input(seg_path)?;
                m.input(risk_path)?;
                let costs = segment_costs(&file.segments, &model);
                let label = series_label(file.interval_km);
                (
                    vec![(label, vector.values, costs)],
                    vec![args.out.clone()],
                    manifest::default_path(&args.out),
                )
            }
            (None, None, Some(net), Some(intervals)) => {
                if intervals.is_empty() {
                    return Err(CliError::Infeasible("--intervals is empty".into()));
                }
                let (set, paths) = load_rasters(args.raster_dir.as_deref(), args.rasters.as_deref())?;
                m.input(net)?;
                for p in &paths {
                    m.input(p)?;
                }
                std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
                let mut series = Vec::new();
                let mut files = Vec::new();
                for &interval in intervals {
                    let segments = segment_network(net, args.crs, &args.voltage_key, interval)?;
                    warn_outside_extent(&segments, &set);
                    let (_, vector) = risk_for(&segments, &set, &args.metric, &args.voltage)?;
                    let label = series_label(interval);
                    files.push(args.out.join(format!("sweep_{label}.csv")));
                    series.push((label, vector.values, segment_costs(&segments, &model)));
                }
                (series, files, args.out.join("manifest.json"))
            }
            _ => {
                return Err(CliError::Infeasible(
                    "sweep needs either --segments with --risk, or --network with --intervals and rasters".into(),
                ))
            }
        };

    // Every series shares one budget list, reaching the costliest series total.
    let max_total = series
        .iter()
        .map(|(_, _, c)| c.iter().sum::<f64>())
        .fold(0.0, f64::max);
    let budgets = sweep_budgets(args, max_total)?;

    for ((label, risks, costs), path) in series.iter().zip(&out_files) {
        let points = run_series(args, risks, costs, &budgets)?;
        let bytes = csv_bytes(|b| write_sweep_csv(&points, b).map_err(|e| e.to_string()))?;
        write_bytes(path, &bytes)?;
        m.output(path);
        let last = points.last().expect("at least one budget");
        println!(
            "series={label} segments={} budgets={} final_removed_risk={}",
            risks.len(),
            points.len(),
            last.removed_risk
        );
    }
    m.write(&args.manifest.clone().unwrap_or(manifest_path))
}

fn parse_vector_arg(s: &str) -> Result<(Metric, PathBuf), CliError> {
    use clap::ValueEnum;
    let (name, path) = s
        .split_once('=')
        .ok_or_else(|| CliError::Infeasible(format!("--vector expects metric=path, got {s:?}")))?;
    let metric = Metric::from_str(name, true).map_err(|_| {
        CliError::Infeasible(format!("unknown metric {name:?}; expected maximum, cumulative or threshold"))
    })?;
    Ok((metric, PathBuf::from(path)))
}

/// Table of plans (columns) against risk metrics (rows).
pub fn compare_report(
    vectors: &BTreeMap<Metric, RiskVector>,
    costs: &[f64],
    budget: f64,
    solver: &crate::args::SolverArgs,
) -> Result<String, CliError> {
    let mut plans = BTreeMap::new();
    for (&metric, v) in vectors {
        plans.insert(metric, solve(solver, &v.values, costs, budget)?);
    }
    let report = compare_plans(&plans, vectors)?;
    let mut text = String::new();
    let _ = writeln!(text, "Risk metric minimized (columns) at budget {budget} USD, {} segments", costs.len());
    text.push('\n');
    text.push_str(&report.render());
    Ok(text)
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    check_budget(args.budget)?;
    let model = cost_model(&args.solver)?;
    let mut m = Manifest::new("compare", args);

    let (vectors, costs) = match (&args.segments, &args.network) {
        (Some(seg_path), None) => {
            let file = read_segments(seg_path)?;
            check_segments_valid(&file.segments, seg_path)?;
            m.input(seg_path)?;
            let mut vectors = BTreeMap::new();
            for s in &args.vector {
                let (metric, path) = parse_vector_arg(s)?;
                let v = read_vector(&path, &file.segments)?;
                m.input(&path)?;
                if vectors.insert(metric, v).is_some() {
                    return Err(CliError::Infeasible(format!("metric {metric} given twice")));
                }
            }
            (vectors, segment_costs(&file.segments, &model))
        }
        (None, Some(net)) => {
            let (set, paths) = load_rasters(args.raster_dir.as_deref(), args.rasters.as_deref())?;
            m.input(net)?;
            for p in &paths {
                m.input(p)?;
            }
            let segments = segment_network(net, args.crs, &args.voltage_key, args.interval_km)?;
            warn_outside_extent(&segments, &set);
            if !(args.percentile > 0.0 && args.percentile <= 100.0) {
                return Err(CliError::Infeasible(format!("percentile must be in (0, 100], got {}", args.percentile)));
            }
            let max_table = build_risk_table(&segments, &set, BaseMetric::Maximum);
            let cum_table = build_risk_table(&segments, &set, BaseMetric::Cumulative);
            let spec = threshold_spec(args.threshold_base, args.percentile, args.population, args.strict);
            let base_table = match spec.base_metric {
                BaseMetric::Maximum => &max_table,
                BaseMetric::Cumulative => &cum_table,
            };
            let vectors = BTreeMap::from([
                (Metric::Maximum, aggregate_scenarios(&max_table)),
                (Metric::Cumulative, aggregate_scenarios(&cum_table)),
                (Metric::Threshold, threshold_vector(base_table, &spec)?),
            ]);
            (vectors, segment_costs(&segments, &model))
        }
        _ => {
            return Err(CliError::Infeasible(
                "compare needs either --segments with --vector, or --network with rasters".into(),
            ))
        }
    };
    if vectors.len() < 2 {
        return Err(CliError::Infeasible("compare needs at least two metrics".into()));
    }

    let text = compare_report(&vectors, &costs, args.budget, &args.solver)?;
    write_bytes(&args.out, text.as_bytes())?;
    print!("{text}");
    m.output(&args.out);
    m.write(&args.manifest.clone().unwrap_or_else(|| manifest::default_path(&args.out)))
}
