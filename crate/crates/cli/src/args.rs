use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "fireline", version, about = "Assign wildfire risk to power-line segments and choose segments to underground within a budget")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Split network lines into fixed-length segments.
    Segment(SegmentArgs),
    /// Score segments against a stack of daily risk rasters.
    Risk(RiskArgs),
    /// Choose segments to underground within one budget.
    Optimize(OptimizeArgs),
    /// Removed and residual risk over a list of budgets.
    Sweep(SweepArgs),
    /// Cross-evaluate plans built from different risk metrics.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Crs {
    Planar,
    Geographic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Maximum,
    Cumulative,
    Threshold,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Maximum => "Maximum",
            Metric::Cumulative => "Cumulative",
            Metric::Threshold => "Threshold",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    Maximum,
    Cumulative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    /// One threshold over every (segment, scenario) value.
    Global,
    /// One threshold per segment.
    PerLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverArg {
    Bb,
    Dp,
    Greedy,
    BruteForce,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NetworkArgs {
    /// Line network as a feature collection of line strings.
    #[arg(long)]
    pub network: PathBuf,
    /// Coordinate interpretation: planar kilometres or lon/lat degrees.
    #[arg(long, value_enum, default_value = "planar")]
    pub crs: Crs,
    /// Feature property holding the line voltage in kV.
    #[arg(long, default_value = "kV")]
    pub voltage_key: String,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct RasterArgs {
    /// Directory of `.asc` rasters, one per scenario.
    #[arg(long)]
    pub raster_dir: Option<PathBuf>,
    /// Raster files, one per scenario.
    #[arg(long, num_args = 1..)]
    pub rasters: Option<Vec<PathBuf>>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricArgs {
    #[arg(long, value_enum, default_value = "cumulative")]
    pub metric: Metric,
    /// Per-scenario metric the threshold is taken over.
    #[arg(long, value_enum, default_value = "cumulative")]
    pub threshold_base: Base,
    /// Percentile defining high risk.
    #[arg(long, default_value_t = 75.0)]
    pub percentile: f64,
    #[arg(long, value_enum, default_value = "global")]
    pub population: Population,
    /// Count only values strictly above the threshold.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VoltageArgs {
    /// Multiply risk of low-voltage segments by --kv-factor.
    #[arg(long)]
    pub kv_weighting: bool,
    #[arg(long, default_value_t = 69.0)]
    pub kv_threshold: f64,
    #[arg(long, default_value_t = 3.0)]
    pub kv_factor: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "bb")]
    pub solver: SolverArg,
    /// Undergrounding cost in USD per mile.
    #[arg(long, default_value_t = 2_000_000.0)]
    pub cost_per_mile: f64,
    /// Cost unit of the dp solver, in USD.
    #[arg(long, default_value_t = 100_000.0)]
    pub granularity: f64,
    /// Node limit of the bb solver before falling back to dp.
    #[arg(long, default_value_t = 100_000_000)]
    pub node_limit: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    /// Segment length in km; 0 keeps whole lines.
    #[arg(long, default_value_t = 0.0)]
    pub interval_km: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to `<out stem>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RiskArgs {
    /// Segments file written by `segment`.
    #[arg(long)]
    pub segments: PathBuf,
    #[command(flatten)]
    pub rasters: RasterArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub voltage: VoltageArgs,
    /// Per-scenario table, `segment_id,scenario_id,value,metric`.
    #[arg(long)]
    pub table_out: PathBuf,
    /// Aggregated vector, `segment_id,R,provenance`.
    #[arg(long)]
    pub vector_out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub segments: PathBuf,
    /// Risk vector written by `risk`.
    #[arg(long)]
    pub risk: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub budget: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Plan CSV, `segment_id,selected,R,cost_usd`.
    #[arg(long)]
    pub plan_out: PathBuf,
    /// Selected segments as a feature collection.
    #[arg(long)]
    pub geojson_out: Option<PathBuf>,
    /// Also write unselected segments to the feature collection.
    #[arg(long)]
    pub include_unselected: bool,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct BudgetList {
    /// Comma-separated budgets in USD, nondecreasing.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub budgets: Option<Vec<f64>>,
    /// Evenly spaced budgets from 0 to the cost of every segment.
    #[arg(long)]
    pub budget_steps: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Segments file; use with --risk.
    #[arg(long, requires = "risk", conflicts_with_all = ["network", "intervals"])]
    pub segments: Option<PathBuf>,
    #[arg(long, requires = "segments")]
    pub risk: Option<PathBuf>,
    /// Network file; use with rasters and --intervals.
    #[arg(long, requires = "intervals")]
    pub network: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "planar")]
    pub crs: Crs,
    #[arg(long, default_value = "kV")]
    pub voltage_key: String,
    /// Segmentation intervals in km, one series each; 0 keeps whole lines.
    #[arg(long, value_delimiter = ',')]
    pub intervals: Option<Vec<f64>>,
    #[arg(long)]
    pub raster_dir: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub rasters: Option<Vec<PathBuf>>,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub voltage: VoltageArgs,
    #[command(flatten)]
    pub budgets: BudgetList,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output CSV (with --segments) or directory (with --network).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Segments file; use with --vector.
    #[arg(long, requires = "vector", conflicts_with = "network")]
    pub segments: Option<PathBuf>,
    /// `metric=path` risk vector, e.g. `maximum=max.csv`; repeat per metric.
    #[arg(long, requires = "segments")]
    pub vector: Vec<String>,
    /// Network file; all three metrics are computed from the rasters.
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "planar")]
    pub crs: Crs,
    #[arg(long, default_value = "kV")]
    pub voltage_key: String,
    #[arg(long, default_value_t = 0.0)]
    pub interval_km: f64,
    #[arg(long)]
    pub raster_dir: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub rasters: Option<Vec<PathBuf>>,
    #[arg(long, value_enum, default_value = "cumulative")]
    pub threshold_base: Base,
    #[arg(long, default_value_t = 75.0)]
    pub percentile: f64,
    #[arg(long, value_enum, default_value = "global")]
    pub population: Population,
    #[arg(long)]
    pub strict: bool,
    #[arg(long, allow_negative_numbers = true)]
    pub budget: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Report text file; the report is also printed.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
