//! Fire-potential rasters in the plain-text ASCII grid format.
//!
//! A grid is stored top row first; `x_origin`/`y_origin` locate the
//! lower-left corner of the lower-left cell. After [`remap_special_indices`]
//! every cell holds a risk index in `0..=150`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::par::{self, Parallelism};

/// Largest fire-potential index with a defined risk meaning.
pub const MAX_RISK_INDEX: i32 = 150;
/// Land-class codes (cloud, outside region, barren, agricultural, marsh,
/// water) that carry no fire potential.
pub const SPECIAL_INDEX_RANGE: std::ops::RangeInclusive<i32> = 248..=254;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("expected {expected} cell values, found {found}")]
    CellCountMismatch { expected: usize, found: usize },
    #[error("non-integer cell value {token:?} at position {position}")]
    NonIntegerValue { token: String, position: usize },
    #[error("cell value {value} at position {position} is outside the defined index domain")]
    ValueOutOfDomain { value: i32, position: usize },
    #[error("grid {label:?} is not aligned with the first grid: {field} differs")]
    GridMisalignment { label: String, field: &'static str },
    #[error("duplicate scenario id {0:?}")]
    DuplicateScenario(String),
    #[error("{paths} raster paths but {labels} scenario labels")]
    LabelCountMismatch { paths: usize, labels: usize },
    #[error("a scenario set needs at least one raster")]
    EmptyScenarioSet,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<RasterError>,
    },
}

impl RasterError {
    /// The underlying error, looking through file context.
    pub fn root(&self) -> &RasterError {
        match self {
            RasterError::InFile { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Georeference of a grid: everything except the cell values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub ncols: usize,
    pub nrows: usize,
    pub x_origin: f64,
    pub y_origin: f64,
    pub cell_size: f64,
}

impl GridGeometry {
    pub fn x_max(&self) -> f64 {
        self.x_origin + self.ncols as f64 * self.cell_size
    }

    pub fn y_max(&self) -> f64 {
        self.y_origin + self.nrows as f64 * self.cell_size
    }

    /// Closed-extent containment test in map units.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_origin && x <= self.x_max() && y >= self.y_origin && y <= self.y_max()
    }

    fn first_difference(&self, other: &GridGeometry) -> Option<&'static str> {
        if self.ncols != other.ncols {
            Some("ncols")
        } else if self.nrows != other.nrows {
            Some("nrows")
        } else if self.x_origin != other.x_origin {
            Some("xllcorner")
        } else if self.y_origin != other.y_origin {
            Some("yllcorner")
        } else if self.cell_size != other.cell_size {
            Some("cellsize")
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    geometry: GridGeometry,
    nodata_value: i32,
    values: Vec<i32>,
}

impl RasterGrid {
    pub fn new(
        geometry: GridGeometry,
        nodata_value: i32,
        values: Vec<i32>,
    ) -> Result<Self, RasterError> {
        if geometry.ncols == 0 || geometry.nrows == 0 {
            return Err(RasterError::MalformedHeader(
                "ncols and nrows must be positive".into(),
            ));
        }
        if !(geometry.cell_size > 0.0 && geometry.cell_size.is_finite()) {
            return Err(RasterError::MalformedHeader(format!(
                "cellsize must be positive, got {}",
                geometry.cell_size
            )));
        }
        if !geometry.x_origin.is_finite() || !geometry.y_origin.is_finite() {
            return Err(RasterError::MalformedHeader("non-finite corner".into()));
        }
        let expected = geometry.ncols * geometry.nrows;
        if values.len() != expected {
            return Err(RasterError::CellCountMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self {
            geometry,
            nodata_value,
            values,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn ncols(&self) -> usize {
        self.geometry.ncols
    }

    pub fn nrows(&self) -> usize {
        self.geometry.nrows
    }

    pub fn nodata_value(&self) -> i32 {
        self.nodata_value
    }

    /// Row-major cell values, top row first.
    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.values[row * self.geometry.ncols + col]
    }
}

/// Parses an ASCII grid document.
pub fn parse_ascii_grid(text: &str) -> Result<RasterGrid, RasterError> {
    let mut ncols: Option<usize> = None;
    let mut nrows: Option<usize> = None;
    let mut xll: Option<f64> = None;
    let mut yll: Option<f64> = None;
    let mut cellsize: Option<f64> = None;
    let mut nodata: Option<i32> = None;

    let mut rest = text;
    for _ in 0..6 {
        let (line, tail) = match rest.split_once('\n') {
            Some((line, tail)) => (line, tail),
            None => (rest, ""),
        };
        rest = tail;
        let mut tokens = line.split_whitespace();
        let (Some(key), Some(value), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(RasterError::MalformedHeader(format!(
                "expected `<key> <value>`, got {:?}",
                line.trim_end()
            )));
        };
        let key_lower = key.to_ascii_lowercase();
        let bad = |what: &str| RasterError::MalformedHeader(format!("{key}: invalid {what} {value:?}"));
        let slot_taken = match key_lower.as_str() {
            "ncols" => set_once(&mut ncols, value.parse().map_err(|_| bad("count"))?),
            "nrows" => set_once(&mut nrows, value.parse().map_err(|_| bad("count"))?),
            "xllcorner" => set_once(&mut xll, value.parse().map_err(|_| bad("coordinate"))?),
            "yllcorner" => set_once(&mut yll, value.parse().map_err(|_| bad("coordinate"))?),
            "cellsize" => set_once(&mut cellsize, value.parse().map_err(|_| bad("size"))?),
            "nodata_value" => set_once(&mut nodata, value.parse().map_err(|_| bad("integer"))?),
            _ => {
                return Err(RasterError::MalformedHeader(format!(
                    "unknown header key {key:?}"
                )))
            }
        };
        if slot_taken {
            return Err(RasterError::MalformedHeader(format!("duplicate key {key:?}")));
        }
    }

    let missing = |name: &str| RasterError::MalformedHeader(format!("missing key {name}"));
    let geometry = GridGeometry {
        ncols: ncols.ok_or_else(|| missing("ncols"))?,
        nrows: nrows.ok_or_else(|| missing("nrows"))?,
        x_origin: xll.ok_or_else(|| missing("xllcorner"))?,
        y_origin: yll.ok_or_else(|| missing("yllcorner"))?,
        cell_size: cellsize.ok_or_else(|| missing("cellsize"))?,
    };
    let nodata_value = nodata.ok_or_else(|| missing("NODATA_value"))?;

    let expected = geometry.ncols.saturating_mul(geometry.nrows);
    let mut values = Vec::with_capacity(expected.min(1 << 28));
    for (position, token) in rest.split_ascii_whitespace().enumerate() {
        let value = token
            .parse::<i32>()
            .map_err(|_| RasterError::NonIntegerValue {
                token: token.to_string(),
                position,
            })?;
        values.push(value);
    }
    RasterGrid::new(geometry, nodata_value, values)
}

fn set_once<T>(slot: &mut Option<T>, value: T) -> bool {
    let taken = slot.is_some();
    *slot = Some(value);
    taken
}

/// Writes a grid in the ASCII grid format accepted by [`parse_ascii_grid`].
/// Coordinates use the shortest representation that round-trips exactly.
pub fn write_ascii_grid(grid: &RasterGrid) -> String {
    let g = &grid.geometry;
    // ~4 bytes per cell for values up to three digits.
    let mut out = String::with_capacity(128 + g.ncols * g.nrows * 4);
    let _ = writeln!(out, "ncols {}", g.ncols);
    let _ = writeln!(out, "nrows {}", g.nrows);
    let _ = writeln!(out, "xllcorner {}", g.x_origin);
    let _ = writeln!(out, "yllcorner {}", g.y_origin);
    let _ = writeln!(out, "cellsize {}", g.cell_size);
    let _ = writeln!(out, "NODATA_value {}", grid.nodata_value);
    for row in grid.values.chunks(g.ncols) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Zeroes nodata cells and the non-burnable land-class codes 248..=254.
///
/// Any other value outside `0..=150` is rejected as corrupt input.
pub fn remap_special_indices(grid: RasterGrid) -> Result<RasterGrid, RasterError> {
    let RasterGrid {
        geometry,
        nodata_value,
        mut values,
    } = grid;
    for (position, v) in values.iter_mut().enumerate() {
        if *v == nodata_value || SPECIAL_INDEX_RANGE.contains(v) {
            *v = 0;
        } else if !(0..=MAX_RISK_INDEX).contains(v) {
            return Err(RasterError::ValueOutOfDomain {
                value: *v,
                position,
            });
        }
    }
    Ok(RasterGrid {
        geometry,
        nodata_value,
        values,
    })
}

/// One dated fire-potential map.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub grid: RasterGrid,
}

/// Remapped, mutually aligned scenario grids in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self, RasterError> {
        let first = scenarios.first().ok_or(RasterError::EmptyScenarioSet)?;
        let reference = first.grid.geometry;
        let mut seen = HashSet::with_capacity(scenarios.len());
        for s in &scenarios {
            if !seen.insert(s.id.as_str()) {
                return Err(RasterError::DuplicateScenario(s.id.clone()));
            }
            if let Some(field) = reference.first_difference(&s.grid.geometry) {
                return Err(RasterError::GridMisalignment {
                    label: s.id.clone(),
                    field,
                });
            }
        }
        Ok(Self { scenarios })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.scenarios[0].grid.geometry
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.scenarios.iter().map(|s| s.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }
}

pub fn read_ascii_grid(path: &Path) -> Result<RasterGrid, RasterError> {
    let text = std::fs::read_to_string(path).map_err(|source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_ascii_grid(&text).map_err(|e| RasterError::InFile {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

/// Reads, remaps and aligns one raster per scenario label.
pub fn load_scenario_set<P: AsRef<Path> + Sync>(
    paths: &[P],
    labels: &[String],
) -> Result<ScenarioSet, RasterError> {
    load_scenario_set_with(paths, labels, Parallelism::default())
}

pub fn load_scenario_set_with<P: AsRef<Path> + Sync>(
    paths: &[P],
    labels: &[String],
    parallelism: Parallelism,
) -> Result<ScenarioSet, RasterError> {
    if paths.len() != labels.len() {
        return Err(RasterError::LabelCountMismatch {
            paths: paths.len(),
            labels: labels.len(),
        });
    }
    if paths.is_empty() {
        return Err(RasterError::EmptyScenarioSet);
    }
    let grids = par::map(paths, parallelism, |p| {
        let path = p.as_ref();
        read_ascii_grid(path).and_then(|g| {
            remap_special_indices(g).map_err(|e| RasterError::InFile {
                path: path.to_path_buf(),
                source: Box::new(e),
            })
        })
    });
    let scenarios = grids
        .into_iter()
        .zip(labels)
        .map(|(grid, id)| {
            grid.map(|grid| Scenario {
                id: id.clone(),
                grid,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    ScenarioSet::new(scenarios)
}
