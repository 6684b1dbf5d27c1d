//! Power-line networks read from feature-collection documents.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::raster::GridGeometry;

pub const DEFAULT_VOLTAGE_KEY: &str = "kV";

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("feature {feature}: unsupported geometry type {kind:?}")]
    UnsupportedGeometry { feature: usize, kind: String },
    #[error("line {line_id:?} has fewer than two distinct vertices")]
    DegenerateLine { line_id: String },
    #[error("line {line_id:?}: voltage {kv} kV is outside (0, 1000]")]
    InvalidVoltage { line_id: String, kv: f64 },
}

/// How vertex coordinates are interpreted when measuring lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrsMode {
    /// Longitude/latitude in degrees; great-circle lengths.
    Geographic,
    /// Projected coordinates in kilometres; Euclidean lengths.
    Planar,
}

impl std::str::FromStr for CrsMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "geographic" => Ok(CrsMode::Geographic),
            "planar" => Ok(CrsMode::Planar),
            other => Err(format!("unknown CRS mode {other:?}")),
        }
    }
}

impl std::fmt::Display for CrsMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CrsMode::Geographic => "geographic",
            CrsMode::Planar => "planar",
        })
    }
}

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLine {
    pub line_id: String,
    pub vertices: Vec<Point>,
    pub voltage_kv: Option<f64>,
    pub crs_mode: CrsMode,
}

#[derive(Debug, Clone)]
pub struct NetworkOptions {
    pub voltage_key: String,
    pub crs_mode: CrsMode,
}

impl Default for NetworkOptions {
    fn default() -> Self {
        Self {
            voltage_key: DEFAULT_VOLTAGE_KEY.to_string(),
            crs_mode: CrsMode::Planar,
        }
    }
}

/// Parses a feature collection of line strings.
///
/// Multi-part features become one line per part, suffixed `#0`, `#1`, ...
/// Consecutive duplicate vertices are dropped.
pub fn parse_network(text: &str, options: &NetworkOptions) -> Result<Vec<PowerLine>, NetworkError> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| NetworkError::MalformedDocument(e.to_string()))?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| NetworkError::MalformedDocument("missing \"features\" array".into()))?;

    let mut lines = Vec::with_capacity(features.len());
    for (index, feature) in features.iter().enumerate() {
        let properties = match feature.get("properties") {
            None | Some(Value::Null) => None,
            Some(Value::Object(map)) => Some(map),
            Some(_) => {
                return Err(NetworkError::MalformedDocument(format!(
                    "feature {index}: \"properties\" is not an object"
                )))
            }
        };
        let line_id = match properties.and_then(|p| p.get("id")) {
            None | Some(Value::Null) => format!("L{index}"),
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            Some(_) => {
                return Err(NetworkError::MalformedDocument(format!(
                    "feature {index}: \"id\" must be a string"
                )))
            }
        };
        let voltage_kv = match properties.and_then(|p| p.get(&options.voltage_key)) {
            None | Some(Value::Null) => None,
            Some(v) => {
                let kv = v.as_f64().ok_or_else(|| {
                    NetworkError::MalformedDocument(format!(
                        "feature {index}: voltage {:?} is not numeric",
                        options.voltage_key
                    ))
                })?;
                if !(kv > 0.0 && kv <= 1000.0) {
                    return Err(NetworkError::InvalidVoltage { line_id, kv });
                }
                Some(kv)
            }
        };

        let geometry = feature.get("geometry").ok_or_else(|| {
            NetworkError::MalformedDocument(format!("feature {index}: missing geometry"))
        })?;
        let kind = geometry
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| {
                NetworkError::MalformedDocument(format!("feature {index}: geometry without type"))
            })?;
        let coords = geometry.get("coordinates").ok_or_else(|| {
            NetworkError::MalformedDocument(format!("feature {index}: geometry without coordinates"))
        })?;
        match kind {
            "LineString" => {
                let vertices = parse_path(coords, index)?;
                lines.push(make_line(line_id, vertices, voltage_kv, options.crs_mode)?);
            }
            "MultiLineString" => {
                let parts = coords.as_array().ok_or_else(|| {
                    NetworkError::MalformedDocument(format!(
                        "feature {index}: MultiLineString coordinates must be an array"
                    ))
                })?;
                for (k, part) in parts.iter().enumerate() {
                    let vertices = parse_path(part, index)?;
                    lines.push(make_line(
                        format!("{line_id}#{k}"),
                        vertices,
                        voltage_kv,
                        options.crs_mode,
                    )?);
                }
            }
            other => {
                return Err(NetworkError::UnsupportedGeometry {
                    feature: index,
                    kind: other.to_string(),
                })
            }
        }
    }
    Ok(lines)
}

fn parse_path(coords: &Value, feature: usize) -> Result<Vec<Point>, NetworkError> {
    let bad = || NetworkError::MalformedDocument(format!("feature {feature}: invalid coordinates"));
    coords
        .as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|p| {
            let p = p.as_array().ok_or_else(bad)?;
            if p.len() < 2 {
                return Err(bad());
            }
            let x = p[0].as_f64().ok_or_else(bad)?;
            let y = p[1].as_f64().ok_or_else(bad)?;
            if !x.is_finite() || !y.is_finite() {
                return Err(bad());
            }
            Ok([x, y])
        })
        .collect()
}

fn make_line(
    line_id: String,
    mut vertices: Vec<Point>,
    voltage_kv: Option<f64>,
    crs_mode: CrsMode,
) -> Result<PowerLine, NetworkError> {
    vertices.dedup();
    if vertices.len() < 2 {
        return Err(NetworkError::DegenerateLine { line_id });
    }
    Ok(PowerLine {
        line_id,
        vertices,
        voltage_kv,
        crs_mode,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub out_of_extent: Vec<String>,
    pub missing_voltage: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.out_of_extent.is_empty() && self.missing_voltage.is_empty()
    }
}

/// Lists lines with a vertex outside the grid extent and lines without a
/// voltage attribute.
pub fn validate_network(lines: &[PowerLine], grid: &GridGeometry) -> ValidationReport {
    let mut report = ValidationReport::default();
    for line in lines {
        if line.vertices.iter().any(|&[x, y]| !grid.contains(x, y)) {
            report.out_of_extent.push(line.line_id.clone());
        }
        if line.voltage_kv.is_none() {
            report.missing_voltage.push(line.line_id.clone());
        }
    }
    report
}
