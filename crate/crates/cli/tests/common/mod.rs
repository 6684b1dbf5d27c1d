#![allow(dead_code)]

use std::path::{Path, PathBuf};

use fireline_core::raster::{write_ascii_grid, GridGeometry, RasterGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs the CLI in-process and returns its exit code.
pub fn run<S: AsRef<str>>(args: &[S]) -> i32 {
    let argv = std::iter::once("fireline".to_string()).chain(args.iter().map(|a| a.as_ref().to_string()));
    fireline_cli::main_with_args(argv)
}

#[track_caller]
pub fn run_ok<S: AsRef<str>>(args: &[S]) {
    let code = run(args);
    let shown: Vec<&str> = args.iter().map(|a| a.as_ref()).collect();
    assert_eq!(code, 0, "fireline {}", shown.join(" "));
}

pub fn p(path: &Path) -> String {
    path.display().to_string()
}

pub struct Line {
    pub id: String,
    pub coords: Vec<[f64; 2]>,
    pub kv: Option<f64>,
}

pub fn write_network(path: &Path, lines: &[Line]) {
    let features: Vec<_> = lines
        .iter()
        .map(|l| {
            let mut props = serde_json::Map::new();
            props.insert("id".into(), json!(l.id));
            if let Some(kv) = l.kv {
                props.insert("kV".into(), json!(kv));
            }
            json!({
                "type": "Feature",
                "properties": props,
                "geometry": {"type": "LineString", "coordinates": l.coords},
            })
        })
        .collect();
    let doc = json!({"type": "FeatureCollection", "features": features});
    std::fs::write(path, doc.to_string()).unwrap();
}

pub fn write_raster(path: &Path, geometry: GridGeometry, values: Vec<i32>) {
    let grid = RasterGrid::new(geometry, -9999, values).unwrap();
    std::fs::write(path, write_ascii_grid(&grid)).unwrap();
}

/// Planar 1-km grid with its lower-left corner at the origin.
pub fn km_grid(ncols: usize, nrows: usize) -> GridGeometry {
    GridGeometry {
        ncols,
        nrows,
        x_origin: 0.0,
        y_origin: 0.0,
        cell_size: 1.0,
    }
}

/// Low background noise with a few hot spots.
pub fn hotspot_values(rng: &mut ChaCha8Rng, g: &GridGeometry, spots: usize) -> Vec<i32> {
    let centres: Vec<(f64, f64, f64)> = (0..spots)
        .map(|_| {
            (
                rng.gen_range(0.0..g.ncols as f64),
                rng.gen_range(0.0..g.nrows as f64),
                rng.gen_range(1.5..5.0),
            )
        })
        .collect();
    let mut values = Vec::with_capacity(g.ncols * g.nrows);
    for row in 0..g.nrows {
        for col in 0..g.ncols {
            let (x, y) = (col as f64 + 0.5, (g.nrows - row) as f64 - 0.5);
            let heat: f64 = centres
                .iter()
                .map(|&(cx, cy, r)| 150.0 * (-((x - cx).powi(2) + (y - cy).powi(2)) / (r * r)).exp())
                .sum();
            values.push((heat + rng.gen_range(0.0..8.0)).min(150.0) as i32);
        }
    }
    values
}

/// Random walk inside `g` with `n` vertices and steps of up to `step` km.
pub fn walk(rng: &mut ChaCha8Rng, g: &GridGeometry, n: usize, step: f64) -> Vec<[f64; 2]> {
    let (w, h) = (g.ncols as f64 * g.cell_size, g.nrows as f64 * g.cell_size);
    let mut pt = [rng.gen_range(0.0..w), rng.gen_range(0.0..h)];
    let mut v = vec![pt];
    while v.len() < n {
        let q = [
            (pt[0] + rng.gen_range(-step..step)).clamp(0.0, w),
            (pt[1] + rng.gen_range(-step..step)).clamp(0.0, h),
        ];
        if q != pt {
            v.push(q);
            pt = q;
        }
    }
    v
}

/// A synthetic network over `g`, one kV value per line from a fixed list.
pub fn random_network(rng: &mut ChaCha8Rng, g: &GridGeometry, n_lines: usize) -> Vec<Line> {
    const KV: [f64; 5] = [34.5, 69.0, 115.0, 138.0, 230.0];
    (0..n_lines)
        .map(|i| {
            let n = rng.gen_range(3..7);
            Line {
                id: format!("line{i:02}"),
                coords: walk(rng, g, n, 15.0),
                kv: Some(KV[i % KV.len()]),
            }
        })
        .collect()
}

/// Writes a network plus `days` hot-spot rasters into `dir`.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub network: PathBuf,
    pub rasters: PathBuf,
}

impl Fixture {
    pub fn new(seed: u64, n_lines: usize, days: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rng(seed);
        let g = km_grid(60, 50);
        let network = dir.path().join("network.geojson");
        write_network(&network, &random_network(&mut r, &g, n_lines));
        let rasters = dir.path().join("rasters");
        std::fs::create_dir(&rasters).unwrap();
        for d in 0..days {
            let values = hotspot_values(&mut r, &g, 4);
            write_raster(&rasters.join(format!("2021-07-{:02}.asc", d + 1)), g, values);
        }
        Fixture { dir, network, rasters }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

pub struct CsvRows {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_csv(path: &Path) -> CsvRows {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
    CsvRows {
        header: split(lines.next().unwrap()),
        rows: lines.map(split).collect(),
    }
}

impl CsvRows {
    pub fn column(&self, name: &str) -> Vec<String> {
        let k = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[k].clone()).collect()
    }

    pub fn floats(&self, name: &str) -> Vec<f64> {
        self.column(name).iter().map(|s| s.parse().unwrap()).collect()
    }
}

pub fn key_values(text: &str) -> std::collections::BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
