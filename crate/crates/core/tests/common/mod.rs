#![allow(dead_code)]

use fireline_core::geometry::LineSegment;
use fireline_core::network::{CrsMode, Point, PowerLine};
use fireline_core::raster::{GridGeometry, RasterGrid};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn line(id: &str, vertices: Vec<Point>, crs: CrsMode) -> PowerLine {
    PowerLine {
        line_id: id.to_string(),
        vertices,
        voltage_kv: None,
        crs_mode: crs,
    }
}

pub fn segment(vertices: Vec<Point>, crs: CrsMode) -> LineSegment {
    LineSegment::whole(&line("s", vertices, crs))
}

pub fn random_geometry(rng: &mut ChaCha8Rng) -> GridGeometry {
    GridGeometry {
        ncols: rng.gen_range(3..40),
        nrows: rng.gen_range(3..40),
        x_origin: rng.gen_range(-50.0..50.0),
        y_origin: rng.gen_range(-50.0..50.0),
        cell_size: rng.gen_range(0.25..3.0),
    }
}

/// Degree-based grid somewhere over the western United States.
pub fn random_geo_geometry(rng: &mut ChaCha8Rng) -> GridGeometry {
    GridGeometry {
        ncols: rng.gen_range(3..40),
        nrows: rng.gen_range(3..40),
        x_origin: rng.gen_range(-124.0..-110.0),
        y_origin: rng.gen_range(32.0..45.0),
        cell_size: rng.gen_range(0.005..0.05),
    }
}

pub fn random_grid(rng: &mut ChaCha8Rng, geometry: GridGeometry, lo: i32, hi: i32) -> RasterGrid {
    let values = (0..geometry.ncols * geometry.nrows)
        .map(|_| rng.gen_range(lo..=hi))
        .collect();
    RasterGrid::new(geometry, -9999, values).unwrap()
}

/// A point in the grid's extent grown by `margin` cells on each side.
pub fn random_point(rng: &mut ChaCha8Rng, g: &GridGeometry, margin: f64) -> Point {
    let m = margin * g.cell_size;
    [
        rng.gen_range(g.x_origin - m..g.x_max() + m),
        rng.gen_range(g.y_origin - m..g.y_max() + m),
    ]
}

pub fn random_polyline(rng: &mut ChaCha8Rng, g: &GridGeometry, max_vertices: usize, margin: f64) -> Vec<Point> {
    let n = rng.gen_range(2..=max_vertices);
    let mut v: Vec<Point> = Vec::with_capacity(n);
    while v.len() < n {
        let p = random_point(rng, g, margin);
        if v.last() != Some(&p) {
            v.push(p);
        }
    }
    v
}

/// Random walk with steps of at most `step` cells, starting inside the grid.
pub fn random_walk(rng: &mut ChaCha8Rng, g: &GridGeometry, n: usize, step: f64) -> Vec<Point> {
    let mut p = random_point(rng, g, 0.0);
    let mut v = vec![p];
    while v.len() < n {
        let d = step * g.cell_size;
        let q = [p[0] + rng.gen_range(-d..d), p[1] + rng.gen_range(-d..d)];
        if q != p {
            v.push(q);
            p = q;
        }
    }
    v
}

/// Independent cell lookup: `(row, col)` of a point, rows from the top.
pub fn cell_at(g: &GridGeometry, p: Point) -> Option<(usize, usize)> {
    let c = ((p[0] - g.x_origin) / g.cell_size).floor();
    let r = ((g.y_origin + g.nrows as f64 * g.cell_size - p[1]) / g.cell_size).floor();
    if c < 0.0 || r < 0.0 || c >= g.ncols as f64 || r >= g.nrows as f64 {
        None
    } else {
        Some((r as usize, c as usize))
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
