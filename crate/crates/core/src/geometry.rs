//! Polyline lengths, fixed-interval segmentation, and exact cell-by-cell
//! intersection of a polyline with a raster grid.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::network::{CrsMode, Point, PowerLine};
use crate::raster::GridGeometry;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// A trailing piece shorter than this (one metre) is merged into the
/// previous segment.
pub const MIN_REMAINDER_KM: f64 = 0.001;

pub fn haversine_km(a: Point, b: Point) -> f64 {
    let (lon1, lat1) = (a[0].to_radians(), a[1].to_radians());
    let (lon2, lat2) = (b[0].to_radians(), b[1].to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Length in kilometres of the straight edge `a -> b`.
pub fn distance_km(a: Point, b: Point, crs: CrsMode) -> f64 {
    match crs {
        CrsMode::Planar => (b[0] - a[0]).hypot(b[1] - a[1]),
        CrsMode::Geographic => haversine_km(a, b),
    }
}

pub fn polyline_length(vertices: &[Point], crs: CrsMode) -> f64 {
    vertices
        .windows(2)
        .map(|w| distance_km(w[0], w[1], crs))
        .sum()
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    if t >= 1.0 {
        return b;
    }
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub segment_id: String,
    pub parent_line_id: String,
    pub vertices: Vec<Point>,
    pub length_km: f64,
    pub voltage_kv: Option<f64>,
    pub crs_mode: CrsMode,
}

impl LineSegment {
    /// The whole line as a single segment `<line_id>/0`.
    pub fn whole(line: &PowerLine) -> Self {
        Self::from_parts(line, 0, line.vertices.clone())
    }

    fn from_parts(line: &PowerLine, k: usize, vertices: Vec<Point>) -> Self {
        Self {
            segment_id: format!("{}/{}", line.line_id, k),
            parent_line_id: line.line_id.clone(),
            length_km: polyline_length(&vertices, line.crs_mode),
            vertices,
            voltage_kv: line.voltage_kv,
            crs_mode: line.crs_mode,
        }
    }
}

/// Fraction `t` along `a -> b` at which the distance from `lerp(a, b, from)`
/// equals `need`, or `None` when the rest of the edge is shorter.
fn advance_along(a: Point, b: Point, from: f64, need: f64, crs: CrsMode) -> Option<f64> {
    let start = lerp(a, b, from);
    let rest = distance_km(start, b, crs);
    if rest < need {
        return None;
    }
    if rest == need {
        return Some(1.0);
    }
    match crs {
        CrsMode::Planar => {
            let t = from + (1.0 - from) * (need / rest);
            Some(t.min(1.0))
        }
        CrsMode::Geographic => {
            // Distance from `start` grows monotonically along a short
            // lon/lat edge, so bisect on the edge fraction.
            let (mut lo, mut hi) = (from, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if distance_km(start, lerp(a, b, mid), crs) < need {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(hi)
        }
    }
}

/// Splits a line at arc-length multiples of `interval_km` from its start.
///
/// Every segment but the last is `interval_km` long; a last piece shorter
/// than [`MIN_REMAINDER_KM`] is merged into its predecessor. A non-positive
/// interval returns the whole line as one segment.
pub fn segment_line(line: &PowerLine, interval_km: f64) -> Vec<LineSegment> {
    if !(interval_km > 0.0) || !interval_km.is_finite() {
        return vec![LineSegment::whole(line)];
    }
    let crs = line.crs_mode;
    let mut pieces: Vec<Vec<Point>> = Vec::new();
    let mut current = vec![line.vertices[0]];
    let mut acc = 0.0;

    for w in line.vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut from = 0.0;
        loop {
            let need = interval_km - acc;
            match advance_along(a, b, from, need, crs) {
                None => {
                    acc += distance_km(lerp(a, b, from), b, crs);
                    current.push(b);
                    break;
                }
                Some(t) => {
                    let q = lerp(a, b, t);
                    if current.last() != Some(&q) {
                        current.push(q);
                    }
                    pieces.push(std::mem::replace(&mut current, vec![q]));
                    acc = 0.0;
                    from = t;
                    if t >= 1.0 {
                        break;
                    }
                }
            }
        }
    }
    if current.len() >= 2 {
        pieces.push(current);
    }

    if pieces.len() >= 2 {
        let last = pieces.last().expect("non-empty");
        if polyline_length(last, crs) < MIN_REMAINDER_KM {
            let tail = pieces.pop().expect("non-empty");
            pieces
                .last_mut()
                .expect("at least one piece")
                .extend(tail.into_iter().skip(1));
        }
    }

    pieces
        .into_iter()
        .enumerate()
        .map(|(k, vertices)| LineSegment::from_parts(line, k, vertices))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellIntersection {
    pub row: usize,
    pub col: usize,
    pub length_km: f64,
}

/// Per-cell lengths of a path, plus the length that fell outside the grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellTraversal {
    /// In order of first visit; one entry per cell.
    pub cells: Vec<CellIntersection>,
    pub out_of_grid_km: f64,
}

impl CellTraversal {
    pub fn in_grid_km(&self) -> f64 {
        self.cells.iter().map(|c| c.length_km).sum()
    }
}

pub fn traverse_cells(segment: &LineSegment, grid: &GridGeometry) -> CellTraversal {
    traverse_path(&segment.vertices, segment.crs_mode, grid)
}

/// Walks each edge of `vertices` through the grid and accumulates the
/// length of every maximal sub-chord that lies within a single cell.
///
/// A sub-chord lying exactly on a shared cell edge goes to the cell with
/// the larger `(row, col)`.
pub fn traverse_path(vertices: &[Point], crs: CrsMode, grid: &GridGeometry) -> CellTraversal {
    let mut out = CellTraversal::default();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut breaks = Vec::new();
    let mut pieces: Vec<(Option<(usize, usize)>, f64)> = Vec::new();

    for w in vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        edge_breakpoints(a, b, grid, &mut breaks);

        pieces.clear();
        let mut piece_sum = 0.0;
        for t in breaks.windows(2) {
            let (ta, tb) = (t[0], t[1]);
            let pa = lerp(a, b, ta);
            let pb = lerp(a, b, tb);
            let len = distance_km(pa, pb, crs);
            let mid = lerp(a, b, 0.5 * (ta + tb));
            pieces.push((cell_of(mid, grid), len));
            piece_sum += len;
        }
        // Haversine is not additive along a straight lon/lat edge; rescale so
        // the pieces add up to the edge length.
        let scale = match crs {
            CrsMode::Geographic if piece_sum > 0.0 => distance_km(a, b, crs) / piece_sum,
            _ => 1.0,
        };
        for &(cell, len) in &pieces {
            let len = len * scale;
            match cell {
                Some(key) => {
                    let i = *index.entry(key).or_insert_with(|| {
                        out.cells.push(CellIntersection {
                            row: key.0,
                            col: key.1,
                            length_km: 0.0,
                        });
                        out.cells.len() - 1
                    });
                    out.cells[i].length_km += len;
                }
                None => out.out_of_grid_km += len,
            }
        }
    }
    out
}

/// Grid coordinates: `u` counts columns from the west edge, `v` counts rows
/// from the north edge.
fn to_grid(p: Point, grid: &GridGeometry) -> (f64, f64) {
    (
        (p[0] - grid.x_origin) / grid.cell_size,
        (grid.y_max() - p[1]) / grid.cell_size,
    )
}

fn cell_of(p: Point, grid: &GridGeometry) -> Option<(usize, usize)> {
    let (u, v) = to_grid(p, grid);
    let (col, row) = (u.floor(), v.floor());
    if col >= 0.0 && row >= 0.0 && (col as usize) < grid.ncols && (row as usize) < grid.nrows {
        Some((row as usize, col as usize))
    } else {
        None
    }
}

/// Sorted edge parameters `0 = t_0 < t_1 < ... < t_k = 1` at which the edge
/// enters the grid, crosses a cell boundary, or leaves the grid.
fn edge_breakpoints(a: Point, b: Point, grid: &GridGeometry, out: &mut Vec<f64>) {
    out.clear();
    out.push(0.0);
    let (u0, v0) = to_grid(a, grid);
    let (u1, v1) = to_grid(b, grid);
    let (du, dv) = (u1 - u0, v1 - v0);

    if let Some((enter, exit)) = clip(u0, v0, du, dv, grid.ncols as f64, grid.nrows as f64) {
        if enter > 0.0 {
            out.push(enter);
        }
        // Walk boundaries from the entry point; each axis keeps the index of
        // the next integer line it will cross.
        let (ue, ve) = (u0 + du * enter, v0 + dv * enter);
        let mut next_u = next_line(ue, du);
        let mut next_v = next_line(ve, dv);
        let t_at = |line: f64, origin: f64, delta: f64| (line - origin) / delta;
        loop {
            let tu = next_u.map_or(f64::INFINITY, |l| t_at(l, u0, du));
            let tv = next_v.map_or(f64::INFINITY, |l| t_at(l, v0, dv));
            let t = tu.min(tv);
            if !(t < exit) {
                break;
            }
            if t > *out.last().expect("non-empty") {
                out.push(t);
            }
            // Ties advance both axes.
            if tu <= t {
                next_u = next_u.map(|l| l + du.signum());
            }
            if tv <= t {
                next_v = next_v.map(|l| l + dv.signum());
            }
        }
        if exit < 1.0 && exit > *out.last().expect("non-empty") {
            out.push(exit);
        }
    }
    if *out.last().expect("non-empty") < 1.0 {
        out.push(1.0);
    }
}

/// The first integer grid line strictly ahead of `x` when moving by `delta`.
fn next_line(x: f64, delta: f64) -> Option<f64> {
    if delta > 0.0 {
        Some(x.floor() + 1.0)
    } else if delta < 0.0 {
        Some(x.ceil() - 1.0)
    } else {
        None
    }
}

/// Liang-Barsky clip of `p(t) = (u0, v0) + t (du, dv)`, `t` in `[0, 1]`,
/// against `[0, width] x [0, height]`.
fn clip(u0: f64, v0: f64, du: f64, dv: f64, width: f64, height: f64) -> Option<(f64, f64)> {
    let mut enter: f64 = 0.0;
    let mut exit: f64 = 1.0;
    for (p, q) in [(-du, u0), (du, width - u0), (-dv, v0), (dv, height - v0)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                enter = enter.max(r);
            } else {
                exit = exit.min(r);
            }
        }
    }
    (enter < exit).then_some((enter, exit))
}
