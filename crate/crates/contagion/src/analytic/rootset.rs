//! Contour extraction of root curves in a 2-coordinate reduction.
//!
//! The coupled examples all admit a reduction where every coordinate of z is
//! a fixed linear function of two free values (z1, z2); the interesting
//! geometry — how many joint roots exist and whether the curves cross or
//! merely touch — then lives in the plane. [`rootset_scan`] evaluates f on a
//! rectangular grid of (z1, z2) points, extracts each listed coordinate
//! function's zero contour by marching squares with linear interpolation,
//! and chains the cell segments into labeled polylines ready for CSV export.
//!
//! Scans run on the spec's initial-default form (shock probabilities
//! realized as capital-0 mass) — the same system the root solvers analyze —
//! so the scanned curves are the ones whose crossings the solvers find.

use std::collections::HashMap;
use std::io::Write;

use crate::coord::{CoordArray, CoordSet};
use crate::error::AnalyticError;
use crate::model::ModelSpec;

use super::f_eval;
use super::solver::{least_fixed_point, SolverParams};

// ============================================================================
// Scan inputs
// ============================================================================

/// One reduced function to contour: the f coordinate to read, with a label
/// for the emitted polylines.
#[derive(Debug, Clone)]
pub struct AxisFunction {
    pub label: String,
    /// (r, alpha, beta), 0-based.
    pub coord: (usize, usize, usize),
}

/// Linear embedding of the free plane into the full coordinate space:
/// `z_full(z1, z2) = z1 * x_coeffs + z2 * y_coeffs`.
///
/// The optional carriers name coordinates that equal z1 respectively z2
/// under the embedding; they let the scanner project a solver root into the
/// plane to detect grids too coarse to see a contour that provably exists.
#[derive(Debug, Clone)]
pub struct AxisMap {
    pub x_coeffs: CoordArray,
    pub y_coeffs: CoordArray,
    pub x_carrier: Option<(usize, usize, usize)>,
    pub y_carrier: Option<(usize, usize, usize)>,
    pub functions: Vec<AxisFunction>,
}

/// Rectangular scan window with cell resolution (`nx` x `ny` cells, so
/// `(nx + 1) x (ny + 1)` sample points).
#[derive(Debug, Clone, Copy)]
pub struct GridRect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

/// One chained contour piece of one labeled function.
#[derive(Debug, Clone)]
pub struct LabeledPolyline {
    pub label: String,
    pub segment_id: usize,
    pub points: Vec<(f64, f64)>,
}

// ============================================================================
// Marching squares
// ============================================================================

type Point = (f64, f64);

/// Interpolated zero crossing between two corner samples of opposite sign.
fn cross(p_a: Point, a: f64, p_b: Point, b: f64) -> Point {
    let t = a / (a - b);
    (p_a.0 + t * (p_b.0 - p_a.0), p_a.1 + t * (p_b.1 - p_a.1))
}

/// Extracts the zero-contour segments of one scalar field sampled on the
/// grid. `vals[ix][iy]` is the sample at grid node (ix, iy); a value `>= 0`
/// counts as positive (so an exact 0 at a node produces no crossing by
/// itself).
fn marching_squares(grid: &GridRect, vals: &[Vec<f64>]) -> Vec<(Point, Point)> {
    let dx = (grid.x1 - grid.x0) / grid.nx as f64;
    let dy = (grid.y1 - grid.y0) / grid.ny as f64;
    let mut segments = Vec::new();
    for ix in 0..grid.nx {
        for iy in 0..grid.ny {
            let x = grid.x0 + ix as f64 * dx;
            let y = grid.y0 + iy as f64 * dy;
            // Corners: bottom-left, bottom-right, top-right, top-left.
            let c = [
                ((x, y), vals[ix][iy]),
                ((x + dx, y), vals[ix + 1][iy]),
                ((x + dx, y + dy), vals[ix + 1][iy + 1]),
                ((x, y + dy), vals[ix][iy + 1]),
            ];
            let pos = [c[0].1 >= 0.0, c[1].1 >= 0.0, c[2].1 >= 0.0, c[3].1 >= 0.0];
            // Crossings on edges bottom, right, top, left (present where the
            // endpoint signs differ).
            let edge = |i: usize, j: usize| -> Option<Point> {
                (pos[i] != pos[j]).then(|| cross(c[i].0, c[i].1, c[j].0, c[j].1))
            };
            let crossings = [edge(0, 1), edge(1, 2), edge(3, 2), edge(0, 3)];
            let found: Vec<Point> = crossings.iter().flatten().copied().collect();
            match found.len() {
                0 => {}
                2 => segments.push((found[0], found[1])),
                4 => {
                    // Saddle cell: two opposite corners positive. Decide the
                    // pairing by the center's sign so the separated region
                    // stays consistent.
                    let center = (c[0].1 + c[1].1 + c[2].1 + c[3].1) / 4.0;
                    let (bottom, right, top, left) = (
                        crossings[0].unwrap(),
                        crossings[1].unwrap(),
                        crossings[2].unwrap(),
                        crossings[3].unwrap(),
                    );
                    let diagonal_connects = (pos[0] && pos[2] && center >= 0.0)
                        || (pos[1] && pos[3] && center < 0.0);
                    if diagonal_connects {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => unreachable!("a cell has 0, 2, or 4 sign-change edges"),
            }
        }
    }
    segments
}

/// Chains cell segments into maximal polylines. Shared endpoints between
/// neighboring cells are bitwise-identical floats (both cells interpolate
/// the same edge from the same samples), so exact keying suffices.
fn chain_segments(segments: &[(Point, Point)]) -> Vec<Vec<Point>> {
    let key = |p: Point| (p.0.to_bits(), p.1.to_bits());
    let mut adjacency: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (idx, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(key(*a)).or_default().push(idx);
        adjacency.entry(key(*b)).or_default().push(idx);
    }

    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    // Open chains first (endpoints of degree 1), then whatever remains
    // (closed loops).
    let starts: Vec<usize> = adjacency
        .values()
        .filter(|v| v.len() == 1)
        .map(|v| v[0])
        .chain(0..segments.len())
        .collect();
    for start in starts {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut line = vec![a, b];
        // Extend forward from the tail, then backward from the head.
        for end in [true, false] {
            loop {
                let tip = if end { *line.last().unwrap() } else { line[0] };
                let Some(next) = adjacency
                    .get(&key(tip))
                    .into_iter()
                    .flatten()
                    .find(|idx| !used[**idx])
                    .copied()
                else {
                    break;
                };
                used[next] = true;
                let (na, nb) = segments[next];
                let far = if key(na) == key(tip) { nb } else { na };
                if end {
                    line.push(far);
                } else {
                    line.insert(0, far);
                }
            }
        }
        polylines.push(line);
    }
    polylines
}

// ============================================================================
// Scan driver
// ============================================================================

fn validate_inputs(
    spec: &ModelSpec,
    axis_map: &AxisMap,
    grid: &GridRect,
) -> Result<(), AnalyticError> {
    let dims = (spec.r_levels(), spec.t_types());
    for coeffs in [&axis_map.x_coeffs, &axis_map.y_coeffs] {
        if (coeffs.r_levels(), coeffs.t_types()) != dims {
            return Err(AnalyticError::DimensionMismatch(
                "axis coefficient arrays must match the spec's coordinate space".into(),
            ));
        }
        if coeffs.as_slice().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(AnalyticError::InvalidTolerance(
                "axis coefficients must be finite and nonnegative".into(),
            ));
        }
    }
    let in_bounds = |(r, a, b): (usize, usize, usize)| {
        r < spec.r_levels() && a < spec.t_types() && b < spec.t_types()
    };
    if axis_map.functions.is_empty() {
        return Err(AnalyticError::DimensionMismatch(
            "at least one function must be listed for contouring".into(),
        ));
    }
    if !axis_map.functions.iter().all(|f| in_bounds(f.coord))
        || !axis_map.x_carrier.is_none_or(in_bounds)
        || !axis_map.y_carrier.is_none_or(in_bounds)
    {
        return Err(AnalyticError::DimensionMismatch(
            "axis coordinates out of range".into(),
        ));
    }
    if !(grid.x0.is_finite() && grid.x1.is_finite() && grid.y0.is_finite() && grid.y1.is_finite())
        || grid.x0 < 0.0
        || grid.y0 < 0.0
        || grid.x1 <= grid.x0
        || grid.y1 <= grid.y0
    {
        return Err(AnalyticError::InvalidTolerance(
            "scan box must lie in the nonnegative quadrant with positive extent".into(),
        ));
    }
    if grid.nx == 0 || grid.ny == 0 {
        return Err(AnalyticError::InvalidTolerance(
            "grid resolution must be at least 1 cell per axis".into(),
        ));
    }
    Ok(())
}

/// Scans the zero contours of the listed f coordinates over the grid.
///
/// Returns one polyline per chained contour piece, labeled and numbered per
/// function. If a function yields no contour although the smallest joint
/// root projects (via the carriers) into the scan box, the grid provably
/// missed a root curve and [`AnalyticError::GridTooCoarse`] is returned.
pub fn rootset_scan(
    spec: &ModelSpec,
    axis_map: &AxisMap,
    grid: &GridRect,
    params: &SolverParams,
) -> Result<Vec<LabeledPolyline>, AnalyticError> {
    validate_inputs(spec, axis_map, grid)?;
    let analysis = if spec.has_shocks() {
        spec.apply_shock()
    } else {
        spec.clone()
    };

    // Sample f once per grid node; each listed function reads one coordinate.
    let dx = (grid.x1 - grid.x0) / grid.nx as f64;
    let dy = (grid.y1 - grid.y0) / grid.ny as f64;
    let mut vals: Vec<Vec<Vec<f64>>> =
        vec![vec![vec![0.0; grid.ny + 1]; grid.nx + 1]; axis_map.functions.len()];
    for ix in 0..=grid.nx {
        let x = grid.x0 + ix as f64 * dx;
        for iy in 0..=grid.ny {
            let y = grid.y0 + iy as f64 * dy;
            let mut z = CoordArray::zeros(spec.r_levels(), spec.t_types());
            for (slot, (xv, yv)) in z.as_mut_slice().iter_mut().zip(
                axis_map
                    .x_coeffs
                    .as_slice()
                    .iter()
                    .zip(axis_map.y_coeffs.as_slice()),
            ) {
                *slot = x * xv + y * yv;
            }
            let f = f_eval(&analysis, &z);
            for (fi, func) in axis_map.functions.iter().enumerate() {
                let (r, a, b) = func.coord;
                vals[fi][ix][iy] = f.get(r, a, b);
            }
        }
    }

    let mut anchor: Option<CoordArray> = None;
    let mut out = Vec::new();
    for (fi, func) in axis_map.functions.iter().enumerate() {
        let segments = marching_squares(grid, &vals[fi]);
        if segments.is_empty() {
            // No sign change anywhere. If the smallest joint root lies
            // inside the box, the grid missed a real contour.
            if let (Some(xc), Some(yc)) = (axis_map.x_carrier, axis_map.y_carrier) {
                if anchor.is_none() {
                    let empty = CoordSet::empty(spec.r_levels(), spec.t_types());
                    anchor = Some(least_fixed_point(&analysis, 0.0, &empty, params)?.z);
                }
                let root = anchor.as_ref().unwrap();
                let (rx, ry) = (
                    root.get(xc.0, xc.1, xc.2),
                    root.get(yc.0, yc.1, yc.2),
                );
                let inside = (grid.x0..=grid.x1).contains(&rx)
                    && (grid.y0..=grid.y1).contains(&ry);
                if inside {
                    return Err(AnalyticError::GridTooCoarse {
                        label: func.label.clone(),
                        x: rx,
                        y: ry,
                    });
                }
            }
            continue;
        }
        for (segment_id, points) in chain_segments(&segments).into_iter().enumerate() {
            out.push(LabeledPolyline {
                label: func.label.clone(),
                segment_id,
                points,
            });
        }
    }
    Ok(out)
}

/// Writes polylines as CSV rows `function_label,segment_id,z1,z2`.
pub fn write_contours_csv<W: Write>(
    writer: W,
    polylines: &[LabeledPolyline],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["function_label", "segment_id", "z1", "z2"])?;
    for line in polylines {
        for (x, y) in &line.points {
            w.write_record([
                line.label.as_str(),
                &line.segment_id.to_string(),
                &format!("{x}"),
                &format!("{y}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
