//! Rendering of landscape grids: marching-squares isocontours exported as
//! SVG, and heightmaps exported as binary PPM. Both formats are written
//! without external libraries and are byte-deterministic for golden tests.

use std::collections::HashMap;

use crate::slices::{normalize_grid, LandscapeGrid};
use crate::util::fmt_f64;
use crate::Result;

/// Number of contour levels picked by [`default_levels`].
pub const DEFAULT_CONTOUR_LEVELS: usize = 15;

/// A chain of 2D points in plane coordinates.
pub type Polyline = Vec<[f64; 2]>;

/// Isocontours of a grid: one set of polylines per level.
#[derive(Clone, Debug)]
pub struct ContourSet {
    pub levels: Vec<f64>,
    /// `polylines[l]` holds the chains for `levels[l]`; every chain has at
    /// least two points and closed chains repeat their first point.
    pub polylines: Vec<Vec<Polyline>>,
    /// Plane half-width, used to map plane coordinates into the viewport.
    pub extent: f64,
}

/// Equally spaced quantile levels of the grid's finite values.
pub fn default_levels(grid: &LandscapeGrid, count: usize) -> Vec<f64> {
    let mut finite: Vec<f64> = grid.values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() || count == 0 {
        return Vec::new();
    }
    finite.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut levels = Vec::with_capacity(count);
    for k in 0..count {
        let q = (k + 1) as f64 / (count + 1) as f64;
        let idx = (q * (finite.len() - 1) as f64).round() as usize;
        levels.push(finite[idx]);
    }
    levels.dedup();
    levels
}

// Grid edges are identified by their lower-left node and orientation so that
// the crossing point of a shared edge is computed exactly once.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum EdgeDir {
    AlongI,
    AlongJ,
}

type EdgeId = (usize, usize, EdgeDir);

fn edge_nodes(edge: EdgeId) -> ((usize, usize), (usize, usize)) {
    let (i, j, dir) = edge;
    match dir {
        EdgeDir::AlongI => ((i, j), (i + 1, j)),
        EdgeDir::AlongJ => ((i, j), (i, j + 1)),
    }
}

fn crossing_point(grid: &LandscapeGrid, edge: EdgeId, level: f64) -> [f64; 2] {
    let (a, b) = edge_nodes(edge);
    let va = grid.value(a.0, a.1);
    let vb = grid.value(b.0, b.1);
    let t = (level - va) / (vb - va);
    let (pa1, pa2) = grid.plane.plane_point(a.0, a.1);
    let (pb1, pb2) = grid.plane.plane_point(b.0, b.1);
    [pa1 + t * (pb1 - pa1), pa2 + t * (pb2 - pa2)]
}

/// Standard 16-case marching squares with linear interpolation on edges.
/// Saddle cells are disambiguated by comparing the cell-center average
/// against the level. Cells with flagged (NaN) corners are skipped.
pub fn marching_squares(grid: &LandscapeGrid, levels: &[f64]) -> ContourSet {
    let res = grid.resolution();
    let mut polylines = Vec::with_capacity(levels.len());
    for &level in levels {
        let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
        for i in 0..res - 1 {
            for j in 0..res - 1 {
                let v00 = grid.value(i, j);
                let v10 = grid.value(i + 1, j);
                let v11 = grid.value(i + 1, j + 1);
                let v01 = grid.value(i, j + 1);
                if !(v00.is_finite() && v10.is_finite() && v11.is_finite() && v01.is_finite()) {
                    continue;
                }
                let bottom = (i, j, EdgeDir::AlongI);
                let top = (i, j + 1, EdgeDir::AlongI);
                let left = (i, j, EdgeDir::AlongJ);
                let right = (i + 1, j, EdgeDir::AlongJ);

                let above00 = v00 > level;
                let above10 = v10 > level;
                let above11 = v11 > level;
                let above01 = v01 > level;

                let mut crossed = Vec::with_capacity(4);
                if above00 != above10 {
                    crossed.push(bottom);
                }
                if above10 != above11 {
                    crossed.push(right);
                }
                if above01 != above11 {
                    crossed.push(top);
                }
                if above00 != above01 {
                    crossed.push(left);
                }
                match crossed.len() {
                    0 => {}
                    2 => segments.push((crossed[0], crossed[1])),
                    4 => {
                        // Saddle: both diagonals disagree. Pair the edges
                        // around whichever diagonal the center separates.
                        let center = 0.25 * (v00 + v10 + v11 + v01);
                        let center_above = center > level;
                        // Edges adjacent to each corner.
                        let corner00 = (bottom, left);
                        let corner10 = (bottom, right);
                        let corner11 = (right, top);
                        let corner01 = (left, top);
                        if above00 {
                            // Diagonal 00-11 above the level.
                            if center_above {
                                segments.push(corner10);
                                segments.push(corner01);
                            } else {
                                segments.push(corner00);
                                segments.push(corner11);
                            }
                        } else {
                            // Diagonal 10-01 above the level.
                            if center_above {
                                segments.push(corner00);
                                segments.push(corner11);
                            } else {
                                segments.push(corner10);
                                segments.push(corner01);
                            }
                        }
                    }
                    _ => unreachable!("a cell crosses an even number of edges"),
                }
            }
        }
        polylines.push(chain_segments(grid, &segments, level));
    }
    ContourSet {
        levels: levels.to_vec(),
        polylines,
        extent: grid.plane.extent,
    }
}

fn chain_segments(
    grid: &LandscapeGrid,
    segments: &[(EdgeId, EdgeId)],
    level: f64,
) -> Vec<Polyline> {
    let mut adjacency: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (idx, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(idx);
        adjacency.entry(b).or_default().push(idx);
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();

    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut edges = vec![a, b];

        // Extend forward from the tail, then backward from the head.
        loop {
            let tail = *edges.last().expect("chain is nonempty");
            let next = adjacency[&tail].iter().find(|&&s| !used[s]).copied();
            match next {
                Some(s) => {
                    used[s] = true;
                    let (x, y) = segments[s];
                    edges.push(if x == tail { y } else { x });
                }
                None => break,
            }
        }
        loop {
            let head = edges[0];
            let next = adjacency[&head].iter().find(|&&s| !used[s]).copied();
            match next {
                Some(s) => {
                    used[s] = true;
                    let (x, y) = segments[s];
                    edges.insert(0, if x == head { y } else { x });
                }
                None => break,
            }
        }

        let chain: Polyline = edges
            .iter()
            .map(|&e| crossing_point(grid, e, level))
            .collect();
        chains.push(chain);
    }
    chains
}

const SVG_SIZE: f64 = 600.0;

fn svg_coords(p: [f64; 2], extent: f64) -> (f64, f64) {
    let x = (p[0] + extent) / (2.0 * extent) * SVG_SIZE;
    let y = (extent - p[1]) / (2.0 * extent) * SVG_SIZE;
    (x, y)
}

fn level_color(index: usize, count: usize) -> String {
    // Dark blue for low levels fading toward warm yellow for high ones.
    let t = if count <= 1 {
        0.0
    } else {
        index as f64 / (count - 1) as f64
    };
    let r = (40.0 + 215.0 * t).round() as u8;
    let g = (40.0 + 160.0 * t).round() as u8;
    let b = (120.0 - 80.0 * t).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Renders contours (and an optional overlay path in plane coordinates) as
/// an SVG 1.1 document. Identical inputs yield byte-identical output.
pub fn contour_svg(contours: &ContourSet, overlay: Option<&[[f64; 2]]>) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" \
         viewBox=\"0 0 {SVG_SIZE} {SVG_SIZE}\" version=\"1.1\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" fill=\"#ffffff\"/>\n"
    ));
    let level_count = contours.levels.len();
    for (l, chains) in contours.polylines.iter().enumerate() {
        let color = level_color(l, level_count);
        for chain in chains {
            if chain.len() < 2 {
                continue;
            }
            let mut d = String::new();
            for (k, &p) in chain.iter().enumerate() {
                let (x, y) = svg_coords(p, contours.extent);
                if k == 0 {
                    d.push_str(&format!("M {x:.3} {y:.3}"));
                } else {
                    d.push_str(&format!(" L {x:.3} {y:.3}"));
                }
            }
            out.push_str(&format!(
                "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\"/>\n"
            ));
        }
    }
    if let Some(path) = overlay {
        if path.len() >= 2 {
            let points: Vec<String> = path
                .iter()
                .map(|&p| {
                    let (x, y) = svg_coords(p, contours.extent);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"2\"/>\n",
                points.join(" ")
            ));
        }
    }
    out.push_str("</svg>\n");
    out.into_bytes()
}

/// Color table used by [`heightmap_image`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Colormap {
    Gray,
    Viridis,
}

const VIRIDIS_ANCHORS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

fn colormap_rgb(map: Colormap, t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    match map {
        Colormap::Gray => {
            let g = (t * 255.0).round() as u8;
            [g, g, g]
        }
        Colormap::Viridis => {
            let scaled = t * (VIRIDIS_ANCHORS.len() - 1) as f64;
            let lo = (scaled.floor() as usize).min(VIRIDIS_ANCHORS.len() - 2);
            let frac = scaled - lo as f64;
            let mut rgb = [0u8; 3];
            for c in 0..3 {
                let v = VIRIDIS_ANCHORS[lo][c]
                    + frac * (VIRIDIS_ANCHORS[lo + 1][c] - VIRIDIS_ANCHORS[lo][c]);
                rgb[c] = v.round() as u8;
            }
            rgb
        }
    }
}

// Failed cells render as magenta so they are visible rather than blending
// into the colormap.
const FAILED_RGB: [u8; 3] = [255, 0, 255];

/// Renders the grid as a binary PPM (P6, maxval 255) heightmap. The grid is
/// normalized first; image row 0 corresponds to the maximum of the second
/// plane coordinate so image-up equals plane-up. Fails with undefined-result
/// on constant grids.
pub fn heightmap_image(grid: &LandscapeGrid, colormap: Colormap) -> Result<Vec<u8>> {
    let normalized = normalize_grid(grid)?;
    let res = normalized.resolution();
    let mut out = format!("P6\n{res} {res}\n255\n").into_bytes();
    out.reserve(res * res * 3);
    for row in 0..res {
        let j = res - 1 - row;
        for i in 0..res {
            let v = normalized.value(i, j);
            let rgb = if v.is_nan() {
                FAILED_RGB
            } else {
                colormap_rgb(colormap, v)
            };
            out.extend_from_slice(&rgb);
        }
    }
    Ok(out)
}

/// Multi-curve line chart (SVG) used for convergence plots: each series is a
/// list of `(x, y)` points; axes are scaled to the data with y optionally on
/// a log scale.
pub fn line_chart_svg(series: &[(String, Vec<(f64, f64)>)], log_y: bool) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" \
         viewBox=\"0 0 {SVG_SIZE} {SVG_SIZE}\" version=\"1.1\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" fill=\"#ffffff\"/>\n"
    ));
    let transform = |y: f64| if log_y { y.max(1e-300).log10() } else { y };
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, points) in series {
        for &(x, y) in points {
            let ty = transform(y);
            if x.is_finite() && ty.is_finite() {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(ty);
                y_max = y_max.max(ty);
            }
        }
    }
    if x_min < x_max && y_min <= y_max {
        let y_span = if y_max > y_min { y_max - y_min } else { 1.0 };
        let margin = 40.0;
        let scale_x = (SVG_SIZE - 2.0 * margin) / (x_max - x_min);
        let scale_y = (SVG_SIZE - 2.0 * margin) / y_span;
        for (s, (name, points)) in series.iter().enumerate() {
            let color = level_color(s, series.len().max(2));
            let coords: Vec<String> = points
                .iter()
                .filter(|(x, y)| x.is_finite() && transform(*y).is_finite())
                .map(|&(x, y)| {
                    let px = margin + (x - x_min) * scale_x;
                    let py = SVG_SIZE - margin - (transform(y) - y_min) * scale_y;
                    format!("{px:.3},{py:.3}")
                })
                .collect();
            if coords.len() >= 2 {
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\">\
                     <title>{name}</title></polyline>\n",
                    coords.join(" ")
                ));
            }
        }
    }
    out.push_str("</svg>\n");
    out.into_bytes()
}

/// Bounding-box area of all chains at one contour level; `None` when the
/// level has no chains.
pub fn level_bbox_area(contours: &ContourSet, level_index: usize) -> Option<f64> {
    let chains = contours.polylines.get(level_index)?;
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    let mut any = false;
    for chain in chains {
        for p in chain {
            for axis in 0..2 {
                min[axis] = min[axis].min(p[axis]);
                max[axis] = max[axis].max(p[axis]);
            }
            any = true;
        }
    }
    any.then(|| (max[0] - min[0]) * (max[1] - min[1]))
}

/// CSV text export of a contour set, mostly for debugging and golden tests.
pub fn contours_csv(contours: &ContourSet) -> String {
    let mut out = String::from("level,chain,point,p1,p2\n");
    for (l, chains) in contours.polylines.iter().enumerate() {
        for (c, chain) in chains.iter().enumerate() {
            for (k, p) in chain.iter().enumerate() {
                out.push_str(&format!(
                    "{},{c},{k},{},{}\n",
                    fmt_f64(contours.levels[l]),
                    fmt_f64(p[0]),
                    fmt_f64(p[1])
                ));
            }
        }
    }
    out
}
