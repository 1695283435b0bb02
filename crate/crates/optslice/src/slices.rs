//! Random 2D slice planes, landscape grid evaluation, and grid filtering.
//!
//! A slice plane restricts a d-dimensional objective to
//! `x = center + p1 * u + p2 * v` with orthogonal basis vectors `u`, `v`.
//! Grids evaluate the objective on a `resolution x resolution` lattice of
//! plane coordinates in `[-extent, extent]^2`, averaging a configurable
//! number of seeded episodes per cell.

use std::io::{BufRead, Write};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::objectives::ObjectiveHandle;
use crate::util::{dot, fmt_f64, hash_f64s, linspace, mix_seed, norm, parse_f64};
use crate::{Error, Result};

/// Grid points per axis used throughout the visualization protocol.
pub const DEFAULT_RESOLUTION: usize = 100;
/// Episodes averaged per grid point.
pub const DEFAULT_EPISODES: usize = 10;
/// Gaussian blur width applied to landscape figures.
pub const DEFAULT_BLUR_SIGMA: f64 = 1.0;

const BASIS_RETRIES: usize = 64;
const DEGENERACY_TOL: f64 = 1e-12;

/// A 2D evaluation plane through `center`, spanned by `u` and `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlicePlane {
    pub center: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Half-width of the evaluated square in plane coordinates.
    pub extent: f64,
    /// Grid points per axis.
    pub resolution: usize,
}

impl SlicePlane {
    pub fn new(
        center: Vec<f64>,
        u: Vec<f64>,
        v: Vec<f64>,
        extent: f64,
        resolution: usize,
    ) -> Result<Self> {
        if u.len() != center.len() || v.len() != center.len() {
            return Err(Error::invalid("slice plane: vector dimensions differ"));
        }
        if resolution < 2 {
            return Err(Error::invalid("slice plane: resolution must be >= 2"));
        }
        if !(extent > 0.0) {
            return Err(Error::invalid("slice plane: extent must be positive"));
        }
        let tol = 1e-10 * (norm(&u) * norm(&v)).max(1.0);
        if dot(&u, &v).abs() > tol {
            return Err(Error::invalid("slice plane: basis vectors not orthogonal"));
        }
        Ok(SlicePlane {
            center,
            u,
            v,
            extent,
            resolution,
        })
    }

    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    /// Axis coordinates: `resolution` points spanning `[-extent, extent]`.
    pub fn axis(&self) -> Vec<f64> {
        linspace(-self.extent, self.extent, self.resolution)
    }

    /// Plane coordinates of grid cell `(i, j)`.
    pub fn plane_point(&self, i: usize, j: usize) -> (f64, f64) {
        let axis = 2.0 * self.extent / (self.resolution - 1) as f64;
        (-self.extent + axis * i as f64, -self.extent + axis * j as f64)
    }

    /// Full-dimensional point of grid cell `(i, j)`.
    pub fn world_point(&self, i: usize, j: usize) -> Vec<f64> {
        let (p1, p2) = self.plane_point(i, j);
        self.embed(p1, p2)
    }

    /// Maps plane coordinates into the ambient space.
    pub fn embed(&self, p1: f64, p2: f64) -> Vec<f64> {
        self.center
            .iter()
            .zip(self.u.iter().zip(&self.v))
            .map(|(&c, (&ui, &vi))| c + p1 * ui + p2 * vi)
            .collect()
    }

    /// Plane coordinates of an ambient point (orthogonal projection onto the
    /// basis directions, assuming unit-length `u`, `v`).
    pub fn project(&self, x: &[f64]) -> (f64, f64) {
        let rel: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        (dot(&rel, &self.u), dot(&rel, &self.v))
    }
}

/// Draws a rotation-invariant orthonormal basis pair: two independent
/// standard-normal vectors, the second Gram-Schmidt-orthogonalized against
/// the first, both normalized to unit length. Deterministic per seed.
pub fn sample_orthonormal_basis(d: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if d < 2 {
        return Err(Error::invalid("orthonormal basis needs d >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..BASIS_RETRIES {
        let raw_u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let raw_v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len_u = norm(&raw_u);
        if len_u < DEGENERACY_TOL {
            continue;
        }
        let u: Vec<f64> = raw_u.iter().map(|x| x / len_u).collect();
        let proj = dot(&u, &raw_v);
        let mut w: Vec<f64> = raw_v.iter().zip(&u).map(|(x, ui)| x - proj * ui).collect();
        let len_w = norm(&w);
        if len_w < DEGENERACY_TOL {
            continue;
        }
        for x in &mut w {
            *x /= len_w;
        }
        return Ok((u, w));
    }
    Err(Error::numeric(
        "sample_orthonormal_basis: degenerate draws exhausted retries",
    ))
}

/// Draws a basis pair with elements uniform on `[-1, 1]`, both vectors
/// rescaled to the mean of their originally sampled lengths (instead of unit
/// length); the second vector is orthogonalized against the first and
/// rescaled back to that shared length.
pub fn sample_unnormalized_basis(d: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if d < 2 {
        return Err(Error::invalid("unnormalized basis needs d >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..BASIS_RETRIES {
        let raw_u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let raw_v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let len_u = norm(&raw_u);
        let len_v = norm(&raw_v);
        if len_u < DEGENERACY_TOL || len_v < DEGENERACY_TOL {
            continue;
        }
        let shared = 0.5 * (len_u + len_v);
        let u: Vec<f64> = raw_u.iter().map(|x| x * shared / len_u).collect();
        let scaled_v: Vec<f64> = raw_v.iter().map(|x| x * shared / len_v).collect();
        let proj = dot(&u, &scaled_v) / dot(&u, &u);
        let mut w: Vec<f64> = scaled_v
            .iter()
            .zip(&u)
            .map(|(x, ui)| x - proj * ui)
            .collect();
        let len_w = norm(&w);
        if len_w < DEGENERACY_TOL {
            continue;
        }
        for x in &mut w {
            *x *= shared / len_w;
        }
        return Ok((u, w));
    }
    Err(Error::numeric(
        "sample_unnormalized_basis: degenerate draws exhausted retries",
    ))
}

/// Objective values over a slice plane. Failed cells (non-finite objective)
/// are stored as NaN rather than silently zeroed.
#[derive(Clone, Debug, PartialEq)]
pub struct LandscapeGrid {
    /// Row-major by first plane index: `values[i * resolution + j]`.
    pub values: Vec<f64>,
    pub plane: SlicePlane,
    pub episodes_per_point: usize,
    pub seed: u64,
    pub normalized: bool,
    pub blurred_sigma: Option<f64>,
}

impl LandscapeGrid {
    pub fn resolution(&self) -> usize {
        self.plane.resolution
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.plane.resolution + j]
    }

    pub fn is_failed(&self, i: usize, j: usize) -> bool {
        self.value(i, j).is_nan()
    }

    pub fn finite_min_max(&self) -> Option<(f64, f64)> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &self.values {
            if v.is_finite() {
                min = min.min(v);
                max = max.max(v);
            }
        }
        (min <= max).then_some((min, max))
    }

    /// Grid indices of the smallest finite value.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        let res = self.plane.resolution;
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..res {
            for j in 0..res {
                let v = self.value(i, j);
                if v.is_finite() && best.is_none_or(|(_, _, b)| v < b) {
                    best = Some((i, j, v));
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }
}

/// Evaluates an objective over the plane's grid, averaging `episodes`
/// evaluations per cell with per-episode seeds derived deterministically
/// from `(seed, i, j, episode)`. Cells are independent, so the work is
/// distributed over the current rayon pool without affecting the result.
pub fn evaluate_grid(
    f: &ObjectiveHandle,
    plane: &SlicePlane,
    episodes: usize,
    seed: u64,
) -> Result<LandscapeGrid> {
    if episodes == 0 {
        return Err(Error::invalid("evaluate_grid: episodes must be >= 1"));
    }
    if plane.dimension() != f.dimension() {
        return Err(Error::invalid(format!(
            "evaluate_grid: plane dimension {} does not match objective dimension {}",
            plane.dimension(),
            f.dimension()
        )));
    }
    let res = plane.resolution;
    let values: Vec<f64> = (0..res * res)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / res, idx % res);
            let x = plane.world_point(i, j);
            let mut sum = 0.0;
            let mut first = None;
            let mut all_equal = true;
            for e in 0..episodes {
                let episode_seed = mix_seed(seed, &[i as u64, j as u64, e as u64]);
                let value = f.evaluate(&x, episode_seed);
                if !value.is_finite() {
                    return f64::NAN;
                }
                match first {
                    None => first = Some(value),
                    Some(prev) => all_equal &= prev.to_bits() == value.to_bits(),
                }
                sum += value;
            }
            // A deterministic objective yields identical episodes; return the
            // common value directly so the mean introduces no rounding.
            if all_equal {
                first.unwrap()
            } else {
                sum / episodes as f64
            }
        })
        .collect();
    Ok(LandscapeGrid {
        values,
        plane: plane.clone(),
        episodes_per_point: episodes,
        seed,
        normalized: false,
        blurred_sigma: None,
    })
}

/// Unnormalized Gaussian kernel weights for radius `ceil(3 sigma)`; index
/// `radius` is the center tap.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "gaussian_kernel: sigma must be positive");
    let radius = (3.0 * sigma).ceil() as isize;
    (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

fn blur_axis(values: &[f64], res: usize, kernel: &[f64], along_rows: bool) -> Vec<f64> {
    let radius = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; values.len()];
    let at = |i: usize, j: usize| -> f64 {
        if along_rows {
            values[i * res + j]
        } else {
            values[j * res + i]
        }
    };
    for i in 0..res {
        for j in 0..res {
            let center = at(i, j);
            // Anchor the sum on the center tap: constants survive the edge
            // renormalization bit-exactly because all differences vanish.
            let mut weight_sum = 0.0;
            let mut diff_sum = 0.0;
            for (t, &w) in kernel.iter().enumerate() {
                let offset = t as isize - radius;
                let jj = j as isize + offset;
                if jj < 0 || jj >= res as isize {
                    continue;
                }
                weight_sum += w;
                diff_sum += w * (at(i, jj as usize) - center);
            }
            let blurred = center + diff_sum / weight_sum;
            if along_rows {
                out[i * res + j] = blurred;
            } else {
                out[j * res + i] = blurred;
            }
        }
    }
    out
}

/// Separable Gaussian blur with kernel radius `ceil(3 sigma)`. The kernel is
/// renormalized over its in-grid support at the edges, which preserves
/// constant grids exactly. The input grid is left unmodified.
pub fn gaussian_blur(grid: &LandscapeGrid, sigma: f64) -> LandscapeGrid {
    assert!(sigma > 0.0, "gaussian_blur: sigma must be positive");
    let res = grid.plane.resolution;
    let kernel = gaussian_kernel(sigma);
    let pass1 = blur_axis(&grid.values, res, &kernel, true);
    let values = blur_axis(&pass1, res, &kernel, false);
    LandscapeGrid {
        values,
        blurred_sigma: Some(sigma),
        ..grid.clone()
    }
}

/// Affinely maps the finite grid values onto `[0, 1]`. Failed (NaN) cells
/// are preserved as-is.
pub fn normalize_grid(grid: &LandscapeGrid) -> Result<LandscapeGrid> {
    let (min, max) = grid
        .finite_min_max()
        .ok_or_else(|| Error::undefined("normalize_grid: no finite values"))?;
    if min == max {
        return Err(Error::undefined(
            "normalize_grid: constant grid has no range to normalize",
        ));
    }
    let span = max - min;
    let values = grid.values.iter().map(|&v| (v - min) / span).collect();
    Ok(LandscapeGrid {
        values,
        normalized: true,
        ..grid.clone()
    })
}

// ---------------------------------------------------------------------------
// Serialization: CSV with `#` metadata comments plus a structured metadata
// document holding the full plane definition.
// ---------------------------------------------------------------------------

fn fmt_f64_list(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| parse_f64(p.trim()).ok_or_else(|| Error::config(format!("bad float `{p}`"))))
        .collect()
}

impl LandscapeGrid {
    /// CSV rows `i,j,p1,p2,value` preceded by `#` metadata comment lines.
    /// Values carry 17 significant digits and parse back bit-exactly.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# center_hash: {:016x}", hash_f64s(&self.plane.center))?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# extent: {}", self.plane.extent)?;
        writeln!(w, "# resolution: {}", self.plane.resolution)?;
        writeln!(w, "# episodes: {}", self.episodes_per_point)?;
        if let Some(sigma) = self.blurred_sigma {
            writeln!(w, "# sigma: {sigma}")?;
        }
        writeln!(w, "i,j,p1,p2,value")?;
        let res = self.plane.resolution;
        for i in 0..res {
            for j in 0..res {
                let (p1, p2) = self.plane.plane_point(i, j);
                writeln!(
                    w,
                    "{i},{j},{},{},{}",
                    fmt_f64(p1),
                    fmt_f64(p2),
                    fmt_f64(self.value(i, j))
                )?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    /// Structured metadata document with the full plane definition; combined
    /// with the CSV this reconstructs the grid bit-exactly.
    pub fn to_meta_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("dimension: {}\n", self.plane.dimension()));
        out.push_str(&format!("center: {}\n", fmt_f64_list(&self.plane.center)));
        out.push_str(&format!("u: {}\n", fmt_f64_list(&self.plane.u)));
        out.push_str(&format!("v: {}\n", fmt_f64_list(&self.plane.v)));
        out.push_str(&format!("extent: {}\n", self.plane.extent));
        out.push_str(&format!("resolution: {}\n", self.plane.resolution));
        out.push_str(&format!("episodes: {}\n", self.episodes_per_point));
        out.push_str(&format!("seed: {}\n", self.seed));
        out.push_str(&format!("normalized: {}\n", self.normalized));
        if let Some(sigma) = self.blurred_sigma {
            out.push_str(&format!("sigma: {sigma}\n"));
        }
        out
    }

    /// Rebuilds a grid from its CSV and metadata documents.
    pub fn from_documents(csv: &str, meta: &str) -> Result<LandscapeGrid> {
        let mut fields = std::collections::HashMap::new();
        for line in meta.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| Error::config(format!("bad metadata line `{line}`")))?;
            fields.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |key: &str| -> Result<&String> {
            fields
                .get(key)
                .ok_or_else(|| Error::config(format!("metadata missing `{key}`")))
        };
        let center = parse_f64_list(get("center")?)?;
        let u = parse_f64_list(get("u")?)?;
        let v = parse_f64_list(get("v")?)?;
        let extent: f64 = parse_f64(get("extent")?)
            .ok_or_else(|| Error::config("bad extent in metadata"))?;
        let resolution: usize = get("resolution")?
            .parse()
            .map_err(|_| Error::config("bad resolution in metadata"))?;
        let episodes: usize = get("episodes")?
            .parse()
            .map_err(|_| Error::config("bad episodes in metadata"))?;
        let seed: u64 = get("seed")?
            .parse()
            .map_err(|_| Error::config("bad seed in metadata"))?;
        let normalized: bool = get("normalized")?
            .parse()
            .map_err(|_| Error::config("bad normalized flag in metadata"))?;
        let blurred_sigma = match fields.get("sigma") {
            Some(s) => Some(parse_f64(s).ok_or_else(|| Error::config("bad sigma in metadata"))?),
            None => None,
        };
        let plane = SlicePlane::new(center, u, v, extent, resolution)?;

        let mut values = vec![f64::NAN; resolution * resolution];
        let mut seen = 0usize;
        for line in csv.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('i') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(Error::config(format!("bad CSV row `{line}`")));
            }
            let i: usize = cols[0].parse().map_err(|_| Error::config("bad CSV index"))?;
            let j: usize = cols[1].parse().map_err(|_| Error::config("bad CSV index"))?;
            if i >= resolution || j >= resolution {
                return Err(Error::config("CSV indices exceed resolution"));
            }
            values[i * resolution + j] =
                parse_f64(cols[4]).ok_or_else(|| Error::config("bad CSV value"))?;
            seen += 1;
        }
        if seen != resolution * resolution {
            return Err(Error::config(format!(
                "CSV holds {seen} cells, expected {}",
                resolution * resolution
            )));
        }
        Ok(LandscapeGrid {
            values,
            plane,
            episodes_per_point: episodes,
            seed,
            normalized,
            blurred_sigma,
        })
    }

    pub fn read_documents(
        csv_reader: &mut impl BufRead,
        meta_reader: &mut impl BufRead,
    ) -> Result<LandscapeGrid> {
        let mut csv = String::new();
        csv_reader.read_to_string(&mut csv)?;
        let mut meta = String::new();
        meta_reader.read_to_string(&mut meta)?;
        LandscapeGrid::from_documents(&csv, &meta)
    }
}
