//! Spider's-web nesting: hulls of forward images of a small disc on the
//! Julia set swallow ever larger discs, and consecutive hulls nest.

use super::grid::RasterGrid;
use super::hull::{dilate_mask, hull_mask};
use super::RasterError;
use crate::catalog::FunctionSpec;
use crate::numeric::LogSafe;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug)]
pub struct WebParams {
    pub seed_center: Complex64,
    pub seed_radius: f64,
    /// Radii of origin-centered discs that must be enclosed, in increasing
    /// order.
    pub radii: Vec<f64>,
    pub n_max: usize,
    pub top_left: Complex64,
    pub bottom_right: Complex64,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WebReport {
    /// `(n_k, radius)` pairs, strictly increasing in both coordinates.
    pub levels: Vec<(usize, f64)>,
    pub nesting_ok: bool,
    pub boundary_in_image: bool,
}

const MAX_POINTS: usize = 4_000_000;
const MAX_DEPTH: usize = 40;

/// Position of the n-th forward image of a circle sample, clamped to the
/// window frame when the value is far away.  Far values keep their argument;
/// values whose direction is unrepresentable reuse the previous position.
fn clamped_position(
    spec: &FunctionSpec,
    seed: Complex64,
    n: usize,
    grid: &RasterGrid,
    last: Option<Complex64>,
) -> Option<Complex64> {
    let mut value = LogSafe::Plain(seed);
    for _ in 0..n {
        value = match spec.advance(&value) {
            Some(v) => v,
            None => return last,
        };
    }
    let wc = 0.5 * (grid.top_left + grid.bottom_right);
    let dir = match value {
        LogSafe::Plain(z) => {
            if grid.contains_point(z) {
                return Some(z);
            }
            let d = z - wc;
            if d.norm() == 0.0 {
                return Some(z);
            }
            d / d.norm()
        }
        LogSafe::LogPolar { arg, .. } => Complex64::from_polar(1.0, arg),
        LogSafe::Tower { .. } => return last,
    };
    // walk to just inside the frame along the ray from the window center
    let half_w = 0.5 * (grid.bottom_right.re - grid.top_left.re);
    let half_h = 0.5 * (grid.top_left.im - grid.bottom_right.im);
    let tx = if dir.re.abs() > 1e-12 {
        half_w / dir.re.abs()
    } else {
        f64::INFINITY
    };
    let ty = if dir.im.abs() > 1e-12 {
        half_h / dir.im.abs()
    } else {
        f64::INFINITY
    };
    let t = tx.min(ty) * 0.999;
    Some(wc + dir * t)
}

/// Rasterize the clamped n-th forward image of the seed circle, refining
/// adaptively to sub-pixel spacing.
fn image_mask(spec: &FunctionSpec, params: &WebParams, n: usize, grid: &RasterGrid) -> Vec<bool> {
    let px = grid.dx().min(grid.dy());
    let at = |theta: f64, last: Option<Complex64>| {
        clamped_position(
            spec,
            params.seed_center + Complex64::from_polar(params.seed_radius, theta),
            n,
            grid,
            last,
        )
    };
    let base = 512usize;
    let mut points: Vec<Complex64> = Vec::new();
    let mut prev: Option<(f64, Complex64)> = None;
    for k in 0..=base {
        let theta = std::f64::consts::TAU * k as f64 / base as f64;
        let Some(z) = at(theta, prev.map(|p| p.1)) else {
            continue;
        };
        if let Some((ta, za)) = prev {
            // depth-first refinement keeps the points in angle order
            let mut stack = vec![(ta, theta, za, z, 0usize)];
            while let Some((ta, tb, za, zb, depth)) = stack.pop() {
                if (zb - za).norm() > 1.5 * px && depth < MAX_DEPTH && points.len() < MAX_POINTS {
                    let tm = 0.5 * (ta + tb);
                    if let Some(zm) = at(tm, Some(za)) {
                        stack.push((tm, tb, zm, zb, depth + 1));
                        stack.push((ta, tm, za, zm, depth + 1));
                        continue;
                    }
                }
                points.push(zb);
            }
        } else {
            points.push(z);
        }
        prev = Some((theta, z));
    }
    let mut mask = vec![false; grid.width * grid.height];
    grid.stamp_polyline(&mut mask, &points);
    mask
}

fn disc_inside(grid: &RasterGrid, region: &[bool], radius: f64) -> bool {
    for i in 0..grid.height {
        for j in 0..grid.width {
            let z = grid.center(i, j);
            if z.norm() <= radius && !region[i * grid.width + j] {
                return false;
            }
        }
    }
    true
}

fn boundary_of(mask: &[bool], width: usize, height: usize) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for i in 0..height {
        for j in 0..width {
            let k = i * width + j;
            if !mask[k] {
                continue;
            }
            let edge = i == 0 || i + 1 == height || j == 0 || j + 1 == width;
            let exposed = edge
                || !mask[k - width]
                || !mask[k + width]
                || !mask[k - 1]
                || !mask[k + 1];
            if exposed {
                out[k] = true;
            }
        }
    }
    out
}

/// Find, for each requested radius, the least iterate whose hulled image
/// contains the origin-centered disc of that radius, and verify nesting and
/// boundary containment for those levels.
pub fn spiderweb_nesting(spec: &FunctionSpec, params: &WebParams) -> Result<WebReport, RasterError> {
    let grid = RasterGrid::new(
        params.top_left,
        params.bottom_right,
        params.width,
        params.height,
    );
    if params.radii.is_empty() {
        return Ok(WebReport {
            levels: Vec::new(),
            nesting_ok: true,
            boundary_in_image: true,
        });
    }

    // image masks and hulls computed lazily up to n_max
    let mut masks: Vec<Vec<bool>> = Vec::new();
    let mut hulls: Vec<Vec<bool>> = Vec::new();
    let ensure = |n: usize, masks: &mut Vec<Vec<bool>>, hulls: &mut Vec<Vec<bool>>| {
        while masks.len() < n {
            let m = image_mask(spec, params, masks.len() + 1, &grid);
            hulls.push(hull_mask(&m, params.width, params.height));
            masks.push(m);
        }
    };

    let mut levels: Vec<(usize, f64)> = Vec::new();
    let mut n_prev = 0usize;
    for &radius in &params.radii {
        let mut found = None;
        for n in (n_prev + 1)..=params.n_max {
            ensure(n, &mut masks, &mut hulls);
            if disc_inside(&grid, &hulls[n - 1], radius) {
                found = Some(n);
                break;
            }
        }
        let n_k = found.ok_or(RasterError::NotFound { radius })?;
        levels.push((n_k, radius));
        n_prev = n_k;
    }

    let mut nesting_ok = true;
    for pair in levels.windows(2) {
        let (na, nb) = (pair[0].0, pair[1].0);
        let (ha, hb) = (&hulls[na - 1], &hulls[nb - 1]);
        if ha.iter().zip(hb.iter()).any(|(&a, &b)| a && !b) {
            nesting_ok = false;
        }
    }

    let mut boundary_in_image = true;
    for &(n_k, _) in &levels {
        let boundary = boundary_of(&hulls[n_k - 1], params.width, params.height);
        let fat = dilate_mask(&masks[n_k - 1], params.width, params.height);
        if boundary.iter().zip(fat.iter()).any(|(&b, &f)| b && !f) {
            boundary_in_image = false;
        }
    }

    Ok(WebReport {
        levels,
        nesting_ok,
        boundary_in_image,
    })
}
