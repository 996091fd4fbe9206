//! Hull-based fast-escape oracle.  The forward images of a small circle on
//! the Julia set are rasterized and hulled; an orbit is certified fast when
//! it escapes and stays outside every achieved hull at the matching offset.

use super::grid::RasterGrid;
use super::hull::hull_mask;
use super::RasterError;
use crate::catalog::FunctionSpec;
use crate::dynamics::{iterate_orbit, Termination};
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct HullOracleParams {
    /// Center of the seed disc; must lie on the Julia set.
    pub center: Complex64,
    pub radius: f64,
    /// Number of forward images to hull, capped by window overflow.
    pub n_max: usize,
    pub ell_max: usize,
    pub top_left: Complex64,
    pub bottom_right: Complex64,
    pub width: usize,
    pub height: usize,
    pub budget: usize,
}

impl HullOracleParams {
    /// Defaults for `e^z - 2`: seed disc on the repelling fixed point.
    pub fn for_exp_affine_minus_two() -> Self {
        HullOracleParams {
            center: Complex64::new(1.146_193_220_620_583, 0.0),
            radius: 0.05,
            n_max: 4,
            ell_max: 8,
            top_left: Complex64::new(-20.0, 20.0),
            bottom_right: Complex64::new(20.0, -20.0),
            width: 512,
            height: 512,
            budget: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HullLabel {
    FastEscaping { ell: usize },
    Undecided,
}

enum LevelImage {
    Points(Vec<Complex64>),
    LeftWindow,
    Overflow,
}

fn iterate_checked(spec: &FunctionSpec, z0: Complex64, n: usize) -> Option<Complex64> {
    let mut z = z0;
    for _ in 0..n {
        z = spec.evaluate_plain(z)?;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
    }
    Some(z)
}

/// Adaptive polyline for `f^n` of the seed circle.  Refinement targets a
/// sub-pixel and a fixed absolute spacing so the hull has no gaps.
fn image_polyline(spec: &FunctionSpec, params: &HullOracleParams, n: usize, grid: &RasterGrid) -> LevelImage {
    let px = grid.dx().min(grid.dy());
    let base = 256usize;
    let at = |theta: f64| {
        iterate_checked(
            spec,
            params.center + Complex64::from_polar(params.radius, theta),
            n,
        )
    };
    let mut out: Vec<Complex64> = Vec::new();
    let mut overflow = false;
    let mut left_window = false;
    // iterative refinement over angle intervals, emitted in order
    let mut stack: Vec<(f64, f64, Complex64, Complex64, usize)> = Vec::new();
    let mut first = None;
    let mut prev: Option<(f64, Complex64)> = None;
    for k in 0..=base {
        let theta = std::f64::consts::TAU * k as f64 / base as f64;
        let z = match at(theta) {
            Some(z) => z,
            None => return LevelImage::Overflow,
        };
        if first.is_none() {
            first = Some(z);
            out.push(z);
        }
        if let Some((ta, za)) = prev {
            stack.push((ta, theta, za, z, 0));
            // depth-first so points come out in angle order
            while let Some((ta, tb, za, zb, depth)) = stack.pop() {
                if !grid.contains_point(za) || !grid.contains_point(zb) {
                    left_window = true;
                }
                let need = (zb - za).norm() > px && depth < 24;
                if need && !left_window && !overflow {
                    let tm = 0.5 * (ta + tb);
                    match at(tm) {
                        Some(zm) => {
                            stack.push((tm, tb, zm, zb, depth + 1));
                            stack.push((ta, tm, za, zm, depth + 1));
                            continue;
                        }
                        None => overflow = true,
                    }
                }
                out.push(zb);
            }
        }
        prev = Some((theta, z));
        if overflow {
            return LevelImage::Overflow;
        }
        if left_window {
            return LevelImage::LeftWindow;
        }
    }
    LevelImage::Points(out)
}

/// Hulls of `f^n` of the seed circle for `n = 1, 2, ...` until the image
/// leaves the window or overflows.
fn build_hulls(spec: &FunctionSpec, params: &HullOracleParams) -> Result<Vec<Vec<bool>>, RasterError> {
    let grid = RasterGrid::new(
        params.top_left,
        params.bottom_right,
        params.width,
        params.height,
    );
    let mut hulls = Vec::new();
    for n in 1..=params.n_max {
        let points = match image_polyline(spec, params, n, &grid) {
            LevelImage::Points(p) => p,
            LevelImage::LeftWindow | LevelImage::Overflow => break,
        };
        let mut mask = vec![false; params.width * params.height];
        grid.stamp_polyline(&mut mask, &points);
        if grid.mask_touches_frame(&mask) {
            break;
        }
        hulls.push(hull_mask(&mask, params.width, params.height));
    }
    if hulls.is_empty() {
        return Err(RasterError::WindowOverflow { achieved: 0 });
    }
    Ok(hulls)
}

/// Classify one point against precomputed hulls.
fn classify_against(
    spec: &FunctionSpec,
    params: &HullOracleParams,
    grid: &RasterGrid,
    hulls: &[Vec<bool>],
    z: Complex64,
) -> HullLabel {
    let orbit = iterate_orbit(spec, z, params.budget, 1.0e12);
    // A fast certificate needs escape evidence: without it the orbit may sit
    // outside every hull while remaining bounded.
    let escaped = matches!(
        orbit.termination,
        Termination::EscapedBeyondHorizon { .. } | Termination::DirectionLost { .. }
    );
    if !escaped {
        return HullLabel::Undecided;
    }
    'ell: for ell in 0..=params.ell_max {
        for (n, hull) in hulls.iter().enumerate().map(|(k, h)| (k + 1, h)) {
            let idx = n + ell;
            if idx >= orbit.points.len() {
                continue 'ell;
            }
            let inside = match orbit.points[idx].as_complex() {
                Some(v) => match grid.pixel_of(v) {
                    Some((i, j)) => hull[i * grid.width + j],
                    None => false,
                },
                // towered values are far outside any bounded window
                None => false,
            };
            if inside {
                continue 'ell;
            }
        }
        return HullLabel::FastEscaping { ell };
    }
    HullLabel::Undecided
}

/// Certify points as fast escaping using nested hulls of forward circle
/// images.  Returns one label per query point.
pub fn classify_a_hull_oracle(
    spec: &FunctionSpec,
    params: &HullOracleParams,
    queries: &[Complex64],
) -> Result<Vec<HullLabel>, RasterError> {
    let hulls = build_hulls(spec, params)?;
    let grid = RasterGrid::new(
        params.top_left,
        params.bottom_right,
        params.width,
        params.height,
    );
    Ok(queries
        .iter()
        .map(|&z| classify_against(spec, params, &grid, &hulls, z))
        .collect())
}
