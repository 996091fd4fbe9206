//! The logarithmic change of variable exp(F(w)) = f(exp(w)): level-set
//! tracing of tract boundaries, branch-tracked evaluation of F, empirical
//! slope/wiggling/gulf geometry, and the disjoint-type check.

use crate::catalog::FunctionSpec;
use crate::dynamics::{find_attractors, Attractor, AttractorKind};
use crate::numeric::{wrap_angle, LogSafe, Magnitude};
use crate::roots::BoxRegion;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, TAU};
use thiserror::Error;

/// Boundary tracing stops once Re w passes this.
pub const RE_CUTOFF: f64 = 6.0;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("singular-orbit datum {value} lies outside the excluded disc (rho = {rho})")]
    SingularValuesNotEnclosed { value: Complex64, rho: f64 },
    #[error("seed {seed} is not on the level set (|log residual| = {residual})")]
    SeedNotOnLevelSet { seed: Complex64, residual: f64 },
    #[error("continuation path left the tract near {at}")]
    PathLeftTract { at: Complex64 },
    #[error("basevalue does not satisfy exp(F) = f(exp(.)) (residual {residual})")]
    BadBaseValue { residual: f64 },
    #[error("raster window too small: need Re up to {needed}, have {have}")]
    WindowTooSmall { needed: f64, have: f64 },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

/// The excluded disc D = {|z - center| < rho}; W is its complement.
///
/// The disc must contain every finite singular value together with 0 and
/// f(0), so that log(f(exp(.))) is branchable on the tracts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransformSetup {
    pub spec: FunctionSpec,
    pub rho: f64,
    pub center: Complex64,
    /// Re-cutoff past which sampled |F'| >= 2 held; None until estimated.
    pub normalization_shift: Option<f64>,
}

impl TransformSetup {
    pub fn new(spec: FunctionSpec, rho: f64) -> Result<Self, TransformError> {
        Self::with_center(spec, rho, Complex64::new(0.0, 0.0))
    }

    /// Off-center disc; any disc containing the singular data works, and
    /// some maps need the extra freedom.
    pub fn with_center(
        spec: FunctionSpec,
        rho: f64,
        center: Complex64,
    ) -> Result<Self, TransformError> {
        assert!(rho > 0.0);
        let singular = spec.singular_values(&BoxRegion::centered(10.0));
        let mut must_cover = singular.all_values();
        must_cover.push(Complex64::new(0.0, 0.0));
        if let Some(f0) = spec.evaluate_plain(Complex64::new(0.0, 0.0)) {
            must_cover.push(f0);
        }
        for v in must_cover {
            if (v - center).norm() >= rho {
                return Err(TransformError::SingularValuesNotEnclosed { value: v, rho });
            }
        }
        Ok(TransformSetup {
            spec,
            rho,
            center,
            normalization_shift: None,
        })
    }

    /// Signed log-distance of f(e^w) from the disc boundary; positive inside
    /// the tract region {|f(e^w) - center| > rho}.
    pub fn level(&self, w: Complex64) -> f64 {
        if w.re > 700.0 {
            return f64::INFINITY;
        }
        match self.spec.evaluate(w.exp()) {
            LogSafe::Plain(v) => (v - self.center).norm().ln() - self.rho.ln(),
            // Far past f64 range the center offset is below resolution.
            other => match other.log_modulus().as_f64() {
                Some(l) => l - self.rho.ln(),
                None => f64::INFINITY,
            },
        }
    }

    /// ln |F'(w)| computed in log scale, usable deep in the tract where the
    /// values themselves overflow; +inf once even the logs leave f64 range.
    pub fn log_derivative_magnitude(&self, w: Complex64) -> Option<f64> {
        if w.re > 700.0 {
            return Some(f64::INFINITY);
        }
        let z = w.exp();
        let log_df = self.spec.derivative(z).log_modulus();
        let log_f = match self.spec.evaluate(z) {
            LogSafe::Plain(v) => {
                let d = (v - self.center).norm();
                if d < 1e-12 {
                    return None;
                }
                Magnitude::from_value(d.ln())
            }
            other => other.log_modulus(),
        };
        match (log_df.as_f64(), log_f.as_f64()) {
            (Some(a), Some(b)) => Some(a + z.norm().ln() - b),
            // a towered derivative dwarfs any denominator here
            (None, _) => Some(f64::INFINITY),
            (Some(_), None) => Some(f64::NEG_INFINITY),
        }
    }

    /// F'(w) = f'(e^w) e^w / (f(e^w) - center), the log-derivative along the
    /// tract (center enters only through the tract's defining level set).
    pub fn log_derivative(&self, w: Complex64) -> Option<Complex64> {
        let z = w.exp();
        let fz = self.spec.evaluate_plain(z)?;
        let dz = self.spec.derivative_plain(z)?;
        let denom = fz - self.center;
        if denom.norm() < 1e-12 {
            return None;
        }
        Some(dz * z / denom)
    }
}

/// A traced tract: boundary polyline with the tract on its left, plus
/// empirical geometry fits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tract {
    pub boundary: Vec<Complex64>,
    pub anchor: Complex64,
    /// (alpha, beta): |Im w1 - Im w2| <= alpha max{Re w1, Re w2, 0} + beta.
    pub slope_fit: Option<(f64, f64)>,
    /// (K', mu): along the midline, (Re w)^+ > (1/K') Re w0 - mu.
    pub wiggling_fit: Option<(f64, f64)>,
    /// (C, ok) from the cross-cut separation probe.
    pub gulfs_ok: Option<(f64, bool)>,
    pub disjoint_type: Option<bool>,
    /// False when the corrector lost the curve; boundary is then partial.
    pub complete: bool,
}

fn gradient(setup: &TransformSetup, w: Complex64) -> Option<Complex64> {
    // level = Re log(f(e^w) - center), so the plane gradient is conj(F').
    Some(setup.log_derivative(w)?.conj())
}

fn correct_to_curve(setup: &TransformSetup, mut w: Complex64, iters: usize) -> Option<Complex64> {
    for _ in 0..iters {
        let h = setup.level(w);
        if !h.is_finite() {
            return None;
        }
        if h.abs() < 1e-11 {
            return Some(w);
        }
        let g = gradient(setup, w)?;
        let n2 = g.norm_sqr();
        if n2 < 1e-20 {
            return None;
        }
        w -= h * g / n2;
    }
    if setup.level(w).abs() < 1e-9 {
        Some(w)
    } else {
        None
    }
}

struct Walk {
    points: Vec<Complex64>,
    lost: bool,
}

fn walk_level_curve(
    setup: &TransformSetup,
    start: Complex64,
    forward: bool,
    max_arclength: f64,
) -> Walk {
    const BASE_STEP: f64 = 0.02;
    let mut points = Vec::new();
    let mut w = start;
    let mut step = BASE_STEP;
    let mut arclen = 0.0;
    while w.re <= RE_CUTOFF && arclen < max_arclength {
        let Some(g) = gradient(setup, w) else {
            return Walk { points, lost: true };
        };
        let n = g.norm();
        if n < 1e-10 {
            return Walk { points, lost: true };
        }
        // Unit tangent keeping {level > 0} on the left when walking forward.
        let mut t = Complex64::new(0.0, -1.0) * g / n;
        if !forward {
            t = -t;
        }
        let predicted = w + step * t;
        match correct_to_curve(setup, predicted, 8) {
            Some(next) if (next - w).norm() <= 3.0 * step => {
                arclen += (next - w).norm();
                points.push(next);
                w = next;
                step = (step * 1.5).min(BASE_STEP);
            }
            _ => {
                step *= 0.5;
                if step < 1e-6 {
                    return Walk { points, lost: true };
                }
            }
        }
    }
    Walk {
        points,
        lost: false,
    }
}

/// Predictor-corrector continuation of {|f(e^w) - center| = rho} through the
/// seed, in both directions, until Re w passes the cutoff.
pub fn trace_tract_boundary(
    setup: &TransformSetup,
    seed: Complex64,
    max_arclength: f64,
) -> Result<Tract, TransformError> {
    let h0 = setup.level(seed);
    if !h0.is_finite() || h0.abs() > 0.3 {
        return Err(TransformError::SeedNotOnLevelSet {
            seed,
            residual: h0.abs(),
        });
    }
    let on_curve =
        correct_to_curve(setup, seed, 30).ok_or(TransformError::SeedNotOnLevelSet {
            seed,
            residual: h0.abs(),
        })?;
    let fwd = walk_level_curve(setup, on_curve, true, max_arclength / 2.0);
    let back = walk_level_curve(setup, on_curve, false, max_arclength / 2.0);
    let mut boundary: Vec<Complex64> = back.points.iter().rev().copied().collect();
    boundary.push(on_curve);
    boundary.extend(fwd.points.iter().copied());

    // interior representative on the {level > 0} side
    let mut anchor = on_curve;
    if let Some(g) = gradient(setup, on_curve) {
        let dir = g / g.norm();
        for s in [0.1, 0.3, 0.6, 1.0] {
            let cand = on_curve + s * dir;
            if setup.level(cand) > 0.05 {
                anchor = cand;
                break;
            }
        }
    }
    Ok(Tract {
        boundary,
        anchor,
        slope_fit: None,
        wiggling_fit: None,
        gulfs_ok: None,
        disjoint_type: None,
        complete: !fwd.lost && !back.lost,
    })
}

/// Analytic continuation of log(f(e^.)) along the straight path from
/// `basepoint` to `w`, branch fixed by `basevalue`.
pub fn eval_transform(
    setup: &TransformSetup,
    w: Complex64,
    basepoint: Complex64,
    basevalue: Complex64,
) -> Result<Complex64, TransformError> {
    let target = |p: Complex64| -> Result<Complex64, TransformError> {
        setup
            .spec
            .evaluate_plain(p.exp())
            .ok_or(TransformError::PathLeftTract { at: p })
    };
    let t0 = target(basepoint)?;
    let residual = (basevalue.exp() - t0).norm() / t0.norm().max(1e-300);
    if residual > 1e-9 {
        return Err(TransformError::BadBaseValue { residual });
    }

    let mut arg = basevalue.im;
    let mut prev_point = basepoint;
    let mut prev_target = t0;
    let mut pending: VecDeque<Complex64> = VecDeque::new();
    let n = ((w - basepoint).norm() / 0.05).ceil().max(4.0) as usize;
    for k in 1..=n {
        pending.push_back(basepoint + (w - basepoint) * (k as f64 / n as f64));
    }
    let mut steps = 0usize;
    while let Some(p) = pending.pop_front() {
        steps += 1;
        if steps > 200_000 {
            return Err(TransformError::Inconclusive(
                "continuation subdivision budget exhausted".into(),
            ));
        }
        if setup.level(p) < -1e-6 {
            return Err(TransformError::PathLeftTract { at: p });
        }
        let t = target(p)?;
        let d = wrap_angle(t.arg() - prev_target.arg());
        if d.abs() >= FRAC_PI_2 && (p - prev_point).norm() > 1e-12 {
            // halve the step to keep the branch tracking unambiguous
            pending.push_front(p);
            pending.push_front(prev_point + (p - prev_point) * 0.5);
            continue;
        }
        arg += d;
        prev_point = p;
        prev_target = t;
    }
    Ok(Complex64::new(prev_target.norm().ln(), arg))
}

/// |F'| by central differences of the continuation, step 1e-6.
pub fn transform_derivative(
    setup: &TransformSetup,
    w: Complex64,
    basepoint: Complex64,
    basevalue: Complex64,
) -> Result<Complex64, TransformError> {
    let h = 1e-6;
    let fp = eval_transform(setup, w + h, basepoint, basevalue)?;
    let fm = eval_transform(setup, w - h, basepoint, basevalue)?;
    Ok((fp - fm) / (2.0 * h))
}

/// Smallest Re-cutoff (in 0.5 steps) past which all boundary and midline
/// samples have |F'| >= 2; None if even the largest cutoff fails.
pub fn estimate_normalization_shift(setup: &TransformSetup, tract: &Tract) -> Option<f64> {
    let samples: Vec<Complex64> = tract
        .boundary
        .iter()
        .copied()
        .chain(midline(&tract.boundary, 200))
        .collect();
    let mut shift = 0.0f64;
    while shift <= RE_CUTOFF {
        let ok = samples
            .iter()
            .filter(|w| w.re >= shift)
            .all(|w| match setup.log_derivative_magnitude(*w) {
                Some(d) => d >= 2.0f64.ln(),
                None => false,
            });
        if ok {
            return Some(shift);
        }
        shift += 0.5;
    }
    None
}

fn resample_polyline(points: &[Complex64], n: usize) -> Vec<Complex64> {
    assert!(points.len() >= 2 && n >= 2);
    let mut cum = Vec::with_capacity(points.len());
    let mut total = 0.0;
    cum.push(0.0);
    for k in 1..points.len() {
        total += (points[k] - points[k - 1]).norm();
        cum.push(total);
    }
    let mut out = Vec::with_capacity(n);
    let mut j = 0usize;
    for i in 0..n {
        let s = total * i as f64 / (n - 1) as f64;
        while j + 1 < cum.len() - 1 && cum[j + 1] < s {
            j += 1;
        }
        let seg = (cum[j + 1] - cum[j]).max(1e-300);
        let t = ((s - cum[j]) / seg).clamp(0.0, 1.0);
        out.push(points[j] + (points[j + 1] - points[j]) * t);
    }
    out
}

/// Equidistant proxy for the tract's central geodesic: the boundary is split
/// at its leftmost point and the two arcs are averaged by arclength fraction.
pub fn midline(boundary: &[Complex64], n: usize) -> Vec<Complex64> {
    if boundary.len() < 4 {
        return vec![];
    }
    let nose = boundary
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.re.partial_cmp(&b.1.re).unwrap())
        .unwrap()
        .0;
    if nose == 0 || nose + 1 >= boundary.len() {
        return vec![];
    }
    let mut arc1: Vec<Complex64> = boundary[..=nose].to_vec();
    arc1.reverse(); // both arcs now run nose -> far end
    let arc2: Vec<Complex64> = boundary[nose..].to_vec();
    if arc1.len() < 2 || arc2.len() < 2 {
        return vec![];
    }
    let r1 = resample_polyline(&arc1, n);
    let r2 = resample_polyline(&arc2, n);
    r1.iter().zip(r2.iter()).map(|(a, b)| (a + b) / 2.0).collect()
}

fn fit_slope(samples: &[Complex64]) -> (f64, f64) {
    let re_max = samples.iter().map(|w| w.re).fold(0.0f64, f64::max);
    let mut best = (0.0, f64::INFINITY, f64::INFINITY); // (alpha, beta, objective)
    for k in 0..=250 {
        let alpha = 0.02 * k as f64;
        let mut beta = 0.0f64;
        for i in 0..samples.len() {
            for j in i + 1..samples.len() {
                let need = (samples[i].im - samples[j].im).abs()
                    - alpha * samples[i].re.max(samples[j].re).max(0.0);
                beta = beta.max(need);
            }
        }
        beta += 1e-9;
        let objective = alpha * re_max + beta;
        if objective < best.2 {
            best = (alpha, beta, objective);
        }
    }
    (best.0, best.1)
}

fn fit_wiggling(mid: &[Complex64]) -> (f64, f64) {
    if mid.len() < 2 {
        return (1.0, 0.0);
    }
    let re_max = mid.iter().map(|w| w.re).fold(0.0f64, f64::max);
    // suffix minimum of (Re)^+ toward infinity
    let mut min_fwd = vec![0.0f64; mid.len()];
    let mut acc = f64::INFINITY;
    for k in (0..mid.len()).rev() {
        acc = acc.min(mid[k].re.max(0.0));
        min_fwd[k] = acc;
    }
    let mut best = (1.0, f64::INFINITY, f64::INFINITY);
    for k in 0..=700 {
        let kprime = 1.0 + 0.01 * k as f64;
        let mut mu = 0.0f64;
        for (w0, fwd) in mid.iter().zip(min_fwd.iter()) {
            mu = mu.max(w0.re / kprime - fwd);
        }
        mu += 1e-9;
        let objective = mu + (kprime - 1.0) * re_max;
        if objective < best.2 {
            best = (kprime, mu, objective);
        }
    }
    (best.0, best.1)
}

/// Populate slope and wiggling fits from `samples` resampled boundary points.
/// The fits are empirical upper bounds, not certificates.
pub fn estimate_geometry(tract: &Tract, samples: usize) -> Tract {
    let mut out = tract.clone();
    let pts = resample_polyline(&tract.boundary, samples);
    out.slope_fit = Some(fit_slope(&pts));
    out.wiggling_fit = Some(fit_wiggling(&midline(&tract.boundary, samples)));
    out
}

pub fn slope_inequality_holds(samples: &[Complex64], alpha: f64, beta: f64) -> bool {
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let lhs = (samples[i].im - samples[j].im).abs();
            let rhs = alpha * samples[i].re.max(samples[j].re).max(0.0) + beta;
            if lhs > rhs + 1e-9 {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum DisjointWitness {
    BoundaryPoint(Complex64),
    ExtraAttractor(Attractor),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisjointTypeReport {
    pub disjoint: bool,
    pub witness: Option<DisjointWitness>,
}

/// Disjoint type: the tract closures stay inside exp^{-1}(W), and a single
/// attracting cycle absorbs every singular-value orbit.
pub fn check_disjoint_type(
    setup: &TransformSetup,
    tracts: &[Tract],
) -> Result<DisjointTypeReport, TransformError> {
    let attractors = find_attractors(&setup.spec, &BoxRegion::centered(6.0), 2);
    let attracting: Vec<&Attractor> = attractors
        .iter()
        .filter(|a| {
            a.kind == AttractorKind::Attracting || a.kind == AttractorKind::Superattracting
        })
        .collect();
    if attracting.is_empty() {
        return Err(TransformError::Inconclusive(
            "no attracting cycle found in the search box".into(),
        ));
    }
    if attracting.len() > 1 {
        return Ok(DisjointTypeReport {
            disjoint: false,
            witness: Some(DisjointWitness::ExtraAttractor(attracting[1].clone())),
        });
    }
    let cycle = &attracting[0].cycle;
    let singular = setup.spec.singular_values(&BoxRegion::centered(8.0));
    for v in singular.all_values() {
        let mut z = v;
        let mut absorbed = false;
        for _ in 0..500 {
            if cycle.iter().any(|c| (z - c).norm() < 1e-5) {
                absorbed = true;
                break;
            }
            match setup.spec.evaluate_plain(z) {
                Some(w) if w.norm() < 1e8 => z = w,
                _ => break,
            }
        }
        if !absorbed {
            return Err(TransformError::Inconclusive(format!(
                "singular value {v} did not resolve to the attracting cycle"
            )));
        }
    }
    for tract in tracts {
        for w in &tract.boundary {
            if (w.exp() - setup.center).norm() <= setup.rho {
                return Ok(DisjointTypeReport {
                    disjoint: false,
                    witness: Some(DisjointWitness::BoundaryPoint(*w)),
                });
            }
        }
    }
    Ok(DisjointTypeReport {
        disjoint: true,
        witness: None,
    })
}

/// Binary occupancy raster of a tract over a rectangle, used by the gulf
/// cross-cut probes.
#[derive(Clone, Debug)]
pub struct TractRaster {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub inside: Vec<bool>,
}

impl TractRaster {
    pub fn from_fn<F: Fn(Complex64) -> bool>(
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        nx: usize,
        ny: usize,
        pred: F,
    ) -> Self {
        let mut inside = vec![false; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let w = Complex64::new(
                    re_min + (re_max - re_min) * (ix as f64 + 0.5) / nx as f64,
                    im_min + (im_max - im_min) * (iy as f64 + 0.5) / ny as f64,
                );
                inside[iy * nx + ix] = pred(w);
            }
        }
        TractRaster {
            re_min,
            re_max,
            im_min,
            im_max,
            nx,
            ny,
            inside,
        }
    }

    pub fn from_setup(
        setup: &TransformSetup,
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        nx: usize,
        ny: usize,
    ) -> Self {
        Self::from_fn(re_min, re_max, im_min, im_max, nx, ny, |w| {
            setup.level(w) > 0.0
        })
    }

    fn at(&self, ix: usize, iy: usize) -> bool {
        self.inside[iy * self.nx + ix]
    }

    fn pixel_of(&self, w: Complex64) -> Option<(usize, usize)> {
        let fx = (w.re - self.re_min) / (self.re_max - self.re_min) * self.nx as f64;
        let fy = (w.im - self.im_min) / (self.im_max - self.im_min) * self.ny as f64;
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Nearest inside pixel within a small search radius.
    fn inside_pixel_near(&self, w: Complex64) -> Option<(usize, usize)> {
        let (cx, cy) = self.pixel_of(w)?;
        for radius in 0..12i64 {
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    let x = cx as i64 + dx;
                    let y = cy as i64 + dy;
                    if x >= 0
                        && y >= 0
                        && (x as usize) < self.nx
                        && (y as usize) < self.ny
                        && self.at(x as usize, y as usize)
                    {
                        return Some((x as usize, y as usize));
                    }
                }
            }
        }
        None
    }

    fn column_of_re(&self, re: f64) -> Option<usize> {
        if re < self.re_min || re >= self.re_max {
            return None;
        }
        let fx = (re - self.re_min) / (self.re_max - self.re_min) * self.nx as f64;
        Some((fx as usize).min(self.nx - 1))
    }

    /// Maximal vertical runs of inside pixels in the given column.
    fn column_runs(&self, ix: usize) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for iy in 0..self.ny {
            match (self.at(ix, iy), start) {
                (true, None) => start = Some(iy),
                (false, Some(s)) => {
                    runs.push((s, iy - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.ny - 1));
        }
        runs
    }

    /// 4-connected flood from the right frame edge, avoiding a blocked run in
    /// one column; returns the reachability mask.
    fn reach_from_right(&self, blocked_col: usize, blocked_run: (usize, usize)) -> Vec<bool> {
        let mut seen = vec![false; self.nx * self.ny];
        let mut queue = VecDeque::new();
        let blocked = |ix: usize, iy: usize| {
            ix == blocked_col && iy >= blocked_run.0 && iy <= blocked_run.1
        };
        for iy in 0..self.ny {
            let ix = self.nx - 1;
            if self.at(ix, iy) && !blocked(ix, iy) {
                seen[iy * self.nx + ix] = true;
                queue.push_back((ix, iy));
            }
        }
        while let Some((ix, iy)) = queue.pop_front() {
            let push = |x: i64, y: i64, seen: &mut Vec<bool>, queue: &mut VecDeque<_>| {
                if x < 0 || y < 0 || x as usize >= self.nx || y as usize >= self.ny {
                    return;
                }
                let (x, y) = (x as usize, y as usize);
                if self.at(x, y) && !blocked(x, y) && !seen[y * self.nx + x] {
                    seen[y * self.nx + x] = true;
                    queue.push_back((x, y));
                }
            };
            push(ix as i64 + 1, iy as i64, &mut seen, &mut queue);
            push(ix as i64 - 1, iy as i64, &mut seen, &mut queue);
            push(ix as i64, iy as i64 + 1, &mut seen, &mut queue);
            push(ix as i64, iy as i64 - 1, &mut seen, &mut queue);
        }
        seen
    }
}

/// Gulf probe: for each probe w and cut level a = C Re w, find the cross-cut
/// component separating w from the right frame edge and test whether it also
/// separates p.  Returns the smallest passing candidate, or the smallest
/// candidate with ok = false.
pub fn check_gulfs(
    raster: &TractRaster,
    p: Complex64,
    probes: &[Complex64],
    c_candidates: &[f64],
) -> Result<Option<(f64, bool)>, TransformError> {
    if c_candidates.is_empty() {
        return Ok(None);
    }
    let mut candidates = c_candidates.to_vec();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if probes.is_empty() {
        return Ok(Some((candidates[0], true)));
    }
    let p_pix = p_pixel(raster, p)?;
    for &c in &candidates {
        let mut all_pass = true;
        for &probe in probes {
            let a = c * probe.re;
            if a >= raster.re_max {
                return Err(TransformError::WindowTooSmall {
                    needed: a,
                    have: raster.re_max,
                });
            }
            if !probe_passes(raster, probe, p_pix, a)? {
                all_pass = false;
                break;
            }
        }
        if all_pass {
            return Ok(Some((c, true)));
        }
    }
    Ok(Some((candidates[0], false)))
}

fn p_pixel(raster: &TractRaster, p: Complex64) -> Result<(usize, usize), TransformError> {
    raster
        .inside_pixel_near(p)
        .ok_or_else(|| TransformError::Inconclusive("p is not near the rasterized tract".into()))
}

fn probe_passes(
    raster: &TractRaster,
    probe: Complex64,
    p_pix: (usize, usize),
    a: f64,
) -> Result<bool, TransformError> {
    let w_pix = raster
        .inside_pixel_near(probe)
        .ok_or_else(|| TransformError::Inconclusive("probe not inside rasterized tract".into()))?;
    let col = raster
        .column_of_re(a)
        .ok_or(TransformError::WindowTooSmall {
            needed: a,
            have: raster.re_max,
        })?;
    for run in raster.column_runs(col) {
        let reach = raster.reach_from_right(col, run);
        let w_cut = !reach[w_pix.1 * raster.nx + w_pix.0];
        if w_cut {
            // this run is the component separating the probe from infinity
            let p_cut = !reach[p_pix.1 * raster.nx + p_pix.0];
            return Ok(p_cut);
        }
    }
    // no single cross-cut component separates the probe: treat as failure
    Ok(false)
}

/// Boundary point p with F(p) on the positive real axis (F(p) = log rho, the
/// origin after the half-plane normalization), found by tracking the argument
/// of f(e^w) along the boundary and taking the crossing nearest the nose.
pub fn locate_base_boundary_point(setup: &TransformSetup, tract: &Tract) -> Option<Complex64> {
    let pts = &tract.boundary;
    if pts.len() < 2 {
        return None;
    }
    let mut args = Vec::with_capacity(pts.len());
    let mut prev = setup.spec.evaluate_plain(pts[0].exp())?;
    let mut acc = prev.arg();
    args.push(acc);
    for w in &pts[1..] {
        let t = setup.spec.evaluate_plain(w.exp())?;
        acc += wrap_angle(t.arg() - prev.arg());
        args.push(acc);
        prev = t;
    }
    let nose_re = pts.iter().map(|w| w.re).fold(f64::INFINITY, f64::min);
    let mut best: Option<(f64, Complex64)> = None;
    for k in 0..pts.len() - 1 {
        // crossing of arg == 0 (mod 2 pi) between consecutive samples
        let a0 = args[k];
        let a1 = args[k + 1];
        let lo = (a0 / TAU).floor() as i64 - 1;
        let hi = (a1 / TAU).ceil() as i64 + 1;
        for m in lo.min(hi)..=hi.max(lo) {
            let level = m as f64 * TAU;
            if (a0 - level) * (a1 - level) <= 0.0 && (a1 - a0).abs() > 1e-15 {
                let t = (level - a0) / (a1 - a0);
                if !(0.0..=1.0).contains(&t) {
                    continue;
                }
                let w = pts[k] + (pts[k + 1] - pts[k]) * t;
                let score = w.re - nose_re;
                if best.map(|(s, _)| score < s).unwrap_or(true) {
                    best = Some((score, w));
                }
            }
        }
    }
    best.map(|(_, w)| w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn expaffine2_setup() -> TransformSetup {
        TransformSetup::new(FunctionSpec::ExpAffine { a: c(-2.0, 0.0) }, 10.0).unwrap()
    }

    fn expaffine2_tract() -> Tract {
        let setup = expaffine2_setup();
        // real crossing: e^x - 2 = 10 at x = ln 12, so w = ln ln 12
        let seed = c(12.0f64.ln().ln(), 0.0);
        trace_tract_boundary(&setup, seed, 60.0).unwrap()
    }

    #[test]
    fn setup_rejects_small_disc() {
        let err = TransformSetup::new(FunctionSpec::ExpAffine { a: c(-2.0, 0.0) }, 1.0);
        assert!(matches!(
            err,
            Err(TransformError::SingularValuesNotEnclosed { .. })
        ));
        assert!(TransformSetup::new(FunctionSpec::ExpAffine { a: c(-2.0, 0.0) }, 10.0).is_ok());
    }

    #[test]
    fn trace_boundary_on_level_set() {
        let setup = expaffine2_setup();
        let seed = c(12.0f64.ln().ln(), 0.0);
        assert!(setup.level(seed).abs() < 1e-9, "two-step log solve");
        let tract = expaffine2_tract();
        assert!(tract.complete);
        assert!(tract.boundary.len() > 100);
        for w in &tract.boundary {
            let v = setup.spec.evaluate_plain(w.exp()).unwrap();
            assert!(
                ((v.norm() - 10.0) / 10.0).abs() < 1e-6,
                "boundary point {w} off the level set: |f| = {}",
                v.norm()
            );
        }
        // both unbounded ends reached the cutoff
        assert!(tract.boundary.first().unwrap().re > RE_CUTOFF - 0.5);
        assert!(tract.boundary.last().unwrap().re > RE_CUTOFF - 0.5);
        // tract on the left: anchor is inside
        assert!(setup.level(tract.anchor) > 0.0);
    }

    #[test]
    fn periodic_copy_of_boundary() {
        let setup = expaffine2_setup();
        let tract = expaffine2_tract();
        for w in tract.boundary.iter().step_by(50) {
            assert!(setup.level(w + c(0.0, TAU)).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_seed_rejected() {
        let setup = expaffine2_setup();
        // |f(e^s)| = 5 = rho/2: e^x - 2 = 5 at x = ln 7
        let seed = c(7.0f64.ln().ln(), 0.0);
        assert!(matches!(
            trace_tract_boundary(&setup, seed, 10.0),
            Err(TransformError::SeedNotOnLevelSet { .. })
        ));
    }

    #[test]
    fn eval_identity_at_basepoint() {
        let setup = expaffine2_setup();
        let b = c(1.5, 0.0);
        let basevalue = {
            let t = setup.spec.evaluate_plain(b.exp()).unwrap();
            c(t.norm().ln(), t.arg())
        };
        let v = eval_transform(&setup, b, b, basevalue).unwrap();
        assert!((v - basevalue).norm() < 1e-12);
    }

    #[test]
    fn pure_exponential_transform_is_exp() {
        let setup = TransformSetup::new(FunctionSpec::ExpAffine { a: c(0.0, 0.0) }, 2.0).unwrap();
        // F(w) = e^w exactly; base at w = 0 with F = 1
        let v = eval_transform(&setup, c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((v - c(1.0f64.exp(), 0.0)).norm() < 1e-9, "got {v}");
        // functional equation residual
        let lhs = v.exp();
        let rhs = setup.spec.evaluate_plain(c(1.0, 0.0).exp()).unwrap();
        assert!((lhs - rhs).norm() / rhs.norm() < 1e-9);
    }

    #[test]
    fn periodic_branch_choice() {
        let setup = expaffine2_setup();
        let b = c(1.5, 0.0);
        let t = setup.spec.evaluate_plain(b.exp()).unwrap();
        let basevalue = c(t.norm().ln(), t.arg());
        let w = c(2.0, 0.3);
        let v0 = eval_transform(&setup, w, b, basevalue).unwrap();
        let v1 = eval_transform(&setup, w + c(0.0, TAU), b + c(0.0, TAU), basevalue).unwrap();
        assert!((v1 - v0).norm() < 1e-9);
    }

    #[test]
    fn continuation_leaves_tract() {
        let setup = expaffine2_setup();
        let b = c(1.5, 0.0);
        let t = setup.spec.evaluate_plain(b.exp()).unwrap();
        let basevalue = c(t.norm().ln(), t.arg());
        // rotating e^w to a negative real part sends |f(e^w)| under rho
        let out = eval_transform(&setup, c(1.5, 3.0), b, basevalue);
        assert!(matches!(out, Err(TransformError::PathLeftTract { .. })));
    }

    fn half_strip_tract(re_max: f64) -> Tract {
        // boundary of {0 < Re, |Im| < 1}, walked with the strip on the left
        let mut boundary = Vec::new();
        let n = 200;
        for k in 0..n {
            let x = re_max - re_max * k as f64 / (n - 1) as f64;
            boundary.push(c(x, 1.0));
        }
        for k in 1..10 {
            boundary.push(c(0.0, 1.0 - 2.0 * k as f64 / 10.0));
        }
        for k in 0..n {
            let x = re_max * k as f64 / (n - 1) as f64;
            boundary.push(c(x, -1.0));
        }
        Tract {
            boundary,
            anchor: c(re_max / 2.0, 0.0),
            slope_fit: None,
            wiggling_fit: None,
            gulfs_ok: None,
            disjoint_type: None,
            complete: true,
        }
    }

    #[test]
    fn half_strip_slope_and_wiggling() {
        let tract = half_strip_tract(20.0);
        let fitted = estimate_geometry(&tract, 300);
        let (alpha, beta) = fitted.slope_fit.unwrap();
        assert!(alpha.abs() < 1e-9, "alpha = {alpha}");
        assert!((beta - 2.0).abs() < 0.02, "beta = {beta}");
        let (kprime, mu) = fitted.wiggling_fit.unwrap();
        assert!(kprime < 1.05, "K' = {kprime}");
        assert!(mu < 0.2, "mu = {mu}");
    }

    #[test]
    fn real_tract_fits_hold_on_fresh_resample() {
        let tract = expaffine2_tract();
        let fitted = estimate_geometry(&tract, 300);
        let (alpha, beta) = fitted.slope_fit.unwrap();
        assert!(alpha.is_finite() && beta.is_finite() && beta > 0.0);
        // train/test: the fitted pair must hold on a different sampling
        let fresh = resample_polyline(&tract.boundary, 431);
        assert!(slope_inequality_holds(&fresh, alpha, beta));
        let (kprime, mu) = fitted.wiggling_fit.unwrap();
        assert!(kprime >= 1.0 && mu >= 0.0);
    }

    #[test]
    fn normalization_derivative_bound() {
        let setup = expaffine2_setup();
        let tract = expaffine2_tract();
        let shift = estimate_normalization_shift(&setup, &tract).unwrap();
        assert!(shift <= 0.5, "shift = {shift}");
        // spot-check |F'| against central differences of the continuation
        let b = c(1.5, 0.0);
        let t = setup.spec.evaluate_plain(b.exp()).unwrap();
        let basevalue = c(t.norm().ln(), t.arg());
        let fd = transform_derivative(&setup, c(1.8, 0.1), b, basevalue).unwrap();
        let direct = setup.log_derivative(c(1.8, 0.1)).unwrap();
        assert!((fd - direct).norm() < 1e-4, "fd {fd} vs direct {direct}");
        assert!(direct.norm() >= 2.0);
    }

    #[test]
    fn disjoint_type_catalog_results() {
        // lambda in (0,1): single superattracting basin absorbs everything
        let setup =
            TransformSetup::new(FunctionSpec::quad_exp(0.5).unwrap(), 0.6).unwrap();
        let seed = {
            // imaginary-axis crossing: 0.5 y^2 e^{y^2} = 0.6
            let mut t: f64 = 0.6;
            for _ in 0..80 {
                t -= (t * t.exp() - 1.2) / ((1.0 + t) * t.exp());
            }
            c(t.sqrt().ln(), FRAC_PI_2)
        };
        let tract = trace_tract_boundary(&setup, seed, 60.0).unwrap();
        let report = check_disjoint_type(&setup, std::slice::from_ref(&tract)).unwrap();
        assert!(report.disjoint, "witness: {:?}", report.witness);

        // lambda > 1: a second attracting fixed point appears near 1
        let setup2 =
            TransformSetup::new(FunctionSpec::quad_exp(1.1).unwrap(), 1.5).unwrap();
        let report2 = check_disjoint_type(&setup2, &[]).unwrap();
        assert!(!report2.disjoint);
        match report2.witness {
            Some(DisjointWitness::ExtraAttractor(ref a)) => {
                assert!((a.cycle[0].re - 1.0).abs() < 0.5);
            }
            other => panic!("expected extra-attractor witness, got {other:?}"),
        }

        // e^z - 2 with an off-center disc around the singular data
        let setup3 = TransformSetup::with_center(
            FunctionSpec::ExpAffine { a: c(-2.0, 0.0) },
            3.0,
            c(-2.0, 0.0),
        )
        .unwrap();
        // level |e^{e^w}| = 3: real seed at ln ln 3
        let seed3 = c(3.0f64.ln().ln(), 0.0);
        let tract3 = trace_tract_boundary(&setup3, seed3, 60.0).unwrap();
        let report3 = check_disjoint_type(&setup3, std::slice::from_ref(&tract3)).unwrap();
        assert!(report3.disjoint, "witness: {:?}", report3.witness);
    }

    fn half_strip_raster() -> TractRaster {
        TractRaster::from_fn(0.0, 20.0, -2.0, 2.0, 400, 80, |w| {
            w.re > 0.0 && w.im.abs() < 1.0
        })
    }

    #[test]
    fn gulfs_half_strip_passes_smallest() {
        let raster = half_strip_raster();
        let p = c(0.2, 0.0);
        let probes = [c(2.0, 0.0), c(5.0, 0.2), c(8.0, -0.5)];
        let got = check_gulfs(&raster, p, &probes, &[1.5, 2.0, 3.0]).unwrap();
        assert_eq!(got, Some((1.5, true)));
    }

    #[test]
    fn gulfs_comb_fails_small_candidates() {
        // a tract that doubles back: outgoing corridor, bend, returning gulf
        let raster = TractRaster::from_fn(0.0, 21.0, -0.5, 6.0, 420, 130, |w| {
            let corridor = w.re > 0.5 && w.im > 0.0 && w.im < 1.0;
            let bend = w.re > 19.0 && w.im > 0.0 && w.im < 5.0;
            let gulf = w.re > 0.5 && w.re < 20.5 && w.im > 4.0 && w.im < 5.0;
            corridor || bend || gulf
        });
        let p = c(1.0, 0.5);
        let probe = [c(1.0, 4.5)]; // deep in the returning gulf
        let small = check_gulfs(&raster, p, &probe, &[2.0, 5.0]).unwrap();
        assert_eq!(small, Some((2.0, false)));
        let wide = check_gulfs(&raster, p, &probe, &[2.0, 19.6]).unwrap();
        assert_eq!(wide, Some((19.6, true)));
        // a candidate needing a cut beyond the window errors out
        assert!(matches!(
            check_gulfs(&raster, p, &probe, &[30.0]),
            Err(TransformError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn gulfs_no_probes_vacuous() {
        let raster = half_strip_raster();
        let got = check_gulfs(&raster, c(0.2, 0.0), &[], &[2.0, 4.0]).unwrap();
        assert_eq!(got, Some((2.0, true)));
    }

    #[test]
    fn base_boundary_point_on_positive_real_level() {
        let setup = expaffine2_setup();
        let tract = expaffine2_tract();
        let p = locate_base_boundary_point(&setup, &tract).unwrap();
        // f(e^p) = +rho exactly when e^{e^p} = 12
        assert_relative_eq!(p.re, 12.0f64.ln().ln(), epsilon = 1e-2);
        assert!(p.im.abs() < 1e-2);
        let v = setup.spec.evaluate_plain(p.exp()).unwrap();
        assert!((v - c(10.0, 0.0)).norm() < 1e-4, "f(e^p) = {v}");
    }

    #[test]
    fn gulfs_on_traced_tract() {
        let setup = expaffine2_setup();
        let tract = expaffine2_tract();
        let raster = TractRaster::from_setup(&setup, 0.0, 6.0, -PI, PI, 480, 400);
        let p = locate_base_boundary_point(&setup, &tract).unwrap();
        let probes = [c(1.5, 0.0), c(2.5, 0.3)];
        let got = check_gulfs(&raster, p, &probes, &[1.2, 1.5, 2.0]).unwrap();
        let (c_found, ok) = got.unwrap();
        assert!(ok, "exponential tract should have no forward gulfs");
        assert!(c_found <= 1.5);
    }
}
