//! Orbit iteration in log-safe arithmetic, the maximum-modulus ladder,
//! escape-speed classification and attractor discovery.

use crate::catalog::FunctionSpec;
use crate::numeric::{LogSafe, Magnitude};
use crate::roots::{newton, BoxRegion};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub const DEFAULT_BUDGET: usize = 200;
pub const DEFAULT_ELL_MAX: usize = 8;
pub const DEFAULT_LADDER_DEPTH: usize = 64;
/// Compact box |z| <= this counts as "stayed bounded" for a full budget.
pub const BOUNDED_BOX: f64 = 1.0e6;
/// Default log-modulus horizon for orbit termination.
pub const DEFAULT_HORIZON: f64 = 1.0e12;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("ladder base invalid: log M({r}) = {log_max} <= log {r}")]
    LadderBaseInvalid { r: f64, log_max: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    BudgetExhausted,
    ConvergedToAttractor { limit: Complex64 },
    EscapedBeyondHorizon { step: usize },
    /// The leading-term step lost the orbit's dominant direction.
    DirectionLost { step: usize },
}

/// A forward orbit under a catalog function.
#[derive(Clone, Debug)]
pub struct Orbit {
    pub points: Vec<LogSafe>,
    pub termination: Termination,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn log_moduli(&self) -> Vec<Magnitude> {
        self.points.iter().map(|p| p.log_modulus()).collect()
    }
}

/// Iterate `z0` under `spec` until the budget runs out, the orbit verifiably
/// converges, the log-modulus passes `horizon`, or a leading-term step loses
/// direction.  A non-finite `horizon` disables the size cutoff.
pub fn iterate_orbit(spec: &FunctionSpec, z0: Complex64, budget: usize, horizon: f64) -> Orbit {
    assert!(budget >= 1);
    let horizon_mag = if horizon.is_finite() {
        Some(Magnitude::from_value(horizon))
    } else {
        None
    };
    let mut points = vec![LogSafe::Plain(z0)];
    let mut prev_step: Option<f64> = None;
    for step in 1..=budget {
        let next = match spec.advance(points.last().unwrap()) {
            Some(v) => v,
            None => {
                return Orbit {
                    points,
                    termination: Termination::DirectionLost { step },
                }
            }
        };
        points.push(next);
        if let Some(h) = horizon_mag {
            if next.log_modulus() > h {
                return Orbit {
                    points,
                    termination: Termination::EscapedBeyondHorizon { step },
                };
            }
        }
        if let (Some(a), Some(b)) = (
            points[points.len() - 2].as_complex(),
            next.as_complex(),
        ) {
            let d = (b - a).norm();
            if d > 0.0 && d < 1e-12 {
                // Geometric decay plus a strict attractor certificate; the
                // certificate fails at parabolic points, which then burn the
                // budget instead of claiming convergence.
                let geometric = prev_step.map(|p| p > 0.0 && d / p < 0.99).unwrap_or(false);
                if geometric && verified_attracting_limit(spec, b) {
                    return Orbit {
                        points,
                        termination: Termination::ConvergedToAttractor { limit: b },
                    };
                }
            }
            prev_step = Some(d);
        } else {
            prev_step = None;
        }
    }
    Orbit {
        points,
        termination: Termination::BudgetExhausted,
    }
}

fn verified_attracting_limit(spec: &FunctionSpec, z: Complex64) -> bool {
    let fixed = match spec.evaluate_plain(z) {
        Some(w) => (w - z).norm() < 1e-9,
        None => false,
    };
    if !fixed {
        return false;
    }
    match spec.derivative_plain(z) {
        Some(d) => d.norm() < 1.0 - 1e-10,
        None => false,
    }
}

/// The sequence `log M^n(R, f)` in iterated-log scale.
#[derive(Clone, Debug)]
pub struct ModulusLadder {
    pub spec: FunctionSpec,
    pub r: f64,
    /// `levels[n] = log M^{n+1}(R, f)`.
    pub levels: Vec<Magnitude>,
    /// Base radius at which `M(r, f) > r` was verified.
    pub validity_floor: f64,
}

/// Build the ladder, verifying `M(R, f) > R` and strict level growth.
pub fn modulus_ladder(
    spec: &FunctionSpec,
    r: f64,
    depth: usize,
) -> Result<ModulusLadder, DynamicsError> {
    assert!(depth >= 1 && r > 0.0);
    let first = spec.log_max_modulus(r);
    let log_r = r.ln();
    if !(first > Magnitude::from_value(log_r)) {
        return Err(DynamicsError::LadderBaseInvalid {
            r,
            log_max: first.as_f64().unwrap_or(f64::NAN),
        });
    }
    let mut levels = vec![first];
    for _ in 1..depth {
        let next = spec.log_max_modulus_from_log_radius(*levels.last().unwrap());
        debug_assert!(
            !(next <= *levels.last().unwrap()),
            "ladder levels must strictly increase"
        );
        levels.push(next);
    }
    Ok(ModulusLadder {
        spec: spec.clone(),
        r,
        levels,
        validity_floor: r,
    })
}

/// Smallest power of e at which the circle maximum exceeds the radius.
pub fn default_ladder_base(spec: &FunctionSpec) -> f64 {
    for k in 0..64 {
        let r = (k as f64).exp();
        if spec.log_max_modulus(r) > Magnitude::from_value(r.ln() + 1e-9) {
            return r;
        }
    }
    panic!("no valid ladder base below e^64 for {spec}");
}

pub fn default_ladder(spec: &FunctionSpec) -> ModulusLadder {
    modulus_ladder(spec, default_ladder_base(spec), DEFAULT_LADDER_DEPTH)
        .expect("default base was verified")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EscapeLabel {
    Bounded,
    EscapingNotFast,
    FastEscaping(usize),
    ExpFast(usize),
    Undecided,
}

impl EscapeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            EscapeLabel::Bounded => "bounded",
            EscapeLabel::EscapingNotFast => "escaping",
            EscapeLabel::FastEscaping(_) => "fast",
            EscapeLabel::ExpFast(_) => "exp-fast",
            EscapeLabel::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EscapeClass {
    pub label: EscapeLabel,
    /// Orbit step indices used as evidence for the label.
    pub evidence: Vec<usize>,
    pub steps: usize,
}

impl EscapeClass {
    /// One JSON-Lines record for point reports.
    pub fn report_line(&self, z: Complex64) -> String {
        let mut obj = json!({
            "z": [z.re, z.im],
            "label": self.label.as_str(),
            "steps": self.steps,
        });
        if let EscapeLabel::FastEscaping(ell) | EscapeLabel::ExpFast(ell) = self.label {
            obj["ell"] = json!(ell);
        }
        obj.to_string()
    }
}

/// Offsets at which the two speed tests certify, independent of the final
/// label preference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EscapeSpeeds {
    pub fast_offset: Option<usize>,
    pub exp_fast_offset: Option<usize>,
}

/// Minimum number of dominated ladder levels before a speed label is issued.
const MIN_TESTED_LEVELS: usize = 3;

/// Smallest offset `ell <= ell_max` whose shifted orbit dominates the ladder
/// at every tested level.
pub fn fast_offset(moduli: &[Magnitude], ladder: &ModulusLadder, ell_max: usize) -> Option<usize> {
    let base = Magnitude::from_value(ladder.r.ln());
    'offsets: for ell in 0..=ell_max {
        if ell >= moduli.len() || !(moduli[ell] >= base) {
            continue;
        }
        let mut tested = 0;
        for n in 1..ladder.levels.len() + 1 {
            let Some(s) = moduli.get(ell + n) else { break };
            if !(*s >= ladder.levels[n - 1]) {
                continue 'offsets;
            }
            tested += 1;
        }
        if tested >= MIN_TESTED_LEVELS {
            return Some(ell);
        }
    }
    None
}

/// Same test against the tower `exp^n(R)`, per the fastest escape class.
pub fn exp_fast_offset(moduli: &[Magnitude], r: f64, ell_max: usize) -> Option<usize> {
    let base = Magnitude::from_value(r.ln());
    'offsets: for ell in 0..=ell_max {
        if ell >= moduli.len() || !(moduli[ell] >= base) {
            continue;
        }
        // log of exp^n(R) is exp^{n-1}(R)
        let mut level = Magnitude::from_value(r);
        let mut tested = 0;
        for n in 1..moduli.len() {
            let Some(s) = moduli.get(ell + n) else { break };
            if !(*s >= level) {
                continue 'offsets;
            }
            tested += 1;
            level = level.exp();
        }
        if tested >= MIN_TESTED_LEVELS {
            return Some(ell);
        }
    }
    None
}

pub fn escape_speeds(moduli: &[Magnitude], ladder: &ModulusLadder, ell_max: usize) -> EscapeSpeeds {
    EscapeSpeeds {
        fast_offset: fast_offset(moduli, ladder, ell_max),
        exp_fast_offset: exp_fast_offset(moduli, ladder.r, ell_max),
    }
}

pub fn classify_escape(
    spec: &FunctionSpec,
    z: Complex64,
    ladder: &ModulusLadder,
    budget: usize,
) -> EscapeClass {
    classify_escape_with(spec, z, ladder, budget, DEFAULT_ELL_MAX)
}

pub fn classify_escape_with(
    spec: &FunctionSpec,
    z: Complex64,
    ladder: &ModulusLadder,
    budget: usize,
    ell_max: usize,
) -> EscapeClass {
    // Periodic points are bounded orbits even when repelling; forward
    // iteration would drift off them, so test periodicity first.
    let mut w = z;
    for p in 1..=4usize {
        match spec.evaluate_plain(w) {
            Some(v) if v.norm() < 1e8 => w = v,
            _ => break,
        }
        if (w - z).norm() < 1e-8 * z.norm().max(1.0) {
            return EscapeClass {
                label: EscapeLabel::Bounded,
                evidence: vec![p],
                steps: p,
            };
        }
    }
    let orbit = iterate_orbit(spec, z, budget, f64::INFINITY);
    let steps = orbit.len() - 1;
    if let Termination::ConvergedToAttractor { .. } = orbit.termination {
        return EscapeClass {
            label: EscapeLabel::Bounded,
            evidence: vec![steps],
            steps,
        };
    }
    let moduli = orbit.log_moduli();
    let speeds = escape_speeds(&moduli, ladder, ell_max);
    if let Some(ell) = speeds.fast_offset {
        let evidence = (ell..moduli.len()).collect();
        return EscapeClass {
            label: EscapeLabel::FastEscaping(ell),
            evidence,
            steps,
        };
    }
    if let Some(ell) = speeds.exp_fast_offset {
        let evidence = (ell..moduli.len()).collect();
        return EscapeClass {
            label: EscapeLabel::ExpFast(ell),
            evidence,
            steps,
        };
    }
    if slow_escape_trend(&orbit, &moduli) {
        let burn = moduli.len() / 4;
        return EscapeClass {
            label: EscapeLabel::EscapingNotFast,
            evidence: (burn..moduli.len()).collect(),
            steps,
        };
    }
    if orbit.termination == Termination::BudgetExhausted {
        if let Some(label) = bounded_or_creeping(spec, &orbit) {
            return EscapeClass {
                label,
                evidence: vec![steps],
                steps,
            };
        }
    }
    EscapeClass {
        label: EscapeLabel::Undecided,
        evidence: vec![],
        steps,
    }
}

/// Log-moduli strictly increase after burn-in, with real growth and real
/// displacement, so the orbit is escaping but slower than the ladder.
fn slow_escape_trend(orbit: &Orbit, moduli: &[Magnitude]) -> bool {
    if matches!(orbit.termination, Termination::DirectionLost { .. }) {
        return false;
    }
    let burn = moduli.len() / 4;
    if moduli.len() < burn + 8 {
        return false;
    }
    for k in burn..moduli.len() - 1 {
        if !(moduli[k + 1] > moduli[k]) {
            return false;
        }
    }
    let grew = *moduli.last().unwrap() >= moduli[burn].add(0.3);
    if !grew {
        return false;
    }
    // Rule out bounded orbits creeping up to a limit point.
    match (
        orbit.points[burn].as_complex(),
        orbit.points.last().unwrap().as_complex(),
    ) {
        (Some(a), Some(b)) => (b - a).norm() >= 1.0,
        // Non-plain tail means the orbit left f64 range entirely.
        _ => true,
    }
}

/// For a full-budget orbit that stayed in the compact box: Bounded, unless it
/// is creeping sub-geometrically toward a non-certified limit (parabolic
/// attraction), which stays Undecided.
fn bounded_or_creeping(spec: &FunctionSpec, orbit: &Orbit) -> Option<EscapeLabel> {
    let mut plain = Vec::with_capacity(orbit.points.len());
    for p in &orbit.points {
        match p.as_complex() {
            Some(z) if z.norm() <= BOUNDED_BOX => plain.push(z),
            _ => return None,
        }
    }
    let n = plain.len();
    let tail = (plain[n - 1] - plain[n - 2]).norm();
    if tail < 1e-13 {
        // Exactly periodic within tolerance is honestly bounded.
        let mut w = plain[n - 1];
        for _ in 0..4 {
            w = spec.evaluate_plain(w)?;
            if (w - plain[n - 1]).norm() < 1e-12 {
                return Some(EscapeLabel::Bounded);
            }
        }
        return Some(EscapeLabel::Undecided);
    }
    if tail < 1e-5 {
        // Shrinking steps without a convergence certificate: parabolic creep.
        return Some(EscapeLabel::Undecided);
    }
    Some(EscapeLabel::Bounded)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttractorKind {
    Attracting,
    Superattracting,
    Parabolic,
    Repelling,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Attractor {
    pub cycle: Vec<Complex64>,
    pub multiplier: Complex64,
    pub kind: AttractorKind,
}

impl Attractor {
    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    /// Check that a ball of `radius` around the cycle head maps into itself
    /// under `f^p`, sampling the boundary circle.
    pub fn certify_ball(&self, spec: &FunctionSpec, radius: f64, samples: usize) -> bool {
        if self.kind != AttractorKind::Attracting && self.kind != AttractorKind::Superattracting {
            return false;
        }
        let center = self.cycle[0];
        for k in 0..samples {
            let theta = std::f64::consts::TAU * k as f64 / samples as f64;
            let mut z = center + Complex64::from_polar(radius, theta);
            for _ in 0..self.period() {
                match spec.evaluate_plain(z) {
                    Some(w) => z = w,
                    None => return false,
                }
            }
            if (z - center).norm() >= radius {
                return false;
            }
        }
        true
    }
}

fn cycle_multiplier(spec: &FunctionSpec, z0: Complex64, period: usize) -> Option<Complex64> {
    let mut z = z0;
    let mut m = Complex64::new(1.0, 0.0);
    for _ in 0..period {
        m *= spec.derivative_plain(z)?;
        z = spec.evaluate_plain(z)?;
    }
    Some(m)
}

fn iterate_plain(spec: &FunctionSpec, z0: Complex64, n: usize) -> Option<Complex64> {
    let mut z = z0;
    for _ in 0..n {
        z = spec.evaluate_plain(z)?;
        if !z.re.is_finite() || !z.im.is_finite() || z.norm() > 1e8 {
            return None;
        }
    }
    Some(z)
}

fn kind_of(multiplier: Complex64) -> AttractorKind {
    let m = multiplier.norm();
    if m < 1e-8 {
        AttractorKind::Superattracting
    } else if (m - 1.0).abs() < 1e-8 {
        AttractorKind::Parabolic
    } else if m < 1.0 {
        AttractorKind::Attracting
    } else {
        AttractorKind::Repelling
    }
}

/// When the multiplier lands near the unit circle, polish the cycle point as
/// a root of `(f^p)'(z) - 1`, which is simple where `f^p(z) - z` is double.
fn parabolic_polish(spec: &FunctionSpec, z0: Complex64, period: usize) -> Option<Complex64> {
    let v = |z: Complex64| cycle_multiplier(spec, z, period).map(|m| m - 1.0);
    let h = 1e-7;
    let mut z = z0;
    for _ in 0..20 {
        let vz = v(z)?;
        if vz.norm() < 1e-14 {
            break;
        }
        let dv = (v(z + h)? - v(z - h)?) / (2.0 * h);
        if dv.norm() < 1e-12 {
            return None;
        }
        z -= vz / dv;
    }
    // The polished point must still be (a double root of) f^p(z) - z.
    let back = iterate_plain(spec, z, period)?;
    if (back - z).norm() < 1e-6 {
        Some(z)
    } else {
        None
    }
}

/// Newton on `f^p(z) - z` from grid seeds for each period up to `max_period`;
/// cycles are deduplicated and reported once at their minimal period.
pub fn find_attractors(
    spec: &FunctionSpec,
    search: &BoxRegion,
    max_period: usize,
) -> Vec<Attractor> {
    assert!(max_period >= 1);
    let mut found: Vec<Attractor> = Vec::new();
    for p in 1..=max_period {
        let f = |z: Complex64| match iterate_plain(spec, z, p) {
            Some(w) => w - z,
            None => Complex64::new(f64::NAN, f64::NAN),
        };
        let df = |z: Complex64| match cycle_multiplier(spec, z, p) {
            Some(m) => m - 1.0,
            None => Complex64::new(f64::NAN, f64::NAN),
        };
        for seed in search.seed_grid(40) {
            let Some(mut root) = newton(f, df, seed, 1e-12, 80) else {
                continue;
            };
            if !search.contains(root) {
                continue;
            }
            // minimal period
            let mut minimal = p;
            for d in 1..p {
                if p % d == 0 {
                    if let Some(w) = iterate_plain(spec, root, d) {
                        if (w - root).norm() < 1e-8 {
                            minimal = d;
                            break;
                        }
                    }
                }
            }
            if minimal < p {
                continue;
            }
            if found
                .iter()
                .any(|a| a.cycle.iter().any(|c| (c - root).norm() < 1e-6))
            {
                continue;
            }
            let Some(mut multiplier) = cycle_multiplier(spec, root, p) else {
                continue;
            };
            if (multiplier.norm() - 1.0).abs() < 1e-3 {
                if let Some(polished) = parabolic_polish(spec, root, p) {
                    if let Some(m) = cycle_multiplier(spec, polished, p) {
                        root = polished;
                        multiplier = m;
                    }
                }
            }
            let mut cycle = Vec::with_capacity(p);
            let mut z = root;
            let mut ok = true;
            for _ in 0..p {
                cycle.push(z);
                match spec.evaluate_plain(z) {
                    Some(w) => z = w,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            found.push(Attractor {
                cycle,
                multiplier,
                kind: kind_of(multiplier),
            });
        }
    }
    found.sort_by(|a, b| {
        let ka = a.cycle[0];
        let kb = b.cycle[0];
        ka.re
            .partial_cmp(&kb.re)
            .unwrap()
            .then(ka.im.partial_cmp(&kb.im).unwrap())
    });
    found
}
