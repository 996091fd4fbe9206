//! Hairs and endpoints for the exponential family f_a(z) = e^z + a with
//! a < -1, computed by inverse-branch pullback along bounded external
//! addresses, plus endpoint speed classification.

use crate::catalog::FunctionSpec;
use crate::dynamics::{classify_escape, EscapeClass, EscapeLabel, ModulusLadder, DEFAULT_BUDGET};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt;
use thiserror::Error;

/// Largest admissible |address entry|; pullback accuracy degrades beyond it.
pub const J_MAX: i64 = 64;
/// Pullback base point on the positive real axis, far inside the tract.
pub const Z_BASE: f64 = 10.0;
pub const TOL_ENDPOINT: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum HairError {
    #[error("inverse branch evaluated at the singular value")]
    AtSingularValue,
    #[error("pullback did not converge (last gap {gap})")]
    NoConvergence { gap: f64 },
    #[error("address entry bound {bound} exceeds the supported maximum {max}")]
    AddressOutOfRange { bound: i64, max: i64 },
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),
    #[error("malformed address: {0}")]
    BadAddress(String),
}

/// A bounded external address: strip itinerary with an eventually periodic
/// tail.  The period is kept primitive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalAddress {
    preperiod: Vec<i64>,
    period: Vec<i64>,
}

impl ExternalAddress {
    pub fn new(preperiod: Vec<i64>, period: Vec<i64>) -> Result<Self, HairError> {
        if period.is_empty() {
            return Err(HairError::BadAddress("empty period".into()));
        }
        Ok(ExternalAddress {
            preperiod,
            period: primitive_root(&period),
        })
    }

    pub fn periodic(period: Vec<i64>) -> Result<Self, HairError> {
        Self::new(vec![], period)
    }

    pub fn constant(j: i64) -> Self {
        ExternalAddress {
            preperiod: vec![],
            period: vec![j],
        }
    }

    pub fn preperiod(&self) -> &[i64] {
        &self.preperiod
    }

    pub fn period(&self) -> &[i64] {
        &self.period
    }

    pub fn bound(&self) -> i64 {
        self.preperiod
            .iter()
            .chain(self.period.iter())
            .map(|j| j.abs())
            .max()
            .unwrap()
    }

    pub fn entry(&self, k: usize) -> i64 {
        if k < self.preperiod.len() {
            self.preperiod[k]
        } else {
            self.period[(k - self.preperiod.len()) % self.period.len()]
        }
    }

    /// Left shift: drop the first entry.
    pub fn shift(&self) -> ExternalAddress {
        if self.preperiod.is_empty() {
            let mut p = self.period.clone();
            p.rotate_left(1);
            ExternalAddress {
                preperiod: vec![],
                period: primitive_root(&p),
            }
        } else {
            ExternalAddress {
                preperiod: self.preperiod[1..].to_vec(),
                period: self.period.clone(),
            }
        }
    }

    /// Text form `pre|per`, entries comma-separated, e.g. `0,1|2,-1`.
    pub fn parse(text: &str) -> Result<Self, HairError> {
        let (pre, per) = match text.split_once('|') {
            Some((a, b)) => (a, b),
            None => ("", text),
        };
        let parse_list = |s: &str| -> Result<Vec<i64>, HairError> {
            if s.trim().is_empty() {
                return Ok(vec![]);
            }
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i64>()
                        .map_err(|_| HairError::BadAddress(text.into()))
                })
                .collect()
        };
        Self::new(parse_list(pre)?, parse_list(per)?)
    }
}

impl fmt::Display for ExternalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[i64]| {
            v.iter()
                .map(|j| j.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "{}|{}", join(&self.preperiod), join(&self.period))
    }
}

fn primitive_root(period: &[i64]) -> Vec<i64> {
    let n = period.len();
    for d in 1..=n {
        if n % d == 0 && (0..n).all(|k| period[k] == period[k % d]) {
            return period[..d].to_vec();
        }
    }
    period.to_vec()
}

/// Strip index for the convention {(2j-1) pi < Im z <= (2j+1) pi}.
pub fn strip_of(z: Complex64) -> i64 {
    (((z.im + PI) / TAU).ceil() as i64) - 1
}

/// L_j(w) = PrincipalLog(w - a) + 2 pi i j, the branch of f_a^{-1} into
/// strip j.
pub fn inverse_branch(a: Complex64, j: i64, w: Complex64) -> Result<Complex64, HairError> {
    let d = w - a;
    if d.norm() < 1e-300 {
        return Err(HairError::AtSingularValue);
    }
    Ok(d.ln() + Complex64::new(0.0, TAU * j as f64))
}

fn require_regime(a: Complex64) -> Result<(), HairError> {
    if a.im != 0.0 || a.re >= -1.0 {
        return Err(HairError::UnsupportedParameter(format!(
            "a = {a}; need real a < -1"
        )));
    }
    Ok(())
}

fn check_bound(s: &ExternalAddress) -> Result<(), HairError> {
    if s.bound() > J_MAX {
        return Err(HairError::AddressOutOfRange {
            bound: s.bound(),
            max: J_MAX,
        });
    }
    Ok(())
}

/// n-fold pullback of `z` along the address: L_{s_0} o ... o L_{s_{n-1}}(z).
pub fn pullback(a: Complex64, s: &ExternalAddress, n: usize, z: Complex64) -> Result<Complex64, HairError> {
    let mut w = z;
    for k in (0..n).rev() {
        w = inverse_branch(a, s.entry(k), w)?;
    }
    Ok(w)
}

/// Pullback limit from an explicit base point, with the gap history.
pub fn trace_endpoint_from(
    a: Complex64,
    s: &ExternalAddress,
    depth: usize,
    base: Complex64,
) -> Result<(Complex64, Vec<f64>), HairError> {
    require_regime(a)?;
    check_bound(s)?;
    let mut gaps = Vec::new();
    let mut prev: Option<Complex64> = None;
    for n in 1..=depth {
        let v = pullback(a, s, n, base)?;
        if let Some(p) = prev {
            let gap = (v - p).norm();
            gaps.push(gap);
            if gap < 1e-12 {
                return Ok((v, gaps));
            }
        }
        prev = Some(v);
    }
    match (prev, gaps.last()) {
        (Some(v), Some(&gap)) if gap < TOL_ENDPOINT => Ok((v, gaps)),
        (_, Some(&gap)) => Err(HairError::NoConvergence { gap }),
        _ => Err(HairError::NoConvergence { gap: f64::INFINITY }),
    }
}

/// The hair's finite endpoint: nested pullback limit of the base point.
pub fn trace_endpoint(
    a: Complex64,
    s: &ExternalAddress,
    depth: usize,
) -> Result<(Complex64, f64), HairError> {
    let (v, gaps) = trace_endpoint_from(a, s, depth, Complex64::new(Z_BASE, 0.0))?;
    Ok((v, gaps.last().copied().unwrap_or(f64::INFINITY)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hair {
    pub address: ExternalAddress,
    pub endpoint: Complex64,
    /// Ordered from the endpoint side toward infinity.
    pub samples: Vec<Complex64>,
    pub endpoint_class: Option<EscapeClass>,
    pub convergence_gap: f64,
}

/// Pull back a geometric grid on the real ray [Z_BASE, inf) along the
/// address to sample the hair.
pub fn trace_hair(
    a: Complex64,
    s: &ExternalAddress,
    depth: usize,
    t_samples: usize,
) -> Result<Hair, HairError> {
    assert!(t_samples >= 1);
    let (endpoint, convergence_gap) = trace_endpoint(a, s, depth)?;
    let mut samples = Vec::with_capacity(t_samples);
    for i in 0..t_samples {
        let t = Z_BASE * 1.3f64.powi(i as i32);
        samples.push(pullback(a, s, depth, Complex64::new(t, 0.0))?);
    }
    Ok(Hair {
        address: s.clone(),
        endpoint,
        samples,
        endpoint_class: None,
        convergence_gap,
    })
}

/// Escape class of the hair's endpoint; anything other than FastEscaping is
/// a meandering endpoint.
pub fn classify_endpoint(a: Complex64, hair: &Hair, ladder: &ModulusLadder) -> EscapeClass {
    if hair.convergence_gap >= TOL_ENDPOINT {
        return EscapeClass {
            label: EscapeLabel::Undecided,
            evidence: vec![],
            steps: 0,
        };
    }
    let spec = FunctionSpec::ExpAffine { a };
    classify_escape(&spec, hair.endpoint, ladder, DEFAULT_BUDGET)
}

pub fn is_meandering(class: &EscapeClass) -> bool {
    !matches!(class.label, EscapeLabel::FastEscaping(_))
}
