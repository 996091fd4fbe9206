//! The closed-form function catalog: evaluation, differentiation, singular
//! values and circle maximum modulus for the families under study.
//!
//! Every evaluation is log-safe: once a result would leave `f64` range it is
//! returned as a log-modulus/argument pair, and past that as an iterated-log
//! magnitude.  Downstream comparisons only ever need the log-modulus.

use crate::numeric::{wrap_angle, LogSafe, Magnitude, LOG_HORIZON};
use crate::roots::{newton_all, BoxRegion};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

/// Log-modulus past which orbit advancement switches to per-family
/// leading-term asymptotics.
pub const ASYMPTOTIC_LOG: f64 = 50.0;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unrecognised spec token `{0}`")]
    BadToken(String),
    #[error("bad parameter in spec token: {0}")]
    BadParameter(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
}

/// A member of the built-in catalog of entire functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FunctionSpec {
    /// `f_a(z) = e^z + a`
    ExpAffine { a: Complex64 },
    /// `f(z) = z + 1 + e^{-z}`
    Fatou,
    /// `g_lambda(z) = lambda z^2 exp(z - z^2)`, `lambda > 0`
    QuadExp { lambda: f64 },
    /// `(4 pi / 3)(1 - cos z)`
    CosineExample,
    /// `base(z) / l`, `l > 0`
    Scaled { base: Box<FunctionSpec>, l: f64 },
}

const COSINE_SCALE: f64 = 4.0 * PI / 3.0;

impl FunctionSpec {
    pub fn quad_exp(lambda: f64) -> Result<Self, CatalogError> {
        if lambda > 0.0 {
            Ok(FunctionSpec::QuadExp { lambda })
        } else {
            Err(CatalogError::OutOfRange(format!("lambda = {lambda}")))
        }
    }

    pub fn scaled(base: FunctionSpec, l: f64) -> Result<Self, CatalogError> {
        if l > 0.0 {
            Ok(FunctionSpec::Scaled {
                base: Box::new(base),
                l,
            })
        } else {
            Err(CatalogError::OutOfRange(format!("L = {l}")))
        }
    }

    /// Evaluate `f(z)` in log-safe form.
    pub fn evaluate(&self, z: Complex64) -> LogSafe {
        match self {
            FunctionSpec::ExpAffine { a } => {
                if z.re > LOG_HORIZON {
                    // e^z dominates; the additive constant is below resolution.
                    LogSafe::from_log_polar(z.re, z.im)
                } else {
                    LogSafe::Plain(z.exp() + a)
                }
            }
            FunctionSpec::Fatou => {
                if -z.re > LOG_HORIZON {
                    LogSafe::from_log_polar(-z.re, -z.im)
                } else {
                    LogSafe::Plain(z + 1.0 + (-z).exp())
                }
            }
            FunctionSpec::QuadExp { lambda } => {
                let r = z.norm();
                if r == 0.0 {
                    return LogSafe::Plain(Complex64::new(0.0, 0.0));
                }
                let (exp_re, exp_im) = quad_exponent(z);
                let log_mod = lambda.ln() + 2.0 * r.ln() + exp_re;
                if !log_mod.is_finite() {
                    return if log_mod < 0.0 {
                        LogSafe::Plain(Complex64::new(0.0, 0.0))
                    } else {
                        LogSafe::Tower(Magnitude::from_value(f64::INFINITY))
                    };
                }
                if exp_re <= LOG_HORIZON && log_mod <= LOG_HORIZON && r < 1.0e150 {
                    let w = z - z * z;
                    LogSafe::Plain(lambda * z * z * w.exp())
                } else {
                    LogSafe::from_log_polar(log_mod, 2.0 * z.arg() + exp_im)
                }
            }
            FunctionSpec::CosineExample => {
                if z.im.abs() <= LOG_HORIZON {
                    LogSafe::Plain(COSINE_SCALE * (1.0 - z.cos()))
                } else if z.im > 0.0 {
                    LogSafe::from_log_polar((COSINE_SCALE / 2.0).ln() + z.im, PI - z.re)
                } else {
                    LogSafe::from_log_polar((COSINE_SCALE / 2.0).ln() - z.im, PI + z.re)
                }
            }
            FunctionSpec::Scaled { base, l } => scale_value(base.evaluate(z), *l),
        }
    }

    /// Closed-form derivative `f'(z)`, with the same overflow contract as
    /// [`evaluate`](Self::evaluate).
    pub fn derivative(&self, z: Complex64) -> LogSafe {
        match self {
            FunctionSpec::ExpAffine { .. } => {
                if z.re > LOG_HORIZON {
                    LogSafe::from_log_polar(z.re, z.im)
                } else {
                    LogSafe::Plain(z.exp())
                }
            }
            FunctionSpec::Fatou => {
                if -z.re > LOG_HORIZON {
                    // -e^{-z} dominates
                    LogSafe::from_log_polar(-z.re, PI - z.im)
                } else {
                    LogSafe::Plain(Complex64::new(1.0, 0.0) - (-z).exp())
                }
            }
            FunctionSpec::QuadExp { lambda } => {
                // lambda e^{z-z^2} z (2 + z - 2 z^2)
                let r = z.norm();
                if r == 0.0 {
                    return LogSafe::Plain(Complex64::new(0.0, 0.0));
                }
                let poly = z * (Complex64::new(2.0, 0.0) + z - 2.0 * z * z);
                let (exp_re, exp_im) = quad_exponent(z);
                if r < 1.0e100 {
                    let log_mod = lambda.ln() + poly.norm().ln() + exp_re;
                    if exp_re <= LOG_HORIZON && log_mod <= LOG_HORIZON {
                        let w = z - z * z;
                        LogSafe::Plain(lambda * w.exp() * poly)
                    } else {
                        LogSafe::from_log_polar(log_mod, poly.arg() + exp_im)
                    }
                } else {
                    // |poly| ~ 2 r^3
                    let log_mod = lambda.ln() + (2.0f64).ln() + 3.0 * r.ln() + exp_re;
                    if log_mod.is_finite() && log_mod > 0.0 {
                        LogSafe::from_log_polar(log_mod, poly.arg() + exp_im)
                    } else {
                        LogSafe::Plain(Complex64::new(0.0, 0.0))
                    }
                }
            }
            FunctionSpec::CosineExample => {
                if z.im.abs() <= LOG_HORIZON {
                    LogSafe::Plain(COSINE_SCALE * z.sin())
                } else if z.im > 0.0 {
                    LogSafe::from_log_polar((COSINE_SCALE / 2.0).ln() + z.im, PI / 2.0 - z.re)
                } else {
                    LogSafe::from_log_polar((COSINE_SCALE / 2.0).ln() - z.im, z.re - PI / 2.0)
                }
            }
            FunctionSpec::Scaled { base, l } => scale_value(base.derivative(z), *l),
        }
    }

    /// Plain-complex evaluation; `None` once the value leaves `f64` range.
    pub fn evaluate_plain(&self, z: Complex64) -> Option<Complex64> {
        self.evaluate(z).as_complex()
    }

    /// Plain-complex derivative; `None` once the value leaves `f64` range.
    pub fn derivative_plain(&self, z: Complex64) -> Option<Complex64> {
        self.derivative(z).as_complex()
    }

    /// One orbit step from a log-safe point.
    ///
    /// Past the floating horizon the step uses the family's leading term;
    /// `None` means the dominant direction is lost and the orbit cannot be
    /// advanced faithfully.
    pub fn advance(&self, p: &LogSafe) -> Option<LogSafe> {
        match p {
            LogSafe::Plain(z) => Some(self.evaluate(*z)),
            LogSafe::LogPolar { log_mod, arg } => self.advance_log_polar(*log_mod, *arg),
            LogSafe::Tower(m) => self.advance_tower(*m),
        }
    }

    fn advance_log_polar(&self, log_mod: f64, arg: f64) -> Option<LogSafe> {
        const DOMINANCE: f64 = 0.1;
        match self {
            FunctionSpec::ExpAffine { a } => {
                let c = arg.cos();
                if arg == 0.0 {
                    // Real positive orbit: the argument stays exactly zero.
                    let next = Magnitude::from_value(log_mod).exp();
                    Some(match next.as_f64() {
                        Some(m) => LogSafe::from_log_polar(m, 0.0),
                        None => LogSafe::Tower(next),
                    })
                } else if c >= DOMINANCE {
                    Some(LogSafe::Tower(
                        Magnitude::from_value(log_mod + c.ln()).exp(),
                    ))
                } else if c <= -DOMINANCE {
                    // e^z underflows; the orbit lands on the affine constant.
                    Some(LogSafe::Plain(*a))
                } else {
                    None
                }
            }
            FunctionSpec::Fatou => {
                let c = arg.cos();
                if c >= DOMINANCE || arg == 0.0 {
                    // f(z) ~ z + 1: invisible at this magnitude.
                    Some(LogSafe::from_log_polar(log_mod, arg))
                } else if c <= -DOMINANCE {
                    Some(LogSafe::Tower(
                        Magnitude::from_value(log_mod + (-c).ln()).exp(),
                    ))
                } else {
                    None
                }
            }
            FunctionSpec::QuadExp { .. } => {
                let c2 = (2.0 * arg).cos();
                if c2 >= DOMINANCE {
                    // Re(-z^2) is hugely negative: the value collapses to 0.
                    Some(LogSafe::Plain(Complex64::new(0.0, 0.0)))
                } else if c2 <= -DOMINANCE {
                    Some(LogSafe::Tower(
                        Magnitude::from_value(2.0 * log_mod + (-c2).ln()).exp(),
                    ))
                } else {
                    None
                }
            }
            FunctionSpec::CosineExample => {
                let s = arg.sin();
                if s.abs() >= DOMINANCE {
                    Some(LogSafe::Tower(
                        Magnitude::from_value(log_mod + s.abs().ln()).exp(),
                    ))
                } else {
                    None
                }
            }
            FunctionSpec::Scaled { base, l } => {
                Some(scale_value(base.advance_log_polar(log_mod, arg)?, *l))
            }
        }
    }

    fn advance_tower(&self, m: Magnitude) -> Option<LogSafe> {
        match self {
            // Dominant-direction leading term; see module notes.
            FunctionSpec::ExpAffine { .. } => Some(LogSafe::Tower(m.exp())),
            // At tower heights a Fatou orbit adds ~1 per step: flat in logs.
            FunctionSpec::Fatou => Some(LogSafe::Tower(m)),
            // Direction decides between collapse and blow-up; lost here.
            FunctionSpec::QuadExp { .. } => None,
            FunctionSpec::CosineExample => None,
            FunctionSpec::Scaled { base, l } => Some(scale_value(base.advance_tower(m)?, *l)),
        }
    }

    /// `log M(r, f)` by dense circle sampling with golden-section refinement.
    pub fn log_max_modulus(&self, r: f64) -> Magnitude {
        assert!(r > 0.0 && r.is_finite());
        match self {
            FunctionSpec::ExpAffine { a } if a.norm() == 0.0 => Magnitude::from_value(r),
            FunctionSpec::Scaled { base, l } => base.log_max_modulus(r).add(-l.ln()),
            _ => self.log_max_modulus_scan(r),
        }
    }

    fn log_max_modulus_scan(&self, r: f64) -> Magnitude {
        const SAMPLES: usize = 4096;
        let objective = |theta: f64| self.evaluate(Complex64::from_polar(r, theta)).log_modulus();
        let mut best_k = 0usize;
        let mut best = objective(0.0);
        for k in 1..SAMPLES {
            let theta = 2.0 * PI * k as f64 / SAMPLES as f64;
            let v = objective(theta);
            if v > best {
                best = v;
                best_k = k;
            }
        }
        let step = 2.0 * PI / SAMPLES as f64;
        let center = best_k as f64 * step;
        golden_max(objective, center - step, center + step, 90)
    }

    /// `log M(r, f)` given `log r` in magnitude scale; switches to the
    /// family's leading-term form once the radius leaves numeric range.
    pub fn log_max_modulus_from_log_radius(&self, log_r: Magnitude) -> Magnitude {
        if let Some(lr) = log_r.as_f64() {
            if lr <= ASYMPTOTIC_LOG {
                return self.log_max_modulus(lr.exp());
            }
        }
        match self {
            FunctionSpec::ExpAffine { .. } => log_r.exp(),
            FunctionSpec::Fatou => log_r.exp(),
            FunctionSpec::QuadExp { lambda } => {
                // max over the circle is exactly r^2 + 1/8 + 2 ln r + ln lambda
                let lead = log_r.scale(2.0).exp();
                match (log_r.as_f64(), lead.as_f64()) {
                    (Some(lr), Some(v)) => {
                        Magnitude::from_value(v + 2.0 * lr + lambda.ln() + 0.125)
                    }
                    _ => lead,
                }
            }
            FunctionSpec::CosineExample => log_r.exp().add((COSINE_SCALE / 2.0).ln()),
            FunctionSpec::Scaled { base, l } => {
                base.log_max_modulus_from_log_radius(log_r).add(-l.ln())
            }
        }
    }

    /// Critical and asymptotic values, with critical points found as roots of
    /// the derivative's non-exponential factor inside `search`.
    pub fn singular_values(&self, search: &BoxRegion) -> SingularSet {
        match self {
            FunctionSpec::ExpAffine { a } => SingularSet {
                critical_points: vec![],
                critical_values: vec![],
                asymptotic_values: vec![*a],
                truncated: false,
                possibly_incomplete: false,
            },
            FunctionSpec::Fatou => {
                // f'(z) = 1 - e^{-z}: zeros at 2 pi i k
                let f = |z: Complex64| Complex64::new(1.0, 0.0) - (-z).exp();
                let df = |z: Complex64| (-z).exp();
                let points = newton_all(&f, &df, search, 40, 1e-12, 1e-8);
                let values = points.iter().map(|&c| self.must_plain(c)).collect();
                SingularSet {
                    critical_points: points,
                    critical_values: values,
                    asymptotic_values: vec![],
                    truncated: true,
                    possibly_incomplete: false,
                }
            }
            FunctionSpec::QuadExp { .. } => {
                let f = |z: Complex64| z * (Complex64::new(2.0, 0.0) + z - 2.0 * z * z);
                let df = |z: Complex64| Complex64::new(2.0, 0.0) + 2.0 * z - 6.0 * z * z;
                let points = newton_all(&f, &df, search, 40, 1e-12, 1e-8);
                let values = points.iter().map(|&c| self.must_plain(c)).collect();
                let possibly_incomplete = points.len() < 3;
                SingularSet {
                    critical_points: points,
                    critical_values: values,
                    asymptotic_values: vec![Complex64::new(0.0, 0.0)],
                    truncated: false,
                    possibly_incomplete,
                }
            }
            FunctionSpec::CosineExample => {
                let f = |z: Complex64| COSINE_SCALE * z.sin();
                let df = |z: Complex64| COSINE_SCALE * z.cos();
                let points = newton_all(&f, &df, search, 40, 1e-12, 1e-8);
                let values = points.iter().map(|&c| self.must_plain(c)).collect();
                SingularSet {
                    critical_points: points,
                    critical_values: values,
                    asymptotic_values: vec![],
                    truncated: true,
                    possibly_incomplete: false,
                }
            }
            FunctionSpec::Scaled { base, l } => {
                let mut set = base.singular_values(search);
                for v in set
                    .critical_values
                    .iter_mut()
                    .chain(set.asymptotic_values.iter_mut())
                {
                    *v /= *l;
                }
                set
            }
        }
    }

    fn must_plain(&self, z: Complex64) -> Complex64 {
        self.evaluate_plain(z)
            .expect("singular value inside search box must be representable")
    }

    /// Text token, e.g. `quadexp:lambda=1.1`.
    pub fn token(&self) -> String {
        format!("{self}")
    }

    pub fn parse(token: &str) -> Result<Self, CatalogError> {
        let token = token.trim();
        if token == "fatou" {
            return Ok(FunctionSpec::Fatou);
        }
        if token == "cosine" {
            return Ok(FunctionSpec::CosineExample);
        }
        if let Some(rest) = token.strip_prefix("expaffine:") {
            let value = rest
                .strip_prefix("a=")
                .ok_or_else(|| CatalogError::BadToken(token.into()))?;
            return Ok(FunctionSpec::ExpAffine {
                a: parse_complex(value)?,
            });
        }
        if let Some(rest) = token.strip_prefix("quadexp:") {
            let value = rest
                .strip_prefix("lambda=")
                .ok_or_else(|| CatalogError::BadToken(token.into()))?;
            let lambda: f64 = value
                .parse()
                .map_err(|_| CatalogError::BadParameter(value.into()))?;
            return FunctionSpec::quad_exp(lambda);
        }
        if let Some(rest) = token.strip_prefix("scaled:") {
            let body = rest
                .strip_prefix("base=")
                .ok_or_else(|| CatalogError::BadToken(token.into()))?;
            let cut = body
                .rfind(",L=")
                .ok_or_else(|| CatalogError::BadToken(token.into()))?;
            let base = FunctionSpec::parse(&body[..cut])?;
            let l: f64 = body[cut + 3..]
                .parse()
                .map_err(|_| CatalogError::BadParameter(body[cut + 3..].into()))?;
            return FunctionSpec::scaled(base, l);
        }
        Err(CatalogError::BadToken(token.into()))
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::ExpAffine { a } => write!(f, "expaffine:a={}", format_complex(*a)),
            FunctionSpec::Fatou => write!(f, "fatou"),
            FunctionSpec::QuadExp { lambda } => write!(f, "quadexp:lambda={lambda}"),
            FunctionSpec::CosineExample => write!(f, "cosine"),
            FunctionSpec::Scaled { base, l } => write!(f, "scaled:base={base},L={l}"),
        }
    }
}

/// Critical/asymptotic data reported by [`FunctionSpec::singular_values`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularSet {
    pub critical_points: Vec<Complex64>,
    pub critical_values: Vec<Complex64>,
    pub asymptotic_values: Vec<Complex64>,
    /// The family has infinitely many critical points; only those inside the
    /// search box are reported.
    pub truncated: bool,
    pub possibly_incomplete: bool,
}

impl SingularSet {
    /// All finite singular values.
    pub fn all_values(&self) -> Vec<Complex64> {
        self.critical_values
            .iter()
            .chain(self.asymptotic_values.iter())
            .copied()
            .collect()
    }
}

/// Exponent `z - z^2` split into real and imaginary parts, robust to `z^2`
/// overflowing `f64`.
fn quad_exponent(z: Complex64) -> (f64, f64) {
    let r = z.norm();
    if r < 1.0e150 {
        let w = z - z * z;
        (w.re, w.im)
    } else {
        let theta = z.arg();
        let r2 = r * r; // may be inf
        let c2 = (2.0 * theta).cos();
        let re = r * theta.cos() - if c2 == 0.0 { 0.0 } else { r2 * c2 };
        let s2 = (2.0 * theta).sin();
        let im = r * theta.sin() - if s2 == 0.0 { 0.0 } else { r2 * s2 };
        (re, im)
    }
}

fn scale_value(v: LogSafe, l: f64) -> LogSafe {
    match v {
        LogSafe::Plain(w) => LogSafe::Plain(w / l),
        LogSafe::LogPolar { log_mod, arg } => LogSafe::from_log_polar(log_mod - l.ln(), arg),
        LogSafe::Tower(m) => LogSafe::Tower(m.add(-l.ln())),
    }
}

/// Golden-section maximisation of a unimodal-near-peak objective.
fn golden_max<F>(f: F, mut a: f64, mut b: f64, iters: usize) -> Magnitude
where
    F: Fn(f64) -> Magnitude,
{
    const INV_PHI: f64 = 0.6180339887498949;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    if fc > fd {
        fc
    } else {
        fd
    }
}

/// Parse `re`, `imi`, or `re+imi` decimal forms (e.g. `-2`, `1+2i`, `-0.5-1i`).
pub fn parse_complex(s: &str) -> Result<Complex64, CatalogError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(CatalogError::BadParameter(s.into()));
    }
    let bad = || CatalogError::BadParameter(s.to_string());
    if let Some(body) = s.strip_suffix('i') {
        // find the split between real and imaginary parts: the last +/- not
        // at position 0 and not part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && bytes[k - 1] as char != 'e' && bytes[k - 1] as char != 'E'
            {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re: f64 = body[..k].parse().map_err(|_| bad())?;
                let im_str = &body[k..];
                let im: f64 = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    im_str.parse().map_err(|_| bad())?
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = if body.is_empty() {
                    1.0
                } else if body == "-" {
                    -1.0
                } else {
                    body.parse().map_err(|_| bad())?
                };
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = s.parse().map_err(|_| bad())?;
        Ok(Complex64::new(re, 0.0))
    }
}

pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

pub fn wrap_arg_of(v: &LogSafe) -> Option<f64> {
    match v {
        LogSafe::Plain(z) => Some(z.arg()),
        LogSafe::LogPolar { arg, .. } => Some(wrap_angle(*arg)),
        LogSafe::Tower(_) => None,
    }
}
