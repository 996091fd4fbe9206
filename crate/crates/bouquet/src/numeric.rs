//! Log-safe numerics for orbits that outgrow floating point.
//!
//! Orbits of exponential-type maps leave `f64` range within a handful of
//! steps, and maximum-modulus ladders are towers of exponentials.  All order
//! comparisons downstream are done on log-moduli held in an iterated-log
//! scale: a [`Magnitude`] stores `exp^height(value)` with `value` kept in a
//! canonical band, so magnitudes of any tower height compare exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

/// Values above this are pushed one exponential tier up.
const TIER_CAP: f64 = 1.0e12;
/// ln(TIER_CAP); values in tiers >= 1 stay strictly above this.
const TIER_FLOOR: f64 = 27.631021115928547; // = ln(1e12)

/// Past this log-modulus a complex value can no longer be held as `Complex64`.
pub const LOG_HORIZON: f64 = 700.0;

/// An extended real in iterated-log scale: represents `exp^height(value)`.
///
/// Used for log-moduli, so the represented quantity may be any real; only
/// non-negative reals ever gain height.  Canonical form keeps
/// `value <= TIER_CAP`, and `value > TIER_FLOOR` whenever `height >= 1`,
/// which makes `(height, value)` lexicographic order agree with numeric
/// order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Magnitude {
    height: u32,
    value: f64,
}

impl Magnitude {
    pub fn from_value(x: f64) -> Self {
        Magnitude { height: 0, value: x }.canonical()
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// The plain value, if it never needed a tier.
    pub fn as_f64(&self) -> Option<f64> {
        if self.height == 0 {
            Some(self.value)
        } else {
            None
        }
    }

    fn canonical(mut self) -> Self {
        while self.height > 0 && self.value <= TIER_FLOOR {
            self.value = self.value.exp();
            self.height -= 1;
        }
        while self.value.is_finite() && self.value > TIER_CAP {
            self.value = self.value.ln();
            self.height += 1;
        }
        self
    }

    /// `exp` of the represented real.
    pub fn exp(self) -> Self {
        Magnitude {
            height: self.height + 1,
            value: self.value,
        }
        .canonical()
    }

    /// Multiply the represented real by `c > 0`.
    ///
    /// Exact in tier 0, absorbed into the exponent in tier 1, and a no-op in
    /// higher tiers where the relative change is below f64 resolution.
    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c > 0.0);
        match self.height {
            0 => Magnitude::from_value(self.value * c),
            1 => Magnitude {
                height: 1,
                value: self.value + c.ln(),
            }
            .canonical(),
            _ => self,
        }
    }

    /// Add `c` to the represented real; saturates in tiers >= 1 where the
    /// change is below resolution.
    pub fn add(self, c: f64) -> Self {
        match self.height {
            0 => Magnitude::from_value(self.value + c),
            1 => {
                let correction = (c * (-self.value).exp()).ln_1p();
                Magnitude {
                    height: 1,
                    value: self.value + correction,
                }
                .canonical()
            }
            _ => self,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

impl PartialOrd for Magnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.value.is_nan() || other.value.is_nan() {
            return None;
        }
        match self.height.cmp(&other.height) {
            Ordering::Equal => self.value.partial_cmp(&other.value),
            ord => Some(ord),
        }
    }
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % TAU;
    if t <= -PI {
        t += TAU;
    } else if t > PI {
        t -= TAU;
    }
    t
}

/// A complex value that may have outgrown `f64` range.
///
/// `Plain` is an ordinary complex number; `LogPolar` keeps log-modulus and
/// argument once the modulus passes the floating horizon; `Tower` keeps only
/// an iterated-log modulus once even the log-modulus leaves plain range (the
/// argument is no longer meaningful at that size).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum LogSafe {
    Plain(Complex64),
    LogPolar { log_mod: f64, arg: f64 },
    Tower(Magnitude),
}

impl LogSafe {
    /// Build from a log-modulus and argument, collapsing to `Plain` when the
    /// value is representable.
    pub fn from_log_polar(log_mod: f64, arg: f64) -> Self {
        if log_mod <= LOG_HORIZON {
            LogSafe::Plain(Complex64::from_polar(log_mod.exp(), arg))
        } else if log_mod <= TIER_CAP {
            LogSafe::LogPolar {
                log_mod,
                arg: wrap_angle(arg),
            }
        } else {
            LogSafe::Tower(Magnitude::from_value(log_mod))
        }
    }

    pub fn log_modulus(&self) -> Magnitude {
        match self {
            LogSafe::Plain(z) => Magnitude::from_value(z.norm().ln()),
            LogSafe::LogPolar { log_mod, .. } => Magnitude::from_value(*log_mod),
            LogSafe::Tower(m) => *m,
        }
    }

    pub fn as_complex(&self) -> Option<Complex64> {
        match self {
            LogSafe::Plain(z) => Some(*z),
            _ => None,
        }
    }

    pub fn is_plain(&self) -> bool {
        matches!(self, LogSafe::Plain(_))
    }
}
