use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Serialize};

/// A non-negative real stored as its natural logarithm.
///
/// `ln = -inf` encodes zero. Addition uses the max-shift log-add, so sums of
/// magnitudes far below `f64::MIN_POSITIVE` stay representable.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogReal(f64);

impl LogReal {
    pub const ZERO: LogReal = LogReal(f64::NEG_INFINITY);
    pub const ONE: LogReal = LogReal(0.0);

    /// Wraps a log value. NaN is rejected by debug assertion only.
    #[inline]
    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan(), "LogReal from NaN");
        LogReal(ln)
    }

    /// Converts a linear-scale value; negative inputs panic.
    #[inline]
    pub fn from_linear(x: f64) -> Self {
        assert!(x >= 0.0, "LogReal requires a non-negative value, got {x}");
        LogReal(x.ln())
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    /// Lossy export to linear scale (underflows to 0 below ~1e-308).
    #[inline]
    pub fn to_linear(self) -> f64 {
        self.0.exp()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    #[inline]
    pub fn powf(self, e: f64) -> Self {
        if self.is_zero() {
            if e > 0.0 {
                return LogReal::ZERO;
            }
            return LogReal::ONE;
        }
        LogReal(self.0 * e)
    }

    /// `|self - other|` on the linear scale.
    pub fn abs_diff(self, other: LogReal) -> LogReal {
        let (hi, lo) = if self.0 >= other.0 { (self, other) } else { (other, self) };
        if lo.is_zero() {
            return hi;
        }
        // ln(e^a - e^b) = a + ln(1 - e^(b-a))
        LogReal(hi.0 + (-(lo.0 - hi.0).exp()).ln_1p())
    }
}

impl Default for LogReal {
    fn default() -> Self {
        LogReal::ZERO
    }
}

impl fmt::Debug for LogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogReal(ln={})", self.0)
    }
}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl Add for LogReal {
    type Output = LogReal;
    #[inline]
    fn add(self, rhs: LogReal) -> LogReal {
        let (hi, lo) = if self.0 >= rhs.0 { (self.0, rhs.0) } else { (rhs.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return LogReal(hi);
        }
        LogReal(hi + (lo - hi).exp().ln_1p())
    }
}

impl Mul for LogReal {
    type Output = LogReal;
    #[inline]
    fn mul(self, rhs: LogReal) -> LogReal {
        if self.is_zero() || rhs.is_zero() {
            return LogReal::ZERO;
        }
        LogReal(self.0 + rhs.0)
    }
}

impl Div for LogReal {
    type Output = LogReal;
    #[inline]
    fn div(self, rhs: LogReal) -> LogReal {
        assert!(!rhs.is_zero(), "LogReal division by zero");
        if self.is_zero() {
            return LogReal::ZERO;
        }
        LogReal(self.0 - rhs.0)
    }
}

impl Sum for LogReal {
    fn sum<I: Iterator<Item = LogReal>>(iter: I) -> LogReal {
        let v: Vec<LogReal> = iter.collect();
        log_sum_exp(&v)
    }
}

impl<'a> Sum<&'a LogReal> for LogReal {
    fn sum<I: Iterator<Item = &'a LogReal>>(iter: I) -> LogReal {
        iter.copied().sum()
    }
}

impl Product for LogReal {
    fn product<I: Iterator<Item = LogReal>>(iter: I) -> LogReal {
        iter.fold(LogReal::ONE, |a, b| a * b)
    }
}

/// Log of the sum of the linear-scale values, shifting by the maximum first.
/// An empty slice yields zero.
pub fn log_sum_exp(values: &[LogReal]) -> LogReal {
    let max = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogReal::ZERO;
    }
    if max == f64::INFINITY {
        return LogReal(f64::INFINITY);
    }
    let s: f64 = values.iter().map(|v| (v.0 - max).exp()).sum();
    LogReal(max + s.ln())
}
