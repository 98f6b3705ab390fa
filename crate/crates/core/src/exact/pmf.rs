use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{rational, scaled::ScaledPoly, LogReal, Rational};

/// A measure on `offset, offset + 1, ...` with log-domain masses.
///
/// When `truncated` is set, `truncation_mass_bound` is the probability lumped
/// at values past the last stored mass. For the exact computations in this
/// crate it is the lumped probability itself, not just an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticePMF {
    pub offset: i64,
    pub masses: Vec<LogReal>,
    pub truncated: bool,
    pub truncation_mass_bound: LogReal,
}

impl LatticePMF {
    pub fn new(masses: Vec<LogReal>) -> Self {
        LatticePMF { offset: 0, masses, truncated: false, truncation_mass_bound: LogReal::ZERO }
    }

    pub fn point_mass(k: usize) -> Self {
        let mut masses = vec![LogReal::ZERO; k + 1];
        masses[k] = LogReal::ONE;
        Self::new(masses)
    }

    pub fn from_linear(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| LogReal::from_linear(v)).collect())
    }

    pub(crate) fn from_scaled(poly: &ScaledPoly, full_support: bool) -> Self {
        let overflow = poly.overflow();
        LatticePMF {
            offset: 0,
            masses: poly.coeffs(),
            truncated: !full_support,
            truncation_mass_bound: overflow,
        }
    }

    /// Largest stored value (`offset + len - 1`).
    pub fn max_value(&self) -> i64 {
        self.offset + self.masses.len() as i64 - 1
    }

    /// `P(S = x)`; zero outside the stored range.
    pub fn mass(&self, x: i64) -> LogReal {
        let i = x - self.offset;
        if i < 0 || i as usize >= self.masses.len() {
            return LogReal::ZERO;
        }
        self.masses[i as usize]
    }

    /// `P(S >= x)`, including the lumped overflow mass.
    pub fn tail(&self, x: i64) -> LogReal {
        let start = (x - self.offset).max(0) as usize;
        let mut terms: Vec<LogReal> = self.masses.iter().skip(start).copied().collect();
        terms.push(self.truncation_mass_bound);
        crate::numerics::log_sum_exp(&terms)
    }

    /// Sum of stored masses, excluding the overflow cell.
    pub fn stored_total(&self) -> LogReal {
        crate::numerics::log_sum_exp(&self.masses)
    }

    pub fn total(&self) -> LogReal {
        self.stored_total() + self.truncation_mass_bound
    }

    pub fn to_linear(&self) -> Vec<f64> {
        self.masses.iter().map(|m| m.to_linear()).collect()
    }
}

/// Exact rational masses on `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPmf {
    pub masses: Vec<Rational>,
}

impl RationalPmf {
    pub fn total(&self) -> Rational {
        self.masses.iter().fold(Rational::zero(), |a, b| a + b)
    }

    pub fn is_normalized(&self) -> bool {
        self.total().is_one()
    }

    pub fn mean(&self) -> Rational {
        self.masses
            .iter()
            .enumerate()
            .fold(Rational::zero(), |a, (k, m)| a + m * Rational::from_integer((k as i64).into()))
    }

    pub fn to_lattice(&self) -> LatticePMF {
        LatticePMF::new(self.masses.iter().map(rational::to_logreal).collect())
    }
}

/// Mean and variance of the stored measure.
///
/// Refuses truncated measures whose lumped mass could move the result, i.e.
/// a truncation bound of `1e-12` or more.
pub fn pmf_moments(pmf: &LatticePMF) -> Result<(f64, f64)> {
    if pmf.truncated && pmf.truncation_mass_bound.to_linear() >= 1e-12 {
        return Err(Error::param(format!(
            "moments need truncation mass below 1e-12, have {:e}",
            pmf.truncation_mass_bound.to_linear()
        )));
    }
    // weights relative to the largest mass keep tiny-probability measures finite
    let max = pmf.masses.iter().map(|m| m.ln()).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::param("moments of the zero measure"));
    }
    let (mut w0, mut w1) = (0.0, 0.0);
    for (i, m) in pmf.masses.iter().enumerate() {
        let w = (m.ln() - max).exp();
        w0 += w;
        w1 += w * (pmf.offset + i as i64) as f64;
    }
    let mean = w1 / w0;
    let mut w2 = 0.0;
    for (i, m) in pmf.masses.iter().enumerate() {
        let d = (pmf.offset + i as i64) as f64 - mean;
        w2 += (m.ln() - max).exp() * d * d;
    }
    Ok((mean, w2 / w0))
}
