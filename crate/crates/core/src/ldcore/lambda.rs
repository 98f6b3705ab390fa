use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{log1pmx, series_sum};

/// Relative disagreement between series and closed form that is treated as a bug.
const AGREEMENT_TOL: f64 = 1e-10;

/// A Cramer-type series value with its closed form and summation diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesValue {
    pub series: f64,
    pub closed: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
}

/// `s = nu1 y / (1 - nu1)`, the expansion variable of both series.
pub fn expansion_ratio(nu1: f64, y: f64) -> f64 {
    nu1 * y / (1.0 - nu1)
}

fn check_domain(nu1: f64, y: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&nu1) {
        return Err(Error::param(format!("nu1 must lie in [0, 1), got {nu1}")));
    }
    let s = expansion_ratio(nu1, y);
    if !(s.abs() < 1.0) {
        return Err(Error::param(format!("|nu1 y / (1 - nu1)| = {} must be below 1", s.abs())));
    }
    Ok(s)
}

/// `Lambda(y) = -n (1 - nu1) [s + (1 - s) ln(1 - s)]`.
pub fn lambda_closed(n: f64, nu1: f64, y: f64) -> Result<f64> {
    let s = check_domain(nu1, y)?;
    // s + (1-s) ln(1-s) = (ln(1-s) + s) - s ln(1-s)
    Ok(-n * (1.0 - nu1) * (log1pmx(-s) - s * (-s).ln_1p()))
}

/// `Lambda*(y) = -n [ln(1 - t) + t]`, `t = s`.
pub fn lambda_star_closed(n: f64, nu1: f64, y: f64) -> Result<f64> {
    let t = check_domain(nu1, y)?;
    Ok(-n * log1pmx(-t))
}

fn agree(v: &SeriesValue) -> Result<()> {
    let scale = v.closed.abs().max(v.series.abs());
    if scale > 0.0 && (v.series - v.closed).abs() > AGREEMENT_TOL * scale {
        return Err(Error::Instability(format!(
            "series {} and closed form {} disagree",
            v.series, v.closed
        )));
    }
    Ok(())
}

/// `Lambda(y) = -n (1 - nu1) sum_{j>=2} s^j / (j (j - 1))`, summed with a
/// certified tail and checked against the closed form.
pub fn lambda_series(n: f64, nu1: f64, y: f64) -> Result<SeriesValue> {
    let s = check_domain(nu1, y)?;
    let sum = series_sum(|j| s.powi(j as i32) / (j * (j - 1)) as f64, 2, s.abs(), 1e-17, 100_000)?;
    let scale = -n * (1.0 - nu1);
    let v = SeriesValue {
        series: scale * sum.value,
        closed: lambda_closed(n, nu1, y)?,
        terms_used: sum.terms_used,
        tail_bound: scale.abs() * sum.tail_bound,
    };
    agree(&v)?;
    Ok(v)
}

/// `Lambda*(y) = n sum_{j>=2} t^j / j`.
pub fn lambda_star_series(n: f64, nu1: f64, y: f64) -> Result<SeriesValue> {
    let t = check_domain(nu1, y)?;
    let sum = series_sum(|j| t.powi(j as i32) / j as f64, 2, t.abs(), 1e-17, 100_000)?;
    let v = SeriesValue {
        series: n * sum.value,
        closed: lambda_star_closed(n, nu1, y)?,
        terms_used: sum.terms_used,
        tail_bound: n * sum.tail_bound,
    };
    agree(&v)?;
    Ok(v)
}
