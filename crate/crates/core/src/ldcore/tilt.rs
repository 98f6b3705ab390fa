use crate::error::{Error, Result};
use crate::exact::{cf_eval_scaled, LatticePMF};
use crate::numerics::{log_sum_exp, nodes_for_degree, periodic_quadrature, ComplexVal, LogReal};

fn require_complete(pmf: &LatticePMF) -> Result<()> {
    if pmf.truncated && !pmf.truncation_mass_bound.is_zero() {
        return Err(Error::param("tilting needs an untruncated measure; the overflow cell has no location"));
    }
    Ok(())
}

/// Conjugate measure `G_z{m} = e^{zm} G{m} / G^(z)` and `ln G^(z)`.
pub fn tilt_pmf(pmf: &LatticePMF, z: f64) -> Result<(LatticePMF, f64)> {
    require_complete(pmf)?;
    if !z.is_finite() {
        return Err(Error::param(format!("tilt parameter must be finite, got {z}")));
    }
    let x0 = pmf.offset as f64;
    let raised: Vec<LogReal> = pmf
        .masses
        .iter()
        .enumerate()
        .map(|(i, m)| if m.is_zero() { LogReal::ZERO } else { LogReal::from_ln(m.ln() + z * (x0 + i as f64)) })
        .collect();
    let norm = log_sum_exp(&raised).ln();
    if !norm.is_finite() {
        return Err(Error::Instability(format!("tilted normalizer overflows at z = {z}")));
    }
    let masses = raised
        .into_iter()
        .map(|m| if m.is_zero() { m } else { LogReal::from_ln(m.ln() - norm) })
        .collect();
    Ok((LatticePMF { offset: pmf.offset, masses, truncated: false, truncation_mass_bound: LogReal::ZERO }, norm))
}

/// Relative gap between `e^{zm} G{m}` and `(1/2pi) int G^(it + z) e^{-itm} dt`.
///
/// Both sides are divided by the common factor `e^{shift}` pulled out of the
/// transform; where `G{m} = 0` the gap is measured against the largest tilted mass.
pub fn inversion_check(pmf: &LatticePMF, z: f64, m: i64) -> Result<f64> {
    require_complete(pmf)?;
    let (shift, _) = cf_eval_scaled(pmf, ComplexVal::new(z, 0.0));
    let degree = (pmf.max_value() - pmf.offset).unsigned_abs() as usize + m.unsigned_abs() as usize;
    let rhs = periodic_quadrature(
        |t| {
            let (_, v) = cf_eval_scaled(pmf, ComplexVal::new(z, t));
            v * ComplexVal::from_polar(1.0, -t * m as f64)
        },
        nodes_for_degree(degree),
    )?;
    let g = pmf.mass(m);
    let lhs = if g.is_zero() { 0.0 } else { (g.ln() + z * m as f64 - shift).exp() };
    let diff = (rhs - lhs).norm();
    Ok(if lhs > 0.0 { diff / lhs } else { diff })
}
