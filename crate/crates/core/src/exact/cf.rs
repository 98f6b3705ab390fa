use super::LatticePMF;
use crate::error::{Error, Result};
use crate::numerics::ComplexVal;

/// `E e^{uS}` as `e^shift * value`, with `|value|` of order one.
///
/// Only stored masses contribute; a truncated measure's overflow cell has no
/// location and is ignored.
pub fn cf_eval_scaled(pmf: &LatticePMF, u: ComplexVal) -> (f64, ComplexVal) {
    let x0 = pmf.offset as f64;
    let expo = |i: usize, ln_m: f64| ln_m + u.re * (x0 + i as f64);
    let shift = pmf
        .masses
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_zero())
        .map(|(i, m)| expo(i, m.ln()))
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return (0.0, ComplexVal::new(0.0, 0.0));
    }
    let mut acc = ComplexVal::new(0.0, 0.0);
    for (i, m) in pmf.masses.iter().enumerate() {
        if m.is_zero() {
            continue;
        }
        let mag = (expo(i, m.ln()) - shift).exp();
        acc += ComplexVal::from_polar(mag, u.im * (x0 + i as f64));
    }
    (shift, acc)
}

/// `E e^{uS}` on the linear scale; errors if the value would overflow.
pub fn cf_eval(pmf: &LatticePMF, u: ComplexVal) -> Result<ComplexVal> {
    let (shift, v) = cf_eval_scaled(pmf, u);
    if shift + v.norm().ln() > 700.0 {
        return Err(Error::Instability(format!("E exp(uS) overflows at u = {u}")));
    }
    Ok(v * shift.exp())
}
