use std::f64::consts::PI;

use super::ComplexVal;
use crate::error::{Error, Result};

/// `(1/2pi) * integral_{-pi}^{pi} f(t) dt` by the trapezoidal rule on
/// `nodes` equispaced points.
///
/// Exact up to rounding whenever `f` is a trigonometric polynomial of degree
/// below `nodes / 2`; every integrand in this crate is one.
pub fn periodic_quadrature<F>(f: F, nodes: usize) -> Result<ComplexVal>
where
    F: Fn(f64) -> ComplexVal,
{
    if nodes < 4 {
        return Err(Error::param(format!("periodic quadrature needs >= 4 nodes, got {nodes}")));
    }
    let h = 2.0 * PI / nodes as f64;
    let mut acc = ComplexVal::new(0.0, 0.0);
    for k in 0..nodes {
        acc += f(-PI + h * k as f64);
    }
    Ok(acc / nodes as f64)
}

/// Node count for an integrand of the given trigonometric degree.
pub fn nodes_for_degree(degree: usize) -> usize {
    (2 * degree + 1).max(4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrates_to_one() {
        let v = periodic_quadrature(|_| ComplexVal::new(1.0, 0.0), 8).unwrap();
        assert!((v - ComplexVal::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn orthogonality() {
        let i = ComplexVal::i();
        let v = periodic_quadrature(|t| (i * t).exp() * (-i * t).exp(), 9).unwrap();
        assert!((v - ComplexVal::new(1.0, 0.0)).norm() < 1e-15);
        let w = periodic_quadrature(|t| (i * t).exp(), 9).unwrap();
        assert!(w.norm() < 1e-15);
    }

    #[test]
    fn rejects_too_few_nodes() {
        assert!(periodic_quadrature(|_| ComplexVal::new(1.0, 0.0), 3).is_err());
    }

    #[test]
    fn exact_fourier_coefficients_of_trig_polynomial() {
        // f(t) = sum_k c_k e^{ikt}, degree 7; recover c_3
        let coeffs: Vec<f64> = (0..=7).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let i = ComplexVal::i();
        let f = |t: f64| -> ComplexVal {
            coeffs.iter().enumerate().map(|(k, c)| (i * (k as f64) * t).exp() * *c).sum::<ComplexVal>()
                * (-i * 3.0 * t).exp()
        };
        let v = periodic_quadrature(f, nodes_for_degree(7) + 1).unwrap();
        assert!((v.re - 0.25).abs() < 1e-13 && v.im.abs() < 1e-13);
    }
}
