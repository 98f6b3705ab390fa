//! Norms of signed lattice measures and numerical checks of two auxiliary
//! inequalities: a Fourier-side bound on total variation and two-sided
//! Stirling bounds for the Gamma function.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::LatticePMF;
use crate::numerics::{ln_gamma, nodes_for_degree, periodic_quadrature, ComplexVal};

/// Finitely supported signed measure on the integers, linear scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedLatticeMeasure {
    pub offset: i64,
    pub masses: Vec<f64>,
}

impl SignedLatticeMeasure {
    pub fn new(offset: i64, masses: Vec<f64>) -> Self {
        SignedLatticeMeasure { offset, masses }
    }

    pub fn from_pmf(pmf: &LatticePMF) -> Self {
        SignedLatticeMeasure { offset: pmf.offset, masses: pmf.to_linear() }
    }

    /// `a - b` on the union of supports.
    pub fn difference(a: &LatticePMF, b: &LatticePMF) -> Self {
        let lo = a.offset.min(b.offset);
        let hi = a.max_value().max(b.max_value());
        let masses = (lo..=hi).map(|k| a.mass(k).to_linear() - b.mass(k).to_linear()).collect();
        SignedLatticeMeasure { offset: lo, masses }
    }

    pub fn scaled(&self, c: f64) -> Self {
        SignedLatticeMeasure { offset: self.offset, masses: self.masses.iter().map(|m| c * m).collect() }
    }

    fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.masses.iter().enumerate().map(move |(i, &m)| ((self.offset + i as i64) as f64, m))
    }
}

/// `sum_k |M{k}|`.
pub fn tv_norm(m: &SignedLatticeMeasure) -> f64 {
    m.masses.iter().map(|v| v.abs()).sum()
}

/// `sup_j |sum_{k<=j} M{k}|`.
pub fn kolmogorov_norm(m: &SignedLatticeMeasure) -> f64 {
    let mut acc = 0.0;
    let mut best: f64 = 0.0;
    for v in &m.masses {
        acc += v;
        best = best.max(acc.abs());
    }
    best
}

/// `(1 + b pi)^{1/2} ((1/2pi) int (|M^(it)|^2 + b^{-2} |(e^{-ita} M^(it))'|^2) dt)^{1/2}`,
/// with the derivative `sum_k i (k - a) e^{it(k - a)} M{k}` taken analytically.
/// `nodes` is raised to the count that integrates the trigonometric integrand exactly.
pub fn varijotas_rhs(m: &SignedLatticeMeasure, a: f64, b: f64, nodes: usize) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::param(format!("b must be positive, got {b}")));
    }
    let nodes = nodes.max(nodes_for_degree(m.masses.len()));
    let integral = periodic_quadrature(
        |t| {
            let mut f = ComplexVal::new(0.0, 0.0);
            let mut d = ComplexVal::new(0.0, 0.0);
            for (k, mk) in m.points() {
                let e = ComplexVal::from_polar(mk, t * (k - a));
                f += e;
                d += ComplexVal::new(0.0, k - a) * e;
            }
            ComplexVal::new(f.norm_sqr() + d.norm_sqr() / (b * b), 0.0)
        },
        nodes,
    )?;
    Ok(((1.0 + b * std::f64::consts::PI) * integral.re.max(0.0)).sqrt())
}

/// One evaluated inequality `lhs <= rhs` (or `<` when strict).
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub check: String,
    pub inputs: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// `rhs - lhs`; positive when the inequality holds.
    pub margin: f64,
}

impl BoundCheck {
    pub fn new(check: impl Into<String>, inputs: serde_json::Value, lhs: f64, rhs: f64, strict: bool) -> Self {
        let pass = if strict { lhs < rhs } else { lhs <= rhs };
        BoundCheck { check: check.into(), inputs, lhs, rhs, pass, margin: rhs - lhs }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// `tv_norm(M) <= varijotas_rhs(M, a, b)`, allowing `tol` relative quadrature slack.
pub fn varijotas_check(m: &SignedLatticeMeasure, a: f64, b: f64, tol: f64) -> Result<BoundCheck> {
    let rhs = varijotas_rhs(m, a, b, 0)?;
    let lhs = tv_norm(m);
    Ok(BoundCheck::new(
        "tv_fourier_bound",
        serde_json::json!({ "a": a, "b": b, "support": m.masses.len() }),
        lhs,
        rhs * (1.0 + tol),
        false,
    ))
}

/// Both sides of `x^x e^{-x} sqrt(2pi(x+0.16)) < Gamma(x+1) < x^x e^{-x} sqrt(2pi(x+0.18))`,
/// compared on the log scale.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaBounds {
    pub x: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `ln Gamma(x+1) - ln lower`.
    pub lower_margin: f64,
    /// `ln upper - ln Gamma(x+1)`.
    pub upper_margin: f64,
}

pub fn gamma_bounds_check(x: f64) -> Result<GammaBounds> {
    if !(x >= 1.0 && x.is_finite()) {
        return Err(Error::param(format!("the Gamma bounds are stated for x >= 1, got {x}")));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let stirling = x * x.ln() - x;
    let lower = stirling + 0.5 * (two_pi * (x + 0.16)).ln();
    let upper = stirling + 0.5 * (two_pi * (x + 0.18)).ln();
    let lg = ln_gamma(x + 1.0);
    Ok(GammaBounds {
        x,
        lower_ok: lower < lg,
        upper_ok: lg < upper,
        lower_margin: lg - lower,
        upper_margin: upper - lg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dipole() -> SignedLatticeMeasure {
        SignedLatticeMeasure::new(0, vec![1.0, -1.0])
    }

    #[test]
    fn norm_examples() {
        assert_eq!(tv_norm(&dipole()), 2.0);
        assert_eq!(kolmogorov_norm(&dipole()), 1.0);
        let zero = SignedLatticeMeasure::new(3, vec![0.0; 4]);
        assert_eq!(tv_norm(&zero), 0.0);
        let pt = SignedLatticeMeasure::new(5, vec![-2.5]);
        assert_eq!(kolmogorov_norm(&pt), 2.5);
        assert_eq!(tv_norm(&dipole().scaled(-3.0)), 6.0);
    }

    #[test]
    fn point_mass_rhs() {
        let m = SignedLatticeMeasure::new(0, vec![1.0]);
        for b in [0.5, 1.0, 7.0] {
            let r = varijotas_rhs(&m, 0.0, b, 8).unwrap();
            assert!((r - (1.0 + b * std::f64::consts::PI).sqrt()).abs() < 1e-14);
        }
        assert!(varijotas_rhs(&m, 0.0, 0.0, 8).is_err());
    }

    #[test]
    fn rhs_matches_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let len = rng.gen_range(1..30);
            let m = SignedLatticeMeasure::new(rng.gen_range(-5..5), (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let (a, b) = (rng.gen_range(-3.0..10.0), rng.gen_range(0.5..5.0));
            // (1/2pi) int |M^|^2 = sum M^2, likewise for the derivative
            let s: f64 = m.points().map(|(k, v)| v * v * (1.0 + (k - a) * (k - a) / (b * b))).sum();
            let want = ((1.0 + b * std::f64::consts::PI) * s).sqrt();
            let got = varijotas_rhs(&m, a, b, 0).unwrap();
            assert!(((got - want) / want).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_bounds_examples() {
        let g = gamma_bounds_check(1.0).unwrap();
        assert!(g.lower_ok && g.upper_ok);
        // mpmath: e^{-1} sqrt(2 pi 1.16), e^{-1} sqrt(2 pi 1.18)
        assert!((g.lower_margin + 0.993171953532376f64.ln()).abs() < 1e-13);
        assert!((g.upper_margin - 1.00169719104469f64.ln()).abs() < 1e-13);
        let g100 = gamma_bounds_check(100.0).unwrap();
        assert!(g100.lower_ok && g100.upper_ok && g100.lower_margin < g.lower_margin);
        assert!(gamma_bounds_check(0.5).is_err());
    }
}
