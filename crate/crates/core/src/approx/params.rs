use serde::Serialize;

use super::ApproxFamily;
use crate::error::{Error, Result};

/// Negative-binomial parameters matched to the 2-runs mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NBParams {
    pub r: f64,
    pub qbar: f64,
    pub pbar: f64,
}

impl NBParams {
    pub fn family(&self) -> Result<ApproxFamily> {
        ApproxFamily::neg_binomial(self.r, self.qbar)
    }
}

/// Binomial parameters for `sum_j eta_j (1 - eta_{j+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BIParams {
    /// `floor(n^2 / (3n - 2))`.
    pub n_trials: u64,
    pub ntilde: f64,
    pub ptilde: f64,
    pub alpha: f64,
}

impl BIParams {
    pub fn family(&self) -> Result<ApproxFamily> {
        ApproxFamily::binomial(self.n_trials, self.ptilde)
    }

    /// `|N ptilde^2 - (3n - 2) alpha^2| / alpha^2`, the variance gap in units of `alpha^2`.
    pub fn variance_gap(&self, n: usize) -> f64 {
        let a2 = self.alpha * self.alpha;
        (self.n_trials as f64 * self.ptilde * self.ptilde - (3.0 * n as f64 - 2.0) * a2).abs() / a2
    }
}

/// Default constant `C` in the binomial variance proximity `|N ptilde^2 - (3n-2) alpha^2| <= C alpha^2`.
pub const DEFAULT_BI_VARIANCE_CONSTANT: f64 = 2.0;

/// Exact mean and variance of the 2-runs statistic with `n` windows.
pub fn two_runs_mean_var(n: usize, p: f64) -> (f64, f64) {
    let nf = n as f64;
    let p2 = p * p;
    (nf * p2, nf * p2 + nf * p2 * p * (2.0 - 3.0 * p) - 2.0 * p2 * p * (1.0 - p))
}

/// Exact mean and variance of `sum_j eta_j (1 - eta_{j+1})` with `n` windows.
pub fn n11_mean_var(n: usize, p: f64) -> (f64, f64) {
    let nf = n as f64;
    let a = p * (1.0 - p);
    (nf * a, nf * a - (3.0 * nf - 2.0) * a * a)
}

/// `r = n^2 p^4 / A`, `pbar = A / (n p^2 + A)` with `A = n p^3 (2 - 3p) - 2 p^3 (1 - p)`.
pub fn nb_params(n: usize, p: f64) -> Result<NBParams> {
    if !(p > 0.0 && p < 1.0) || n == 0 {
        return Err(Error::param(format!("NB parameters need n >= 1 and p in (0, 1), got n={n}, p={p}")));
    }
    let nf = n as f64;
    let p2 = p * p;
    let p3 = p2 * p;
    let a = nf * p3 * (2.0 - 3.0 * p) - 2.0 * p3 * (1.0 - p);
    if a <= 0.0 {
        return Err(Error::param(format!(
            "NB excess variance n p^3 (2 - 3p) - 2 p^3 (1 - p) = {a:e} is not positive (needs p < 2/3 and n large)"
        )));
    }
    let mean = nf * p2;
    let r = mean * mean / a;
    let pbar = a / (mean + a);
    let qbar = 1.0 - pbar;
    if !(pbar > 0.0 && pbar < 1.0) || !(r > 0.0 && r.is_finite()) {
        return Err(Error::param(format!("NB parameters out of range: r={r}, pbar={pbar}")));
    }
    Ok(NBParams { r, qbar, pbar })
}

/// `N = floor(n^2 / (3n - 2))`, `ptilde = n alpha / N`, `alpha = p (1 - p)`.
pub fn bi_params(n: usize, p: f64) -> Result<BIParams> {
    if !(p > 0.0 && p < 1.0) || n == 0 {
        return Err(Error::param(format!("binomial parameters need n >= 1 and p in (0, 1), got n={n}, p={p}")));
    }
    let nf = n as f64;
    let ntilde = nf * nf / (3.0 * nf - 2.0);
    // exact integer floor, free of the division's rounding
    let n_trials = (n as u128 * n as u128 / (3 * n as u128 - 2)) as u64;
    if n_trials == 0 {
        return Err(Error::param(format!("N = floor(n^2 / (3n - 2)) is 0 for n = {n}")));
    }
    let alpha = p * (1.0 - p);
    let ptilde = nf * alpha / n_trials as f64;
    if ptilde >= 1.0 {
        return Err(Error::param(format!("ptilde = n alpha / N = {ptilde} is not below 1")));
    }
    Ok(BIParams { n_trials, ntilde, ptilde, alpha })
}

/// `lambda* = nu1 (1 - nu1 y / (1 - nu1))`.
pub fn lambda_star(nu1: f64, y: f64) -> Result<f64> {
    let v = nu1 * (1.0 - nu1 / (1.0 - nu1) * y);
    if !(v > 0.0) {
        return Err(Error::param(format!("lambda* = {v} is not positive for nu1 = {nu1}, y = {y}")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn nb_substitution() {
        // mpmath: A = 0.1682, pbar = 0.14398219482965245677, r = 5.9453032104637336504
        let nb = nb_params(100, 0.1).unwrap();
        assert!(rel(nb.pbar, 0.14398219482965245677) < 1e-14);
        assert!(rel(nb.r, 5.9453032104637336504) < 1e-14);
        assert_eq!(nb.pbar + nb.qbar, 1.0);
    }

    #[test]
    fn nb_asymptotics() {
        let p = 1e-3;
        let n = 10_000_000;
        let nb = nb_params(n, p).unwrap();
        assert!((0.99..=1.01).contains(&(nb.pbar / (2.0 * p))));
        assert!((0.99..=1.01).contains(&(nb.r / (n as f64 * p / 2.0))));
    }

    #[test]
    fn nb_moment_identities() {
        for &n in &[100usize, 1000, 10_000] {
            for &p in &[0.01, 0.05, 0.1, 0.2] {
                let f = nb_params(n, p).unwrap().family().unwrap();
                let (m, v) = two_runs_mean_var(n, p);
                assert!(rel(f.mean(), m) < 1e-12);
                assert!(rel(f.variance(), v) < 1e-12);
            }
        }
        assert!(nb_params(100, 0.7).is_err());
    }

    #[test]
    fn binomial_selection() {
        let b = bi_params(10, 0.3).unwrap();
        assert!(rel(b.ntilde, 100.0 / 28.0) < 1e-15);
        assert_eq!(b.n_trials, 3);
        let n = 1000;
        let b = bi_params(n, 0.05).unwrap();
        assert!((b.n_trials as f64 * b.ptilde - n as f64 * b.alpha).abs() <= 2.0 * f64::EPSILON * n as f64 * b.alpha);
        // the gap is n^2/N - (3n - 2) exactly, which lies in [0, 3n - 2) / N
        let gap = n as f64 * n as f64 / b.n_trials as f64 - (3.0 * n as f64 - 2.0);
        assert!((b.variance_gap(n) - gap).abs() < 1e-6);
        assert!(b.variance_gap(n) < (3.0 * n as f64 - 2.0) / b.n_trials as f64);
        assert!(bi_params(4, 0.5).is_err());
    }

    #[test]
    fn lambda_star_values() {
        assert_eq!(lambda_star(0.1, 0.0).unwrap(), 0.1);
        assert!(rel(lambda_star(0.1, 0.09).unwrap(), 0.099) < 1e-15);
        assert!(lambda_star(0.5, 2.0).is_err());
    }
}
