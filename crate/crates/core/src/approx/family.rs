use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ln_factorial, ln_gamma, log_sum_exp, ComplexVal, LogReal};

/// Relative size of the remaining tail at which [`ApproxFamily::tail`] stops.
const TAIL_REL_TOL: f64 = 1e-18;

/// One of the three approximating laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ApproxFamily {
    Poisson { lambda: f64 },
    /// `NB(r, qbar){j} = Gamma(r+j) / (j! Gamma(r)) qbar^r pbar^j`, `pbar = 1 - qbar`.
    NegBinomial { r: f64, qbar: f64 },
    Binomial { n: u64, ptilde: f64 },
}

/// `ln C(n, k)` through log-factorials.
fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

impl ApproxFamily {
    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param(format!("Poisson parameter must be positive, got {lambda}")));
        }
        Ok(ApproxFamily::Poisson { lambda })
    }

    pub fn neg_binomial(r: f64, qbar: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) || !(qbar > 0.0 && qbar < 1.0) {
            return Err(Error::param(format!("NB needs r > 0 and qbar in (0, 1), got r={r}, qbar={qbar}")));
        }
        Ok(ApproxFamily::NegBinomial { r, qbar })
    }

    pub fn binomial(n: u64, ptilde: f64) -> Result<Self> {
        if n == 0 || !(ptilde > 0.0 && ptilde < 1.0) {
            return Err(Error::param(format!("binomial needs N >= 1 and p in (0, 1), got N={n}, p={ptilde}")));
        }
        Ok(ApproxFamily::Binomial { n, ptilde })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ApproxFamily::Poisson { .. } => "poisson",
            ApproxFamily::NegBinomial { .. } => "neg_binomial",
            ApproxFamily::Binomial { .. } => "binomial",
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ApproxFamily::Poisson { lambda } => lambda,
            ApproxFamily::NegBinomial { r, qbar } => r * (1.0 - qbar) / qbar,
            ApproxFamily::Binomial { n, ptilde } => n as f64 * ptilde,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ApproxFamily::Poisson { lambda } => lambda,
            ApproxFamily::NegBinomial { r, qbar } => r * (1.0 - qbar) / (qbar * qbar),
            ApproxFamily::Binomial { n, ptilde } => n as f64 * ptilde * (1.0 - ptilde),
        }
    }

    /// Largest support point, if finite.
    pub fn support_max(&self) -> Option<u64> {
        match *self {
            ApproxFamily::Binomial { n, .. } => Some(n),
            _ => None,
        }
    }

    /// `ln P(k)`; `-inf` outside the support.
    pub fn ln_pmf(&self, k: i64) -> f64 {
        if k < 0 {
            return f64::NEG_INFINITY;
        }
        let kf = k as f64;
        match *self {
            ApproxFamily::Poisson { lambda } => kf * lambda.ln() - lambda - ln_factorial(k as u64),
            ApproxFamily::NegBinomial { r, qbar } => {
                ln_gamma(r + kf) - ln_factorial(k as u64) - ln_gamma(r) + r * qbar.ln() + kf * (-qbar).ln_1p()
            }
            ApproxFamily::Binomial { n, ptilde } => {
                if k as u64 > n {
                    return f64::NEG_INFINITY;
                }
                ln_choose(n, k as u64) + kf * ptilde.ln() + (n - k as u64) as f64 * (-ptilde).ln_1p()
            }
        }
    }

    pub fn pmf(&self, k: i64) -> LogReal {
        LogReal::from_ln(self.ln_pmf(k))
    }

    /// `P(k + 1) / P(k)`.
    fn step_ratio(&self, k: i64) -> f64 {
        let kf = k as f64;
        match *self {
            ApproxFamily::Poisson { lambda } => lambda / (kf + 1.0),
            ApproxFamily::NegBinomial { r, qbar } => (1.0 - qbar) * (r + kf) / (kf + 1.0),
            ApproxFamily::Binomial { n, ptilde } => {
                (n as f64 - kf) / (kf + 1.0) * ptilde / (1.0 - ptilde)
            }
        }
    }

    /// Upper bound on every step ratio from `k` on.
    fn ratio_bound_from(&self, k: i64) -> f64 {
        let here = self.step_ratio(k);
        match *self {
            // the NB ratio increases toward pbar when r < 1
            ApproxFamily::NegBinomial { qbar, .. } => here.max(1.0 - qbar),
            _ => here,
        }
    }

    /// `P(X >= x)`, summed until the geometric tail bound falls below
    /// `1e-18` of the running sum.
    pub fn tail(&self, x: i64) -> LogReal {
        let start = x.max(0);
        if start == 0 {
            return LogReal::ONE;
        }
        let end = self.support_max().map(|n| n as i64);
        let mut terms = Vec::new();
        let mut k = start;
        let mut lt = self.ln_pmf(k);
        let mut acc = f64::NEG_INFINITY;
        loop {
            if end.is_some_and(|e| k > e) || lt == f64::NEG_INFINITY {
                break;
            }
            terms.push(LogReal::from_ln(lt));
            if terms.len() == 64 {
                acc = log_sum_exp(&[LogReal::from_ln(acc), log_sum_exp(&terms)]).ln();
                terms.clear();
            }
            let rho = self.ratio_bound_from(k);
            if rho < 1.0 {
                let running = log_sum_exp(&[LogReal::from_ln(acc), log_sum_exp(&terms)]).ln();
                let tail_ln = lt + (rho / (1.0 - rho)).ln();
                if tail_ln - running <= TAIL_REL_TOL.ln() {
                    break;
                }
            }
            // successive log-pmf by the exact ratio keeps the sum cheap; refresh periodically
            k += 1;
            lt = if k % 256 == 0 { self.ln_pmf(k) } else { lt + self.step_ratio(k - 1).ln() };
        }
        log_sum_exp(&[LogReal::from_ln(acc), log_sum_exp(&terms)])
    }

    /// `E e^{uX}`.
    pub fn cf(&self, u: ComplexVal) -> Result<ComplexVal> {
        let one = ComplexVal::new(1.0, 0.0);
        match *self {
            ApproxFamily::Poisson { lambda } => Ok((lambda * (u.exp() - one)).exp()),
            ApproxFamily::NegBinomial { r, qbar } => {
                let pbar = 1.0 - qbar;
                if pbar * u.re.exp() >= 1.0 {
                    return Err(Error::param(format!("NB generating function diverges at Re u = {}", u.re)));
                }
                Ok((r * (qbar / (one - pbar * u.exp())).ln()).exp())
            }
            ApproxFamily::Binomial { n, ptilde } => Ok((n as f64 * (one + ptilde * (u.exp() - one)).ln()).exp()),
        }
    }

    /// `ln E e^{hX}` for real `h`.
    pub fn log_mgf(&self, h: f64) -> Result<f64> {
        match *self {
            ApproxFamily::Poisson { lambda } => Ok(lambda * h.exp_m1()),
            ApproxFamily::NegBinomial { r, qbar } => {
                let pbar = 1.0 - qbar;
                if pbar * h.exp() >= 1.0 {
                    return Err(Error::param(format!("NB generating function diverges at h = {h}")));
                }
                Ok(r * (qbar.ln() - (-pbar * h.exp()).ln_1p()))
            }
            ApproxFamily::Binomial { n, ptilde } => Ok(n as f64 * (ptilde * h.exp_m1()).ln_1p()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn pmf_examples() {
        let p = ApproxFamily::poisson(1.0).unwrap();
        assert!(rel(p.pmf(0).to_linear(), (-1f64).exp()) < 1e-15);
        let q: f64 = 0.3;
        let g = ApproxFamily::neg_binomial(1.0, q).unwrap();
        for j in 0..20 {
            assert!(rel(g.pmf(j).to_linear(), q * (1.0 - q).powi(j as i32)) < 1e-13);
        }
        let b = ApproxFamily::binomial(10, 0.5).unwrap();
        assert!(rel(b.pmf(5).to_linear(), 252.0 / 1024.0) < 1e-14);
        assert!(b.pmf(11).is_zero());
        // mpmath, 40 digits
        let nb = ApproxFamily::neg_binomial(5.5, 0.7).unwrap();
        assert!(rel(nb.pmf(13).to_linear(), 1.030784002535499257610197e-4) < 1e-13);
    }

    #[test]
    fn tails() {
        let p = ApproxFamily::poisson(20.0).unwrap();
        assert_eq!(p.tail(0), LogReal::ONE);
        let l: f64 = 3.0;
        let p3 = ApproxFamily::poisson(l).unwrap();
        assert!(rel(p3.tail(1).to_linear(), -(-l).exp_m1()) < 1e-13);
        // 400-term sum at 40 digits (mpmath)
        assert!(rel(p.tail(25).to_linear(), 0.1567726218262377263807548) < 1e-13);
        let b = ApproxFamily::binomial(30, 0.2).unwrap();
        let direct: f64 = (12..=30).map(|k| b.pmf(k).to_linear()).sum();
        assert!(rel(b.tail(12).to_linear(), direct) < 1e-13);
        let nb = ApproxFamily::neg_binomial(0.4, 0.3).unwrap();
        let direct: f64 = (5..4000).map(|k| nb.pmf(k).to_linear()).sum();
        assert!(rel(nb.tail(5).to_linear(), direct) < 1e-12);
    }

    #[test]
    fn cf_basics() {
        let z = ComplexVal::new(0.0, 0.0);
        for f in [
            ApproxFamily::poisson(2.0).unwrap(),
            ApproxFamily::neg_binomial(3.0, 0.4).unwrap(),
            ApproxFamily::binomial(7, 0.3).unwrap(),
        ] {
            assert!((f.cf(z).unwrap() - 1.0).norm() < 1e-15);
            let t = ComplexVal::new(0.0, 1.3);
            assert!(f.cf(t).unwrap().norm() <= 1.0 + 1e-15);
        }
        let u = ComplexVal::new(0.2, -0.4);
        let b1 = ApproxFamily::binomial(1, 0.3).unwrap();
        assert!((b1.cf(u).unwrap() - (0.7 + 0.3 * u.exp())).norm() < 1e-15);
        assert!(ApproxFamily::neg_binomial(3.0, 0.4).unwrap().cf(ComplexVal::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn json_tagged() {
        let s = ApproxFamily::binomial(7, 0.25).unwrap().to_json().unwrap();
        assert_eq!(s, r#"{"variant":"Binomial","n":7,"ptilde":0.25}"#);
    }
}
