use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{default_cap, pmf_dp, pmf_matpow, BernoulliChainSpec, LatticePMF, WindowStatistic};

/// Which exact algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactMethod {
    Auto,
    Dp,
    Matpow,
}

impl ExactMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(ExactMethod::Auto),
            "dp" => Ok(ExactMethod::Dp),
            "matpow" => Ok(ExactMethod::Matpow),
            other => Err(Error::config(format!("unknown method '{other}' (auto, dp, matpow)"))),
        }
    }
}

/// Count cap for the exact distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CapRule {
    /// `ceil(mu + 12 sqrt(mu) + 30)` from the exact window mean.
    Auto,
    /// No truncation.
    Full,
    Fixed(usize),
}

impl CapRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(CapRule::Auto),
            "full" => Ok(CapRule::Full),
            v => v
                .parse::<usize>()
                .map(CapRule::Fixed)
                .map_err(|_| Error::config(format!("cap must be auto, full or an integer, got '{v}'"))),
        }
    }
}

/// `E f(window)` for one window of iid Bernoulli(p) bits.
pub fn window_mean(stat: &WindowStatistic, p: f64) -> f64 {
    let w = stat.width();
    (0..1usize << w)
        .map(|win| {
            let ones = win.count_ones() as i32;
            stat.payoff(win) as f64 * p.powi(ones) * (1.0 - p).powi(w as i32 - ones)
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct ExactRun {
    pub pmf: LatticePMF,
    pub method: ExactMethod,
    pub cap: usize,
}

/// Exact distribution of `stat` over `n_terms` windows. `Auto` picks the
/// transfer-matrix power when `states^2 * cap * log2(n) < n`.
pub fn compute_exact(stat: &WindowStatistic, n_terms: usize, p: f64, cap: CapRule, method: ExactMethod) -> Result<ExactRun> {
    let chain = BernoulliChainSpec::new(n_terms, p)?;
    let full = n_terms.saturating_mul(stat.max_payoff() as usize).max(1);
    let cap = match cap {
        CapRule::Auto => default_cap(n_terms as f64 * window_mean(stat, p)).min(full),
        CapRule::Full => full,
        CapRule::Fixed(0) => return Err(Error::param("cap must be positive")),
        CapRule::Fixed(c) => c.min(full),
    };
    let method = match method {
        ExactMethod::Auto => {
            let s = stat.n_states() as f64;
            if s * s * cap as f64 * (n_terms as f64).log2().max(1.0) < n_terms as f64 {
                ExactMethod::Matpow
            } else {
                ExactMethod::Dp
            }
        }
        m => m,
    };
    let pmf = match method {
        ExactMethod::Matpow => pmf_matpow(stat, &chain, cap)?,
        _ => pmf_dp(stat, &chain, Some(cap))?,
    };
    Ok(ExactRun { pmf, method, cap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_means() {
        assert!((window_mean(&WindowStatistic::two_runs(), 0.3) - 0.09).abs() < 1e-15);
        assert!((window_mean(&WindowStatistic::n11_event(), 0.3) - 0.21).abs() < 1e-15);
    }

    #[test]
    fn auto_method_and_cap() {
        let stat = WindowStatistic::two_runs();
        let small = compute_exact(&stat, 50, 0.2, CapRule::Auto, ExactMethod::Auto).unwrap();
        assert_eq!(small.method, ExactMethod::Dp);
        assert_eq!(small.cap, 49);
        let big = compute_exact(&stat, 100_000, 0.01, CapRule::Auto, ExactMethod::Auto).unwrap();
        assert_eq!(big.method, ExactMethod::Matpow);
        assert_eq!(big.cap, default_cap(10.0));
        assert!(compute_exact(&stat, 10, 0.2, CapRule::Fixed(0), ExactMethod::Dp).is_err());
        assert_eq!(CapRule::parse("17").unwrap(), CapRule::Fixed(17));
        assert!(CapRule::parse("x").is_err());
    }
}
