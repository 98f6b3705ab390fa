//! Exact distributions of window statistics over Bernoulli chains.

mod brute;
mod cf;
mod dp;
mod export;
mod matpow;
mod pmf;
mod statistic;

pub use brute::{pmf_bruteforce, pmf_bruteforce_rational, MAX_BRUTE_CHAIN};
pub use cf::{cf_eval, cf_eval_scaled};
pub use dp::{pmf_dp, pmf_dp_with_limit};
pub use export::{pmf_from_json, pmf_to_csv, pmf_to_json, CSV_SCHEMA_LINE};
pub use matpow::{pmf_matpow, pmf_matpow_with_limit};
pub use pmf::{pmf_moments, LatticePMF, RationalPmf};
pub use statistic::{BernoulliChainSpec, StatisticKind, WindowStatistic, MAX_WIDTH};

use crate::error::{Error, Result};
use crate::numerics::{scaled::Weight, LogReal};

/// Default ceiling on the working memory of a single exact computation.
pub const DEFAULT_MEMORY_LIMIT: u64 = 8 << 30;

/// Count cap used by production runs: `ceil(mu + 12 sqrt(mu) + 30)` for a
/// statistic with mean `mu`.
pub fn default_cap(mean: f64) -> usize {
    (mean + 12.0 * mean.max(0.0).sqrt() + 30.0).ceil() as usize
}

/// One transfer-matrix edge: appending `bit` to state `from` gives window
/// `(from << 1) | bit`, pays `payoff`, and moves to `to`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Edge {
    pub from: usize,
    pub to: usize,
    pub bit: usize,
    pub payoff: usize,
}

pub(crate) fn edges(stat: &WindowStatistic) -> Vec<Edge> {
    let mask = stat.n_states() - 1;
    let mut out = Vec::with_capacity(2 * stat.n_states());
    for from in 0..stat.n_states() {
        for bit in 0..2 {
            let window = (from << 1) | bit;
            out.push(Edge { from, to: window & mask, bit, payoff: stat.payoff(window) as usize });
        }
    }
    out
}

/// `[P(bit = 0), P(bit = 1)]`, adjusted by at most one unit in the last place
/// so the two sum to exactly one. Otherwise the rounding of `1 - p` compounds
/// into a total-mass drift of order `n_terms * 1e-16`.
pub(crate) fn bit_probs(p: f64) -> [Weight; 2] {
    let (q, p) = if p <= 0.5 {
        let q = 1.0 - p;
        (q, 1.0 - q)
    } else {
        (1.0 - p, p)
    };
    [Weight::exact(q), Weight::exact(p)]
}

/// Distribution of the first `w - 1` chain bits over states.
pub(crate) fn initial_states(stat: &WindowStatistic, p: f64) -> Vec<LogReal> {
    let (lq, lp) = (LogReal::from_ln((-p).ln_1p()), LogReal::from_linear(p));
    let bits = stat.width() as u32 - 1;
    (0..stat.n_states())
        .map(|s| {
            let ones = (s as u32).count_ones();
            lp.powf(ones as f64) * lq.powf((bits - ones) as f64)
        })
        .collect()
}

/// Resolves the polynomial cap: `(cap, full_support)`.
pub(crate) fn resolve_cap(stat: &WindowStatistic, chain: &BernoulliChainSpec, cap: Option<usize>) -> Result<(usize, bool)> {
    let full = chain.n_terms * stat.max_payoff() as usize;
    match cap {
        None => Ok((full, true)),
        Some(0) => Err(Error::param("cap must be at least 1")),
        Some(k) if k >= full => Ok((full, true)),
        Some(k) => Ok((k, false)),
    }
}

/// Bytes for `polys` polynomials of degree `cap` (mantissas plus chunk exponents).
pub(crate) fn poly_bytes(polys: usize, cap: usize) -> u64 {
    let len = cap as u64 + 1;
    polys as u64 * (8 * len + 4 * len.div_ceil(crate::numerics::scaled::CHUNK as u64))
}

pub(crate) fn check_memory(needed: u64, limit: u64) -> Result<()> {
    if needed > limit {
        return Err(Error::MemoryLimit { needed, limit });
    }
    Ok(())
}
