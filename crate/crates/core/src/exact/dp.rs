use super::{bit_probs, check_memory, edges, initial_states, poly_bytes, resolve_cap, BernoulliChainSpec, LatticePMF, WindowStatistic};
use crate::error::Result;
use crate::numerics::{scaled::ScaledPoly, LogReal};

/// Forward dynamic program over (last `w - 1` bits, accumulated count).
///
/// With `cap = Some(K)` counts above `K` are lumped into the overflow cell;
/// since counts never decrease, masses at `k <= K` are unaffected.
pub fn pmf_dp(stat: &WindowStatistic, chain: &BernoulliChainSpec, cap: Option<usize>) -> Result<LatticePMF> {
    pmf_dp_with_limit(stat, chain, cap, super::DEFAULT_MEMORY_LIMIT)
}

pub fn pmf_dp_with_limit(
    stat: &WindowStatistic,
    chain: &BernoulliChainSpec,
    cap: Option<usize>,
    memory_limit: u64,
) -> Result<LatticePMF> {
    let (cap, full) = resolve_cap(stat, chain, cap)?;
    let states = stat.n_states();
    check_memory(poly_bytes(2 * states, cap), memory_limit)?;

    let probs = bit_probs(chain.p);
    let edges = edges(stat);
    let mut cur: Vec<ScaledPoly> =
        initial_states(stat, chain.p).into_iter().map(|c| ScaledPoly::monomial(cap, 0, c)).collect();
    let mut next: Vec<ScaledPoly> = (0..states).map(|_| ScaledPoly::zeros(cap)).collect();
    for _ in 0..chain.n_terms {
        next.iter_mut().for_each(ScaledPoly::clear);
        for e in &edges {
            next[e.to].add_scaled(&cur[e.from], e.payoff, probs[e.bit]);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let mut total = ScaledPoly::zeros(cap);
    for s in &cur {
        total.add_scaled(s, 0, LogReal::ONE);
    }
    Ok(LatticePMF::from_scaled(&total, full))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_runs_two_terms_half() {
        let pmf = pmf_dp(&WindowStatistic::two_runs(), &BernoulliChainSpec::new(2, 0.5).unwrap(), None).unwrap();
        let v = pmf.to_linear();
        assert_eq!(v.len(), 3);
        for (got, want) in v.iter().zip([5.0 / 8.0, 2.0 / 8.0, 1.0 / 8.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(!pmf.truncated);
    }

    #[test]
    fn n11_single_window() {
        for &p in &[0.0, 0.3, 0.9, 1.0] {
            let pmf = pmf_dp(&WindowStatistic::n11_event(), &BernoulliChainSpec::new(1, p).unwrap(), None).unwrap();
            assert!((pmf.mass(1).to_linear() - p * (1.0 - p)).abs() < 1e-15);
        }
    }

    #[test]
    fn all_ones_chain_is_point_mass() {
        let pmf = pmf_dp(&WindowStatistic::two_runs(), &BernoulliChainSpec::new(2, 1.0).unwrap(), None).unwrap();
        assert_eq!(pmf.mass(2), LogReal::ONE);
        assert!(pmf.mass(0).is_zero() && pmf.mass(1).is_zero());
    }

    #[test]
    fn cap_lumps_overflow_exactly() {
        let stat = WindowStatistic::two_runs();
        let chain = BernoulliChainSpec::new(30, 0.6).unwrap();
        let full = pmf_dp(&stat, &chain, None).unwrap();
        let cut = pmf_dp(&stat, &chain, Some(5)).unwrap();
        assert!(cut.truncated);
        for k in 0..=5 {
            assert!((cut.mass(k).ln() - full.mass(k).ln()).abs() < 1e-12);
        }
        assert!((cut.truncation_mass_bound.ln() - full.tail(6).ln()).abs() < 1e-12);
        assert!(pmf_dp(&stat, &chain, Some(0)).is_err());
    }

    #[test]
    fn memory_limit_is_checked_before_allocating() {
        let chain = BernoulliChainSpec::new(1_000_000_000, 0.1).unwrap();
        let e = pmf_dp(&WindowStatistic::two_runs(), &chain, None).unwrap_err();
        assert!(matches!(e, crate::Error::MemoryLimit { .. }));
    }
}
