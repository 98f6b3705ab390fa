use num_traits::{One, Signed, Zero};

use super::{BernoulliChainSpec, RationalPmf, WindowStatistic};
use crate::error::{Error, Result};
use crate::numerics::{rational, Rational};

/// Longest chain the enumeration oracle accepts.
pub const MAX_BRUTE_CHAIN: usize = 24;

/// Exact distribution by enumerating every chain, with `p` taken as the exact
/// binary value of the `f64`.
pub fn pmf_bruteforce(stat: &WindowStatistic, chain: &BernoulliChainSpec) -> Result<RationalPmf> {
    let p = Rational::from_float(chain.p).ok_or_else(|| Error::param("p must be finite"))?;
    pmf_bruteforce_rational(stat, chain.n_terms, &p)
}

pub fn pmf_bruteforce_rational(stat: &WindowStatistic, n_terms: usize, p: &Rational) -> Result<RationalPmf> {
    if n_terms == 0 {
        return Err(Error::param("n_terms must be positive"));
    }
    if p.is_negative() || p > &Rational::one() {
        return Err(Error::param(format!("p must lie in [0, 1], got {p}")));
    }
    let len = n_terms + stat.width() - 1;
    if len > MAX_BRUTE_CHAIN {
        return Err(Error::param(format!("chain length {len} exceeds enumeration limit {MAX_BRUTE_CHAIN}")));
    }
    let w = stat.width();
    let mask = (1usize << w) - 1;
    let max_s = n_terms * stat.max_payoff() as usize;
    // counts[ones][s] = number of chains with that many ones and statistic value
    let mut counts = vec![vec![0u64; max_s + 1]; len + 1];
    for chain in 0usize..1 << len {
        let mut s = 0usize;
        for j in 0..n_terms {
            s += stat.payoff((chain >> (len - w - j)) & mask) as usize;
        }
        counts[chain.count_ones() as usize][s] += 1;
    }
    let q = Rational::one() - p;
    let weights: Vec<Rational> =
        (0..=len).map(|k| rational::pow(p, k) * rational::pow(&q, len - k)).collect();
    let mut masses = vec![Rational::zero(); max_s + 1];
    for (ones, row) in counts.iter().enumerate() {
        for (s, &c) in row.iter().enumerate() {
            if c > 0 {
                masses[s] += &weights[ones] * Rational::from_integer(c.into());
            }
        }
    }
    Ok(RationalPmf { masses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rational::ratio;

    #[test]
    fn two_runs_two_terms_half() {
        let pmf = pmf_bruteforce_rational(&WindowStatistic::two_runs(), 2, &ratio(1, 2)).unwrap();
        assert_eq!(pmf.masses, vec![ratio(5, 8), ratio(2, 8), ratio(1, 8)]);
        assert!(pmf.is_normalized());
        assert_eq!(pmf.mean(), ratio(1, 2));
    }

    #[test]
    fn zero_p_is_all_zeros_window() {
        let stat = WindowStatistic::custom("zeros", 2, vec![1, 0, 0, 0]).unwrap();
        let pmf = pmf_bruteforce_rational(&stat, 5, &Rational::zero()).unwrap();
        assert!(pmf.masses[5].is_one());
    }

    #[test]
    fn nk1k2_one_one_matches_n11_by_reversal() {
        // reversing the chain maps "0 then 1" onto "1 then 0"
        let a = pmf_bruteforce_rational(&WindowStatistic::nk1k2_event(1, 1).unwrap(), 9, &ratio(2, 7)).unwrap();
        let b = pmf_bruteforce_rational(&WindowStatistic::n11_event(), 9, &ratio(2, 7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_long_chains() {
        assert!(pmf_bruteforce_rational(&WindowStatistic::two_runs(), 24, &ratio(1, 2)).is_err());
    }
}
