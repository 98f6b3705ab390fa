use rayon::prelude::*;

use super::{
    bit_probs, check_memory, edges, initial_states, poly_bytes, resolve_cap, BernoulliChainSpec, Edge, LatticePMF,
    WindowStatistic,
};
use crate::error::Result;
use crate::numerics::scaled::{ScaledPoly, Weight};
use crate::numerics::LogReal;

/// Square matrix of count-truncated polynomials, row-major.
struct PolyMatrix {
    dim: usize,
    cells: Vec<ScaledPoly>,
}

impl PolyMatrix {
    fn transfer(stat: &WindowStatistic, p: f64, cap: usize, edges: &[Edge]) -> Self {
        let dim = stat.n_states();
        let probs = bit_probs(p);
        let mut cells: Vec<ScaledPoly> = (0..dim * dim).map(|_| ScaledPoly::zeros(cap)).collect();
        for e in edges {
            let m = ScaledPoly::monomial(cap, e.payoff, probs[e.bit]);
            cells[e.from * dim + e.to].add_scaled(&m, 0, LogReal::ONE);
        }
        PolyMatrix { dim, cells }
    }

    fn square(&self) -> Self {
        let d = self.dim;
        let cap = self.cells[0].cap();
        // each entry is accumulated serially, so the result does not depend on scheduling
        let cells = (0..d * d)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / d, ij % d);
                let mut acc = ScaledPoly::zeros(cap);
                for k in 0..d {
                    acc.add_product(&self.cells[i * d + k], &self.cells[k * d + j]);
                }
                acc
            })
            .collect();
        PolyMatrix { dim: d, cells }
    }

    /// `self * T` using the two-edges-per-state sparsity of `T`.
    fn times_transfer(&self, edges: &[Edge], probs: &[Weight; 2]) -> Self {
        let d = self.dim;
        let cap = self.cells[0].cap();
        let cells = (0..d * d)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / d, ij % d);
                let mut acc = ScaledPoly::zeros(cap);
                for e in edges.iter().filter(|e| e.to == j) {
                    acc.add_scaled(&self.cells[i * d + e.from], e.payoff, probs[e.bit]);
                }
                acc
            })
            .collect();
        PolyMatrix { dim: d, cells }
    }
}

/// Distribution via binary powering of the polynomial transfer matrix.
///
/// Agrees with [`super::pmf_dp`] at the same cap; cost is
/// `O(log n_terms * 8^(w-1) * K^2)` instead of `O(n_terms * 2^w * K)`.
pub fn pmf_matpow(stat: &WindowStatistic, chain: &BernoulliChainSpec, cap: usize) -> Result<LatticePMF> {
    pmf_matpow_with_limit(stat, chain, cap, super::DEFAULT_MEMORY_LIMIT)
}

pub fn pmf_matpow_with_limit(
    stat: &WindowStatistic,
    chain: &BernoulliChainSpec,
    cap: usize,
    memory_limit: u64,
) -> Result<LatticePMF> {
    let (cap, full) = resolve_cap(stat, chain, Some(cap))?;
    let d = stat.n_states();
    check_memory(poly_bytes(3 * d * d, cap), memory_limit)?;

    let edges = edges(stat);
    let probs = bit_probs(chain.p);
    let t = PolyMatrix::transfer(stat, chain.p, cap, &edges);
    let n = chain.n_terms;
    let top = usize::BITS - 1 - n.leading_zeros();
    let mut r = PolyMatrix { dim: d, cells: t.cells.clone() };
    for bit in (0..top).rev() {
        r = r.square();
        if (n >> bit) & 1 == 1 {
            r = r.times_transfer(&edges, &probs);
        }
    }
    let init = initial_states(stat, chain.p);
    let mut total = ScaledPoly::zeros(cap);
    for (i, &w) in init.iter().enumerate() {
        for j in 0..d {
            total.add_scaled(&r.cells[i * d + j], 0, w);
        }
    }
    Ok(LatticePMF::from_scaled(&total, full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::pmf_dp;

    #[test]
    fn single_term_is_window_distribution() {
        let stat = WindowStatistic::nk1k2_event(1, 2).unwrap();
        let chain = BernoulliChainSpec::new(1, 0.3).unwrap();
        let pmf = pmf_matpow(&stat, &chain, 5).unwrap();
        assert!((pmf.mass(1).to_linear() - 0.7 * 0.3 * 0.3).abs() < 1e-15);
        assert!(!pmf.truncated);
    }

    #[test]
    fn agrees_with_dp_on_two_runs() {
        let stat = WindowStatistic::two_runs();
        let chain = BernoulliChainSpec::new(1000, 0.01).unwrap();
        let a = pmf_dp(&stat, &chain, Some(50)).unwrap();
        let b = pmf_matpow(&stat, &chain, 50).unwrap();
        for k in 0..=50 {
            let (x, y) = (a.mass(k), b.mass(k));
            assert!((x.ln() - y.ln()).abs() < 1e-12, "k={k} dp={x:?} matpow={y:?}");
        }
        assert!((a.truncation_mass_bound.ln() - b.truncation_mass_bound.ln()).abs() < 1e-9);
    }
}
