//! Heinrich's factorization of the characteristic function of a sum of
//! 1-dependent blocks, with the explicit recursions for 2-runs and for
//! `sum_j eta_j (1 - eta_{j+1})`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{cf_eval, pmf_dp, BernoulliChainSpec, LatticePMF};
use crate::moments::BlockGrouping;
use crate::numerics::ComplexVal;

/// Largest span of `E^` terms the recursion will build.
pub const MAX_SPAN: usize = 8;

/// `|phi_k|`, `|f_k|`, `|g_k|` below this abort the recursion.
pub const INSTABILITY_FLOOR: f64 = 0.1;

const INNER_REL_TOL: f64 = 1e-18;
const FIXED_POINT_ITERS: usize = 50;

fn one() -> ComplexVal {
    ComplexVal::new(1.0, 0.0)
}

/// `E Y_1 ... Y_L` and `E^(Y_1, ..., Y_L)` for `L = 1..=span`.
#[derive(Debug, Clone)]
pub struct HatE {
    pub joint: Vec<ComplexVal>,
    pub hat: Vec<ComplexVal>,
}

impl HatE {
    /// `E^` over a span of `len` consecutive blocks.
    pub fn span(&self, len: usize) -> ComplexVal {
        self.hat[len - 1]
    }
}

/// `E Y_1 ... Y_L` from the moments `M(k) = E prod_{i<=k} e^{u X_i}` of
/// contiguous runs, expanding `prod (e^{uX_i} - 1)` over subsets. Runs
/// separated by a gap are independent, so each subset factors into `M`s.
fn joint_y(moment: &[ComplexVal], len: usize) -> ComplexVal {
    let mut acc = ComplexVal::new(0.0, 0.0);
    for mask in 0u32..(1 << len) {
        let mut term = one();
        let mut run = 0;
        for i in 0..=len {
            if i < len && mask >> i & 1 == 1 {
                run += 1;
            } else if run > 0 {
                term *= moment[run - 1];
                run = 0;
            }
        }
        if (len - mask.count_ones() as usize) % 2 == 1 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    acc
}

/// `E^(Y_1..Y_k) = E Y_1..Y_k - sum_{j<k} E^(Y_1..Y_j) E Y_{j+1}..Y_k`,
/// keyed on span length. `joint(k)` returns `E prod_{i<=k} e^{u X_i}`.
pub fn heinrich_hat_e<F>(joint: F, span: usize) -> Result<HatE>
where
    F: Fn(usize) -> Result<ComplexVal>,
{
    if span == 0 || span > MAX_SPAN {
        return Err(Error::param(format!("span must be in 1..={MAX_SPAN}, got {span}")));
    }
    let moment = (1..=span).map(&joint).collect::<Result<Vec<_>>>()?;
    let ey: Vec<ComplexVal> = (1..=span).map(|l| joint_y(&moment, l)).collect();
    let mut hat: Vec<ComplexVal> = Vec::with_capacity(span);
    for l in 1..=span {
        let mut v = ey[l - 1];
        for j in 1..l {
            v -= hat[j - 1] * ey[l - j - 1];
        }
        hat.push(v);
    }
    Ok(HatE { joint: ey, hat })
}

/// Right side of `|E^(Y_1..Y_k)| <= 2^{k-1} prod (E|Y_m|^2)^{1/2}` for identically
/// distributed blocks with `E|Y|^2 = second_moment`.
pub fn hat_e_bound(second_moment: f64, len: usize) -> f64 {
    2f64.powi(len as i32 - 1) * second_moment.powf(len as f64 / 2.0)
}

/// Exact block sums `X_1 + ... + X_L` for `L <= max_span`, the joint-moment
/// oracle behind the generic recursion.
#[derive(Debug, Clone)]
pub struct BlockOracle {
    pub grouping: BlockGrouping,
    pub p: f64,
    runs: Vec<LatticePMF>,
}

impl BlockOracle {
    pub fn new(grouping: &BlockGrouping, p: f64, max_span: usize) -> Result<Self> {
        if max_span == 0 || max_span > MAX_SPAN {
            return Err(Error::param(format!("span must be in 1..={MAX_SPAN}, got {max_span}")));
        }
        let runs = (1..=max_span)
            .map(|l| pmf_dp(&grouping.stat, &BernoulliChainSpec::new(grouping.terms_for(l), p)?, None))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockOracle { grouping: grouping.clone(), p, runs })
    }

    pub fn max_span(&self) -> usize {
        self.runs.len()
    }

    /// `E prod_{i<=len} e^{u X_i}`.
    pub fn joint(&self, u: ComplexVal, len: usize) -> Result<ComplexVal> {
        let pmf = self
            .runs
            .get(len.wrapping_sub(1))
            .ok_or_else(|| Error::param(format!("run length {len} outside 1..={}", self.runs.len())))?;
        cf_eval(pmf, u)
    }

    pub fn hat_e(&self, u: ComplexVal, span: usize) -> Result<HatE> {
        if span > self.runs.len() {
            return Err(Error::param(format!("span {span} exceeds oracle depth {}", self.runs.len())));
        }
        heinrich_hat_e(|l| self.joint(u, l), span)
    }

    /// `E|e^{uX_1} - 1|^2 = E e^{2 Re(u) X_1} - 2 Re E e^{uX_1} + 1`.
    pub fn y_second_moment(&self, u: ComplexVal) -> Result<f64> {
        let a = self.joint(ComplexVal::new(2.0 * u.re, 0.0), 1)?.re;
        let b = self.joint(u, 1)?.re;
        Ok((a - 2.0 * b + 1.0).max(0.0))
    }
}

/// A factorized characteristic function, kept in log form so long products
/// neither overflow nor underflow.
#[derive(Debug, Clone, Copy)]
pub struct FactorizedCf {
    pub ln_value: ComplexVal,
    /// Smallest `|factor|` met along the recursion.
    pub min_factor: f64,
    /// Magnitude of the largest retained span term (generic recursion only).
    pub last_span: f64,
}

impl FactorizedCf {
    pub fn value(&self) -> ComplexVal {
        self.ln_value.exp()
    }
}

fn guard(k: usize, f: ComplexVal, what: &str) -> Result<()> {
    if !(f.norm() >= INSTABILITY_FLOOR) {
        return Err(Error::Instability(format!(
            "|{what}_{k}| = {} fell below {INSTABILITY_FLOOR}",
            f.norm()
        )));
    }
    Ok(())
}

/// `prod_{k<=n_blocks} phi_k(u)` with
/// `phi_k = 1 + E Y_k + sum_{j<k} E^(Y_j..Y_k) / (phi_j..phi_{k-1})`,
/// dropping spans longer than `depth`.
pub fn heinrich_cf_generic(oracle: &BlockOracle, n_blocks: usize, u: ComplexVal, depth: usize) -> Result<FactorizedCf> {
    if depth == 0 || depth > oracle.max_span() {
        return Err(Error::param(format!("depth must be in 1..={}, got {depth}", oracle.max_span())));
    }
    let he = oracle.hat_e(u, depth)?;
    let mut phis: Vec<ComplexVal> = Vec::with_capacity(n_blocks);
    let mut ln_value = ComplexVal::new(0.0, 0.0);
    let mut min_factor = f64::INFINITY;
    for k in 0..n_blocks {
        let mut phi = one() + he.span(1);
        let mut denom = one();
        // j runs back from k-1; span = k - j + 1
        for len in 2..=depth.min(k + 1) {
            denom *= phis[k + 1 - len];
            phi += he.span(len) / denom;
        }
        guard(k + 1, phi, "phi")?;
        min_factor = min_factor.min(phi.norm());
        ln_value += phi.ln();
        phis.push(phi);
    }
    Ok(FactorizedCf { ln_value, min_factor, last_span: he.span(depth).norm() })
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// `Psi(u) = prod f_k(u)` for 2-runs over `n` windows:
/// `f_k = 1 + p^2 E + sum_{j<k} E^{k-j+1} p^{k-j+2} (1-p)^{k-j} / (f_j..f_{k-1})`, `E = e^u - 1`.
pub fn heinrich_cf_2runs(n: usize, p: f64, u: ComplexVal) -> Result<FactorizedCf> {
    check_p(p)?;
    let e = u.exp() - one();
    let base = one() + p * p * e;
    // the span-L term is p^2 E (E p (1-p))^{L-1} / (f_j..f_{k-1})
    let step = e * p * (1.0 - p);
    explicit_product(n, base, p * p * e, step, "f", |_| Ok(None))
}

/// Denominator convention in the N(1,1) recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorVariant {
    /// `g_j .. g_{k-1}`, matching the 2-runs recursion.
    UpToKminus1,
    /// `g_j .. g_k`, implicit in `g_k`.
    UpToK,
}

/// `Psi~(u) = prod g_k(u)` for `sum_j eta_j (1 - eta_{j+1})` over `n` windows:
/// `g_k = 1 + a E + sum_{j<k} (-1)^{k-j} a^{k-j+1} E^{k-j+1} / (g_j..)`, `a = p(1-p)`.
pub fn heinrich_cf_n11(n: usize, p: f64, u: ComplexVal, variant: DenominatorVariant) -> Result<FactorizedCf> {
    check_p(p)?;
    let a = p * (1.0 - p);
    let e = u.exp() - one();
    let base = one() + a * e;
    // span-L term: (a E)(-a E)^{L-1}
    let (lead, step) = (a * e, -a * e);
    match variant {
        DenominatorVariant::UpToKminus1 => explicit_product(n, base, lead, step, "g", |_| Ok(None)),
        DenominatorVariant::UpToK => explicit_product(n, base, lead, step, "g", |sum| {
            // g = base + sum / g, iterated from g = base
            let mut g = base;
            for _ in 0..FIXED_POINT_ITERS {
                let next = base + sum / g;
                if (next - g).norm() <= 1e-15 * next.norm() {
                    return Ok(Some(next));
                }
                g = next;
            }
            Err(Error::NonConvergence { terms: FIXED_POINT_ITERS, last_tail: (base + sum / g - g).norm() })
        }),
    }
}

/// Shared driver: factor `k` is `base + sum_{L>=2} lead step^{L-1} / (c_{k-L+1}..c_{k-1})`
/// unless `implicit` resolves it from the bare sum.
fn explicit_product<F>(n: usize, base: ComplexVal, lead: ComplexVal, step: ComplexVal, what: &str, implicit: F) -> Result<FactorizedCf>
where
    F: Fn(ComplexVal) -> Result<Option<ComplexVal>>,
{
    let mut factors: Vec<ComplexVal> = Vec::with_capacity(n);
    let mut ln_value = ComplexVal::new(0.0, 0.0);
    let mut min_factor = f64::INFINITY;
    for k in 0..n {
        let mut sum = ComplexVal::new(0.0, 0.0);
        let mut term = lead;
        for j in (0..k).rev() {
            term = term * step / factors[j];
            sum += term;
            if term.norm() <= INNER_REL_TOL * (base + sum).norm() {
                break;
            }
        }
        let f = match implicit(sum)? {
            Some(f) => f,
            None => base + sum,
        };
        guard(k + 1, f, what)?;
        min_factor = min_factor.min(f.norm());
        ln_value += f.ln();
        factors.push(f);
    }
    Ok(FactorizedCf { ln_value, min_factor, last_span: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{pmf_dp, WindowStatistic};
    use crate::moments::group_blocks;

    fn exact_cf(stat: &WindowStatistic, n: usize, p: f64, u: ComplexVal) -> ComplexVal {
        cf_eval(&pmf_dp(stat, &BernoulliChainSpec::new(n, p).unwrap(), None).unwrap(), u).unwrap()
    }

    #[test]
    fn single_factor_and_origin() {
        let u = ComplexVal::new(0.2, 0.5);
        let p = 0.3;
        let f = heinrich_cf_2runs(1, p, u).unwrap().value();
        assert!((f - (one() + p * p * (u.exp() - one()))).norm() < 1e-15);
        let g = heinrich_cf_n11(1, p, u, DenominatorVariant::UpToKminus1).unwrap().value();
        assert!((g - (one() + p * (1.0 - p) * (u.exp() - one()))).norm() < 1e-15);
        assert!((heinrich_cf_2runs(9, p, ComplexVal::new(0.0, 0.0)).unwrap().value() - one()).norm() < 1e-15);
    }

    #[test]
    fn two_runs_matches_exact() {
        let u = ComplexVal::new(0.1, 0.7);
        let got = heinrich_cf_2runs(20, 0.25, u).unwrap().value();
        let want = exact_cf(&WindowStatistic::two_runs(), 20, 0.25, u);
        assert!((got - want).norm() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn n11_variants_against_exact() {
        let u = ComplexVal::new(0.0, 0.4);
        let want = exact_cf(&WindowStatistic::n11_event(), 15, 0.3, u);
        let a = heinrich_cf_n11(15, 0.3, u, DenominatorVariant::UpToKminus1).unwrap().value();
        let b = heinrich_cf_n11(15, 0.3, u, DenominatorVariant::UpToK).unwrap().value();
        assert!((b - want).norm() > 1e-4);
        assert!((a - want).norm() < 1e-10);
    }

    #[test]
    fn generic_matches_exact_and_improves_with_depth() {
        let stat = WindowStatistic::two_runs();
        let g = group_blocks(&stat, 1).unwrap();
        let oracle = BlockOracle::new(&g, 0.1, 8).unwrap();
        // truncation error scales like (|e^u - 1| p (1 - p))^{depth + 1}
        for t in [0.3, 0.5, 1.0, 2.0, 3.1] {
            let u = ComplexVal::new(0.0, t);
            let want = exact_cf(&stat, 30, 0.1, u);
            let errs: Vec<f64> = (1..=8)
                .map(|d| (heinrich_cf_generic(&oracle, 30, u, d).unwrap().value() - want).norm())
                .collect();
            for w in errs.windows(2) {
                assert!(w[1] <= w[0] * 1.0001 + 1e-15, "t={t}: {errs:?}");
            }
            if t <= 0.5 {
                assert!(errs[5] < 1e-8, "t={t}: {}", errs[5]);
            }
        }
    }

    #[test]
    fn generic_with_independent_blocks() {
        // a width-1 payoff makes the blocks independent, so every depth is exact
        let stat = WindowStatistic::custom("ones", 1, vec![0, 1]).unwrap();
        let g = group_blocks(&stat, 2).unwrap();
        let oracle = BlockOracle::new(&g, 0.3, 3).unwrap();
        let u = ComplexVal::new(0.1, 0.9);
        let want = oracle.joint(u, 1).unwrap().powu(7);
        for d in 1..=3 {
            assert!((heinrich_cf_generic(&oracle, 7, u, d).unwrap().value() - want).norm() < 1e-14);
        }
    }

    #[test]
    fn hat_e_spans() {
        // independent blocks: every span beyond one vanishes
        let m1 = ComplexVal::new(0.8, 0.1);
        let he = heinrich_hat_e(|l| Ok(m1.powu(l as u32)), 5).unwrap();
        assert!((he.span(1) - (m1 - one())).norm() < 1e-15);
        for l in 2..=5 {
            assert!(he.span(l).norm() < 1e-15);
        }
        assert!(heinrich_hat_e(|_| Ok(one()), 9).is_err());
        let g = group_blocks(&WindowStatistic::two_runs(), 2).unwrap();
        let oracle = BlockOracle::new(&g, 0.2, 6).unwrap();
        let u = ComplexVal::new(0.1, 1.2);
        let he = oracle.hat_e(u, 6).unwrap();
        let b = oracle.y_second_moment(u).unwrap();
        for l in 1..=6 {
            assert!(he.span(l).norm() <= hat_e_bound(b, l));
        }
    }
}
