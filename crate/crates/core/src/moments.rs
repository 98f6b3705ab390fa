//! Block moments of grouped window statistics and the regime conditions they
//! are checked against.
//!
//! Grouping `m` consecutive window payoffs into one block gives a 1-dependent
//! block sequence whenever `m >= w - 1`, because blocks two apart then share
//! no chain bits.

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::WindowStatistic;
use crate::numerics::{rational, Rational};

/// Widest bit span `block_moments` will enumerate.
pub const MAX_ENUM_BITS: usize = 30;

/// `X_j` = sum of `m` consecutive window payoffs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockGrouping {
    pub stat: WindowStatistic,
    pub m: usize,
}

impl BlockGrouping {
    /// `(K, remainder)`: whole blocks in `n_terms` windows and the dropped tail.
    pub fn blocks_for(&self, n_terms: usize) -> (usize, usize) {
        (n_terms / self.m, n_terms % self.m)
    }

    /// Window count covered by `k` blocks.
    pub fn terms_for(&self, k: usize) -> usize {
        k * self.m
    }
}

pub fn group_blocks(stat: &WindowStatistic, m: usize) -> Result<BlockGrouping> {
    if m == 0 || m + 1 < stat.width() {
        return Err(Error::param(format!(
            "block size m = {m} must be at least w - 1 = {} for 1-dependent blocks",
            stat.width() - 1
        )));
    }
    Ok(BlockGrouping { stat: stat.clone(), m })
}

/// `nu1 = E X_1`, `nu2 = E X_1 (X_1 - 1)`, `ex1x2 = E X_1 X_2`, and the
/// largest achievable block value `c0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub nu1: f64,
    pub nu2: f64,
    pub ex1x2: f64,
    pub c0: u32,
    pub n_blocks: usize,
}

impl MomentSet {
    /// The constant `C0 >= 1` used in `gamma` and the conditions.
    pub fn c0_bound(&self) -> f64 {
        self.c0.max(1) as f64
    }

    pub fn with_blocks(mut self, n_blocks: usize) -> Self {
        self.n_blocks = n_blocks;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalMoments {
    pub nu1: Rational,
    pub nu2: Rational,
    pub ex1x2: Rational,
    pub c0: u32,
}

/// Per-ones-count sums over every string of the `2m + w - 1` bits that two
/// adjacent blocks depend on.
struct BlockTable {
    len: usize,
    s1: Vec<u64>,
    s2: Vec<u64>,
    s12: Vec<u64>,
    c0: u32,
}

fn block_table(g: &BlockGrouping) -> Result<BlockTable> {
    let w = g.stat.width();
    let m = g.m;
    let len = 2 * m + w - 1;
    if len > MAX_ENUM_BITS {
        return Err(Error::param(format!("block enumeration needs {len} bits, limit is {MAX_ENUM_BITS}")));
    }
    let mask = (1usize << w) - 1;
    let mut t = BlockTable { len, s1: vec![0; len + 1], s2: vec![0; len + 1], s12: vec![0; len + 1], c0: 0 };
    for chain in 0usize..1 << len {
        let window = |j: usize| g.stat.payoff((chain >> (len - w - j)) & mask) as u64;
        let x1: u64 = (0..m).map(window).sum();
        let x2: u64 = (m..2 * m).map(window).sum();
        let ones = chain.count_ones() as usize;
        t.s1[ones] += x1;
        t.s2[ones] += x1 * x1.saturating_sub(1);
        t.s12[ones] += x1 * x2;
        t.c0 = t.c0.max(x1 as u32);
    }
    Ok(t)
}

pub fn block_moments(g: &BlockGrouping, p: f64) -> Result<MomentSet> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("p must lie in [0, 1], got {p}")));
    }
    let t = block_table(g)?;
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let weight = |k: usize| {
        // 0 * ln 0 terms must vanish
        let a = if k == 0 { 0.0 } else { k as f64 * lp };
        let b = if k == t.len { 0.0 } else { (t.len - k) as f64 * lq };
        (a + b).exp()
    };
    let mut ms = MomentSet { nu1: 0.0, nu2: 0.0, ex1x2: 0.0, c0: t.c0, n_blocks: 0 };
    for k in 0..=t.len {
        let wk = weight(k);
        ms.nu1 += wk * t.s1[k] as f64;
        ms.nu2 += wk * t.s2[k] as f64;
        ms.ex1x2 += wk * t.s12[k] as f64;
    }
    Ok(ms)
}

pub fn block_moments_rational(g: &BlockGrouping, p: &Rational) -> Result<RationalMoments> {
    let t = block_table(g)?;
    let q = Rational::from_integer(1.into()) - p;
    let mut out = RationalMoments { nu1: Rational::zero(), nu2: Rational::zero(), ex1x2: Rational::zero(), c0: t.c0 };
    for k in 0..=t.len {
        let wk = rational::pow(p, k) * rational::pow(&q, t.len - k);
        out.nu1 += &wk * Rational::from_integer(t.s1[k].into());
        out.nu2 += &wk * Rational::from_integer(t.s2[k].into());
        out.ex1x2 += &wk * Rational::from_integer(t.s12[k].into());
    }
    Ok(out)
}

/// `gamma = e^{1.5 C0} max(nu1^2, nu2, E X1 X2)`.
pub fn gamma_of(ms: &MomentSet) -> f64 {
    (1.5 * ms.c0_bound()).exp() * (ms.nu1 * ms.nu1).max(ms.nu2).max(ms.ex1x2)
}

/// `y = (x - n nu1) / (n nu1)`.
pub fn rel_dev_y(n: usize, nu1: f64, x: i64) -> Result<f64> {
    let mean = n as f64 * nu1;
    if mean <= 0.0 || !mean.is_finite() {
        return Err(Error::param(format!("relative deviation needs n*nu1 > 0, got {mean}")));
    }
    Ok((x as f64 - mean) / mean)
}

/// Thresholds for the regime conditions. `strict()` holds the published constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Bound on `e^{5 C0} nu1`.
    pub nu1_scaled: f64,
    /// Bound on `|y|`.
    pub y_abs: f64,
    /// `nu2` and `E X1 X2` must not exceed `nu1 e^{-1.5 C0} * moment_factor`.
    pub moment_factor: f64,
}

impl Thresholds {
    pub fn strict() -> Self {
        Thresholds { nu1_scaled: 0.002, y_abs: 0.1, moment_factor: 1.0 / 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum ConditionMode {
    Strict,
    Relaxed(Thresholds),
}

impl ConditionMode {
    pub fn thresholds(&self) -> Thresholds {
        match self {
            ConditionMode::Strict => Thresholds::strict(),
            ConditionMode::Relaxed(t) => *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub clause: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// `rhs - lhs`; non-negative exactly when the clause passes.
    pub margin: f64,
}

impl Clause {
    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Clause { clause: name.into(), lhs, rhs, pass: lhs <= rhs, margin: rhs - lhs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub mode: ConditionMode,
    pub y: f64,
    pub clauses: Vec<Clause>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.clause == name)
    }

    /// Conditions other than the `|y|` bound, which depend only on the moments.
    pub fn moments_pass(&self) -> bool {
        self.clauses.iter().filter(|c| c.clause != "abs_y").all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.clauses)?)
    }
}

/// Evaluates every clause; never fails (a degenerate `n nu1 = 0` gives `y = inf`).
pub fn check_conditions(ms: &MomentSet, n: usize, x: i64, mode: ConditionMode) -> ConditionReport {
    let th = mode.thresholds();
    let c0 = ms.c0_bound();
    let y = rel_dev_y(n, ms.nu1, x).unwrap_or(f64::INFINITY);
    let moment_rhs = ms.nu1 * (-1.5 * c0).exp() * th.moment_factor;
    let clauses = vec![
        Clause::le("x1_bounded", ms.c0 as f64, c0),
        Clause::le("exp5c0_nu1", (5.0 * c0).exp() * ms.nu1, th.nu1_scaled),
        Clause::le("abs_y", y.abs(), th.y_abs),
        Clause::le("nu2", ms.nu2, moment_rhs),
        Clause::le("ex1x2", ms.ex1x2, moment_rhs),
    ];
    ConditionReport { mode, y, clauses }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn n11_blocks_of_two() {
        let g = group_blocks(&WindowStatistic::n11_event(), 2).unwrap();
        let ms = block_moments(&g, 0.1).unwrap();
        assert!(close(ms.nu1, 0.18, 1e-14));
        assert_eq!(ms.nu2, 0.0);
        assert!(close(ms.ex1x2, 0.0243, 1e-13));
        assert_eq!(ms.c0, 1);
    }

    #[test]
    fn two_runs_identity_grouping() {
        let g = group_blocks(&WindowStatistic::two_runs(), 1).unwrap();
        let p: f64 = 0.37;
        let ms = block_moments(&g, p).unwrap();
        assert!(close(ms.nu1, p * p, 1e-14));
        assert_eq!(ms.nu2, 0.0);
        assert!(close(ms.ex1x2, p * p * p, 1e-14));
        let z = block_moments(&g, 0.0).unwrap();
        assert_eq!((z.nu1, z.nu2, z.ex1x2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn grouping_rules() {
        let s = WindowStatistic::nk1k2_event(2, 1).unwrap();
        let g = group_blocks(&s, 3).unwrap();
        assert_eq!(g.blocks_for(100), (33, 1));
        assert!(group_blocks(&s, 1).is_err());
        assert!(group_blocks(&WindowStatistic::two_runs(), 0).is_err());
    }

    #[test]
    fn gamma_values() {
        let ms = MomentSet { nu1: 0.18, nu2: 0.0, ex1x2: 0.0243, c0: 1, n_blocks: 0 };
        assert!(close(gamma_of(&ms), 1.5f64.exp() * 0.0324, 1e-15));
        let zero = MomentSet { nu1: 0.0, nu2: 0.0, ex1x2: 0.0, c0: 1, n_blocks: 0 };
        assert_eq!(gamma_of(&zero), 0.0);
        let eq = MomentSet { nu1: 0.3, nu2: 0.3, ex1x2: 0.3, c0: 2, n_blocks: 0 };
        assert!(close(gamma_of(&eq), 3f64.exp() * 0.3, 1e-15));
    }

    #[test]
    fn relative_deviation() {
        assert_eq!(rel_dev_y(100, 0.1, 10).unwrap(), 0.0);
        assert!(close(rel_dev_y(100, 0.1, 11).unwrap(), 0.1, 1e-14));
        assert!(rel_dev_y(100, 0.0, 1).is_err());
    }

    #[test]
    fn condition_clauses() {
        let nu1 = 1.3e-5;
        let ms = MomentSet { nu1, nu2: 0.0, ex1x2: nu1 * (-1.5f64).exp() / 20.0 * 0.5, c0: 1, n_blocks: 0 };
        let n = 1_000_000;
        let x = (1.05 * n as f64 * nu1).round() as i64;
        let r = check_conditions(&ms, n, x, ConditionMode::Strict);
        assert!(r.all_pass(), "{r:?}");
        let ms2 = MomentSet { nu1: 0.01, ..ms };
        let r2 = check_conditions(&ms2, n, 10_000, ConditionMode::Strict);
        let c = r2.clause("exp5c0_nu1").unwrap();
        assert!(!c.pass && close(c.lhs, 5f64.exp() * 0.01, 1e-14));
        let far = check_conditions(&ms, n, (1.2 * n as f64 * nu1).round() as i64, ConditionMode::Strict);
        assert!(!far.clause("abs_y").unwrap().pass);
        let loose = ConditionMode::Relaxed(Thresholds { nu1_scaled: 1.0, y_abs: 0.5, moment_factor: 1.0 });
        assert!(check_conditions(&ms, n, x, loose).all_pass());
        assert!(r.to_json().unwrap().contains("\"margin\""));
    }
}
