use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which built-in family a statistic came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatisticKind {
    /// `f(a, b) = a * b`: adjacent success pairs.
    TwoRuns,
    /// `f(a, b) = a * (1 - b)`: a success followed by a failure.
    N11Event,
    /// `k1` failures followed by `k2` successes.
    Nk1k2Event { k1: usize, k2: usize },
    Custom,
}

/// A sliding-window payoff over a Bernoulli chain.
///
/// Windows are encoded as integers with the oldest bit most significant, so
/// for width 2 the window `(a, b)` is `2a + b`. The statistic over a chain is
/// `sum_j f(eta_j, ..., eta_{j+w-1})` for `j = 1..=n_terms`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowStatistic {
    name: String,
    width: usize,
    payoff: Vec<u32>,
    kind: StatisticKind,
}

/// Widest window accepted; the transfer matrix has `2^(w-1)` states.
pub const MAX_WIDTH: usize = 12;

impl WindowStatistic {
    pub fn two_runs() -> Self {
        WindowStatistic { name: "two-runs".into(), width: 2, payoff: vec![0, 0, 0, 1], kind: StatisticKind::TwoRuns }
    }

    pub fn n11_event() -> Self {
        WindowStatistic { name: "n11".into(), width: 2, payoff: vec![0, 0, 1, 0], kind: StatisticKind::N11Event }
    }

    /// Indicator of `k1` failures followed by `k2` successes (width `k1 + k2`).
    pub fn nk1k2_event(k1: usize, k2: usize) -> Result<Self> {
        if k1 == 0 || k2 == 0 {
            return Err(Error::param(format!("N(k1,k2) needs k1, k2 >= 1, got ({k1}, {k2})")));
        }
        let width = k1 + k2;
        if width > MAX_WIDTH {
            return Err(Error::param(format!("window width {width} exceeds {MAX_WIDTH}")));
        }
        let mut payoff = vec![0u32; 1 << width];
        payoff[(1 << k2) - 1] = 1;
        Ok(WindowStatistic {
            name: format!("nk1k2({k1},{k2})"),
            width,
            payoff,
            kind: StatisticKind::Nk1k2Event { k1, k2 },
        })
    }

    /// A statistic from an explicit payoff table of length `2^width`.
    pub fn custom(name: impl Into<String>, width: usize, payoff: Vec<u32>) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::param(format!("window width must be in 1..={MAX_WIDTH}, got {width}")));
        }
        if payoff.len() != 1 << width {
            return Err(Error::param(format!("payoff table needs {} entries, got {}", 1 << width, payoff.len())));
        }
        Ok(WindowStatistic { name: name.into(), width, payoff, kind: StatisticKind::Custom })
    }

    /// Parses the CLI spelling: `two-runs`, `n11`, `nk1k2:K1,K2`.
    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "two-runs" | "2-runs" | "two_runs" => Ok(Self::two_runs()),
            "n11" | "n11-event" | "n11_event" => Ok(Self::n11_event()),
            other => {
                let args = other
                    .strip_prefix("nk1k2:")
                    .or_else(|| other.strip_prefix("nk1k2="))
                    .ok_or_else(|| Error::param(format!("unknown statistic {other:?}")))?;
                let (a, b) = args
                    .split_once(',')
                    .ok_or_else(|| Error::param(format!("expected nk1k2:K1,K2, got {other:?}")))?;
                let k1 = a.trim().parse().map_err(|_| Error::param(format!("bad k1 in {other:?}")))?;
                let k2 = b.trim().parse().map_err(|_| Error::param(format!("bad k2 in {other:?}")))?;
                Self::nk1k2_event(k1, k2)
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    /// Payoff of the window encoded as `window` (oldest bit most significant).
    #[inline]
    pub fn payoff(&self, window: usize) -> u32 {
        self.payoff[window]
    }

    /// Largest single-window payoff.
    pub fn max_payoff(&self) -> u32 {
        self.payoff.iter().copied().max().unwrap_or(0)
    }

    /// Number of transfer-matrix states, `2^(w-1)`.
    pub fn n_states(&self) -> usize {
        1 << (self.width - 1)
    }

    /// Evaluates the statistic directly on a chain of bits.
    pub fn evaluate(&self, bits: &[u8]) -> u64 {
        if bits.len() < self.width {
            return 0;
        }
        let mask = (1usize << self.width) - 1;
        let mut window = 0usize;
        let mut total = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            window = ((window << 1) | b as usize) & mask;
            if i + 1 >= self.width {
                total += self.payoff[window] as u64;
            }
        }
        total
    }
}

/// `n_terms` windows over an iid Bernoulli(`p`) chain of length `n_terms + w - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliChainSpec {
    pub n_terms: usize,
    pub p: f64,
}

impl BernoulliChainSpec {
    pub fn new(n_terms: usize, p: f64) -> Result<Self> {
        if n_terms == 0 {
            return Err(Error::param("n_terms must be positive"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(BernoulliChainSpec { n_terms, p })
    }

    pub fn chain_length(&self, stat: &WindowStatistic) -> usize {
        self.n_terms + stat.width() - 1
    }
}
