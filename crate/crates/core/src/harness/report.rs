use std::io::Write;

use serde::Serialize;

use super::run::{compute_exact, CapRule, ExactMethod};
use crate::approx::{bi_params, lambda_star, n11_mean_var, nb_params, two_runs_mean_var, ApproxFamily};
use crate::error::{Error, Result};
use crate::exact::{pmf_moments, StatisticKind, WindowStatistic, CSV_SCHEMA_LINE};
use crate::ldcore::{predict_main_term, solve_saddle, PredictionInputs, SaddleProblem, ZoneProxy};
use crate::moments::{block_moments, check_conditions, gamma_of, group_blocks, ConditionMode, MomentSet};

/// Tail probabilities below this are outside the log-domain range the reports rely on.
pub const MIN_TAIL: f64 = 1e-280;

/// How the x values of a report are chosen around the mean `mu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum XRule {
    Absolute { lo: i64, hi: i64 },
    /// `|x - mu| <= c sqrt(mu)`.
    SqrtMean { c: f64 },
    /// `|x - mu| <= c sd`.
    Sd { c: f64 },
    /// The theorem's zone proxy.
    Zone,
    /// `x = ceil(mu + c sqrt(mu))` for each listed `c`.
    Offsets { cs: Vec<f64> },
}

/// Everything that determines one ratio report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRequest {
    pub theorem: u8,
    pub stat: WindowStatistic,
    pub m: usize,
    pub n_terms: usize,
    pub p: f64,
    pub x_rule: XRule,
    pub cap: CapRule,
    pub method: ExactMethod,
    pub mode: ConditionMode,
    pub zone: ZoneProxy,
}

impl RatioRequest {
    /// Defaults: builtin statistic for the theorem, `m = 1` (2 for theorems 1-2),
    /// `mu +- 2 sqrt(mu)`, automatic cap and method, strict conditions.
    pub fn new(theorem: u8, stat: WindowStatistic, n_terms: usize, p: f64) -> Self {
        RatioRequest {
            theorem,
            stat,
            m: if theorem <= 2 { 2 } else { 1 },
            n_terms,
            p,
            x_rule: XRule::SqrtMean { c: 2.0 },
            cap: CapRule::Auto,
            method: ExactMethod::Auto,
            mode: ConditionMode::Strict,
            zone: ZoneProxy::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioHeader {
    pub request: RatioRequest,
    pub n_blocks: usize,
    pub method_used: ExactMethod,
    pub cap_used: usize,
    pub truncated: bool,
    pub truncation_bound: f64,
    pub family: ApproxFamily,
    pub moments: Option<MomentSet>,
    pub gamma: Option<f64>,
    pub mean: f64,
    pub sd: f64,
    pub zone_half_width: f64,
    /// `max |ratio / main - 1| / error_scale` over rows whose conditions pass.
    pub k_fit: Option<f64>,
    /// Why no rows were produced, if none were.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioRow {
    pub x: i64,
    pub y: f64,
    pub log_exact: f64,
    pub log_approx: f64,
    pub ratio: f64,
    pub log_main_term: f64,
    pub ratio_over_main_term: f64,
    /// `h`, `h`, `w` or `h~` for theorems 1-4.
    pub saddle: f64,
    pub approx_mean: f64,
    pub zone_ok: bool,
    pub conditions_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub header: RatioHeader,
    pub rows: Vec<RatioRow>,
}

impl RatioReport {
    /// `max |ratio - 1|` for theorems 3-4, `max |ratio / main - 1|` for 1-2.
    pub fn max_deviation(&self) -> Option<f64> {
        let key = |r: &RatioRow| {
            if self.header.request.theorem <= 2 {
                r.ratio_over_main_term
            } else {
                r.ratio
            }
        };
        self.rows.iter().map(|r| (key(r) - 1.0).abs()).reduce(f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Schema line, the header as one JSON comment line, then one row per x.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_SCHEMA_LINE}")?;
        writeln!(out, "# header={}", serde_json::to_string(&self.header)?)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "x",
            "y",
            "log_exact",
            "log_approx",
            "ratio",
            "log_main_term",
            "ratio_over_main_term",
            "saddle",
            "approx_mean",
            "zone_ok",
            "conditions_ok",
        ])?;
        let f = |v: f64| format!("{v:.16e}");
        for r in &self.rows {
            w.write_record([
                r.x.to_string(),
                f(r.y),
                f(r.log_exact),
                f(r.log_approx),
                f(r.ratio),
                f(r.log_main_term),
                f(r.ratio_over_main_term),
                f(r.saddle),
                f(r.approx_mean),
                r.zone_ok.to_string(),
                r.conditions_ok.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::config(e.to_string()))
    }
}

fn x_range(rule: &XRule, mean: f64, sd: f64, zone: f64) -> Vec<i64> {
    let band = |half: f64| ((mean - half).ceil() as i64).max(0)..=((mean + half).floor() as i64);
    match rule {
        XRule::Absolute { lo, hi } => (*lo.max(&0)..=*hi).collect(),
        XRule::SqrtMean { c } => band(c * mean.sqrt()).collect(),
        XRule::Sd { c } => band(c * sd).collect(),
        XRule::Zone => band(zone).collect(),
        XRule::Offsets { cs } => {
            let mut xs: Vec<i64> = cs.iter().map(|c| (mean + c * mean.sqrt()).ceil() as i64).collect();
            xs.sort_unstable();
            xs.dedup();
            xs
        }
    }
}

fn require_kind(theorem: u8, stat: &WindowStatistic, want: StatisticKind) -> Result<()> {
    if stat.kind() != want {
        return Err(Error::param(format!(
            "theorem {theorem} is stated for the {} statistic, got '{}'",
            match want {
                StatisticKind::TwoRuns => "two-runs",
                _ => "n11",
            },
            stat.name()
        )));
    }
    Ok(())
}

fn ln_ratio(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        f64::NAN
    } else {
        a - b
    }
}

/// Exact probabilities against the theorem's approximation over the requested x values.
///
/// 1: `P(S = x) / Poisson(K nu1){x}` for `K = n/m` grouped blocks.
/// 2: `P(S >= x) / P(Z* >= x)`, `Z* ~ Poisson(K lambda*(x))` recomputed per x.
/// 3: 2-runs `P(S = x) / NB(r, qbar){x}`.
/// 4: n11 `P(S = x) / BI(N, ptilde){x}`.
pub fn ratio_report(req: &RatioRequest) -> Result<RatioReport> {
    let t = req.theorem;
    if !(1..=4).contains(&t) {
        return Err(Error::param(format!("theorem must be 1, 2, 3 or 4, got {t}")));
    }
    let exact = compute_exact(&req.stat, req.n_terms, req.p, req.cap, req.method)?;
    let pmf = &exact.pmf;

    let (n_blocks, moments, family, mean, sd) = match t {
        1 | 2 => {
            let g = group_blocks(&req.stat, req.m)?;
            let (k, rem) = g.blocks_for(req.n_terms);
            if rem != 0 || k == 0 {
                return Err(Error::param(format!(
                    "n = {} windows is not a positive multiple of the block size m = {}",
                    req.n_terms, req.m
                )));
            }
            let ms = block_moments(&g, req.p)?.with_blocks(k);
            let mean = k as f64 * ms.nu1;
            let sd = pmf_moments(pmf).map(|(_, v)| v.sqrt()).unwrap_or(mean.sqrt());
            (k, Some(ms), ApproxFamily::poisson(mean)?, mean, sd)
        }
        3 => {
            require_kind(t, &req.stat, StatisticKind::TwoRuns)?;
            let (m, v) = two_runs_mean_var(req.n_terms, req.p);
            (req.n_terms, None, nb_params(req.n_terms, req.p)?.family()?, m, v.sqrt())
        }
        _ => {
            require_kind(t, &req.stat, StatisticKind::N11Event)?;
            let (m, v) = n11_mean_var(req.n_terms, req.p);
            (req.n_terms, None, bi_params(req.n_terms, req.p)?.family()?, m, v.sqrt())
        }
    };

    let inputs_at = |x: i64| match moments {
        Some(ms) => PredictionInputs::Moments { moments: ms, x },
        None => PredictionInputs::Chain { n: req.n_terms, p: req.p, x },
    };
    let center = predict_main_term(t, inputs_at(mean.round() as i64), req.zone)?;
    let xs = x_range(&req.x_rule, mean, sd, center.zone_half_width);

    let mut rows = Vec::with_capacity(xs.len());
    let mut skipped_tail = 0usize;
    for x in xs {
        let pred = predict_main_term(t, inputs_at(x), req.zone)?;
        let (log_exact, log_approx, approx_mean, saddle) = match (t, moments) {
            (1, Some(ms)) => {
                let h = solve_saddle(SaddleProblem::Binomial { n: n_blocks as f64, nu1: ms.nu1, x: x as f64 })
                    .map_or(f64::NAN, |s| s.value);
                (pmf.mass(x).ln(), family.ln_pmf(x), mean, h)
            }
            (2, Some(ms)) => {
                let tail = pmf.tail(x);
                if tail.to_linear() < MIN_TAIL {
                    skipped_tail += 1;
                    continue;
                }
                let ls = lambda_star(ms.nu1, pred.y)?;
                let z_star = ApproxFamily::poisson(n_blocks as f64 * ls)?;
                let h = solve_saddle(SaddleProblem::Binomial { n: n_blocks as f64, nu1: ms.nu1, x: x as f64 })
                    .map_or(f64::NAN, |s| s.value);
                (tail.ln(), z_star.tail(x).ln(), n_blocks as f64 * ls, h)
            }
            (3, _) => {
                let w = match family {
                    ApproxFamily::NegBinomial { r, qbar } => {
                        solve_saddle(SaddleProblem::NegBinomial { r, qbar, x: x as f64 }).map_or(f64::NAN, |s| s.value)
                    }
                    _ => f64::NAN,
                };
                (pmf.mass(x).ln(), family.ln_pmf(x), mean, w)
            }
            _ => {
                let h = match family {
                    ApproxFamily::Binomial { n, ptilde } => {
                        solve_saddle(SaddleProblem::BinomialTilde { n_trials: n, ptilde, x: x as f64 })
                            .map_or(f64::NAN, |s| s.value)
                    }
                    _ => f64::NAN,
                };
                (pmf.mass(x).ln(), family.ln_pmf(x), mean, h)
            }
        };
        let lr = ln_ratio(log_exact, log_approx);
        let conditions_ok = match moments {
            Some(ms) => check_conditions(&ms, n_blocks, x, req.mode).all_pass(),
            None => true,
        };
        rows.push(RatioRow {
            x,
            y: pred.y,
            log_exact,
            log_approx,
            ratio: lr.exp(),
            log_main_term: pred.log_main_term,
            ratio_over_main_term: (lr - pred.log_main_term).exp(),
            saddle,
            approx_mean,
            zone_ok: pred.zone_ok,
            conditions_ok,
        });
    }

    let k_fit = match moments {
        Some(ms) => {
            let gamma = gamma_of(&ms);
            let k = n_blocks as f64;
            rows.iter()
                .filter(|r| r.conditions_ok)
                .map(|r| {
                    let mut scale = gamma * (1.0 / ms.nu1 + k * r.y * r.y);
                    if t == 2 {
                        scale *= mean.sqrt();
                    }
                    (r.ratio_over_main_term - 1.0).abs() / scale
                })
                .reduce(f64::max)
        }
        None => None,
    };
    let skipped = if rows.is_empty() {
        Some(if skipped_tail > 0 {
            format!("all {skipped_tail} x values have exact tail below {MIN_TAIL:e}")
        } else {
            "the x rule selects no values".to_string()
        })
    } else {
        None
    };

    Ok(RatioReport {
        header: RatioHeader {
            request: req.clone(),
            n_blocks,
            method_used: exact.method,
            cap_used: exact.cap,
            truncated: pmf.truncated,
            truncation_bound: pmf.truncation_mass_bound.to_linear(),
            family,
            moments,
            gamma: moments.as_ref().map(gamma_of),
            mean,
            sd,
            zone_half_width: center.zone_half_width,
            k_fit,
            skipped,
        },
        rows,
    })
}
