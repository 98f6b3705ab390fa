//! Sweep configuration in `key = value` form with `[section]` headers.
//!
//! ```text
//! [statistic]
//! name = two-runs          # two-runs | n11 | nk1k2:K1,K2
//! m = 1                    # block size for theorems 1-2
//!
//! [schedule]
//! n = 2000, 20000, 200000  # window counts
//! p_coef = 0.5             # p = p_coef * n^p_exp ...
//! p_exp = -0.25
//! # points = 2000:0.05, 20000:0.02   # ... or explicit n:p pairs
//!
//! [ratio]
//! theorem = 3
//! x_rule = sqrt_mean       # sqrt_mean | sd | absolute | zone | offsets
//! x_c = 2                  # multiplier for sqrt_mean and sd
//! # x_lo = 10, x_hi = 40   # for absolute
//! # x_offsets = 1, 2, 3    # for offsets
//! cap = auto               # auto | full | integer
//! method = auto            # auto | dp | matpow
//! mode = strict            # strict | relaxed
//! # relaxed_nu1_scaled, relaxed_y_abs, relaxed_moment_factor
//! zone_c = 1
//! zone_log_divisor = true
//!
//! [output]
//! dir = reports
//! format = csv             # csv | json
//! seed = 0
//! workers = 4
//! ```

use std::path::PathBuf;

use ini::{Ini, Properties};
use serde::Serialize;

use super::report::XRule;
use super::run::{CapRule, ExactMethod};
use crate::error::{Error, Result};
use crate::exact::WindowStatistic;
use crate::ldcore::ZoneProxy;
use crate::moments::{ConditionMode, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::config(format!("format must be csv or json, got '{other}'"))),
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub theorem: u8,
    pub stat: WindowStatistic,
    pub m: usize,
    /// `(n, p)` points in run order.
    pub schedule: Vec<(usize, f64)>,
    pub x_rule: XRule,
    pub cap: CapRule,
    pub method: ExactMethod,
    pub mode: ConditionMode,
    pub zone: ZoneProxy,
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub seed: u64,
    pub workers: usize,
}

fn get<'a>(p: Option<&'a Properties>, key: &str) -> Option<&'a str> {
    p.and_then(|p| p.get(key)).map(str::trim)
}

fn num<T: std::str::FromStr>(p: Option<&Properties>, key: &str, default: Option<T>) -> Result<T> {
    match get(p, key) {
        Some(v) => v.parse().map_err(|_| Error::config(format!("'{key}' has malformed value '{v}'"))),
        None => default.ok_or_else(|| Error::config(format!("missing key '{key}'"))),
    }
}

fn list<T: std::str::FromStr>(v: &str, key: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::config(format!("'{key}' has malformed entry '{s}'"))))
        .collect()
}

fn parse_bool(v: &str, key: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!("'{key}' must be true or false, got '{v}'"))),
    }
}

impl SweepConfig {
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::config(e.to_string()))?;
        let stat_s = ini.section(Some("statistic"));
        let sched = ini.section(Some("schedule"));
        let ratio = ini.section(Some("ratio"));
        let out = ini.section(Some("output"));

        let theorem: u8 = num(ratio, "theorem", None)?;
        if !(1..=4).contains(&theorem) {
            return Err(Error::config(format!("theorem must be 1-4, got {theorem}")));
        }
        let default_stat = if theorem == 3 { "two-runs" } else { "n11" };
        let stat = WindowStatistic::from_name(get(stat_s, "name").unwrap_or(default_stat))?;
        let m = num(stat_s, "m", Some(if theorem <= 2 { 2 } else { 1 }))?;

        let schedule = match (get(sched, "points"), get(sched, "n")) {
            (Some(points), None) => points
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|pt| {
                    let (n, p) = pt.split_once(':').ok_or_else(|| Error::config(format!("point '{pt}' is not n:p")))?;
                    let n = n.trim().parse().map_err(|_| Error::config(format!("bad n in '{pt}'")))?;
                    let p = p.trim().parse().map_err(|_| Error::config(format!("bad p in '{pt}'")))?;
                    Ok((n, p))
                })
                .collect::<Result<Vec<_>>>()?,
            (None, Some(ns)) => {
                let coef: f64 = num(sched, "p_coef", Some(1.0))?;
                let expo: f64 = num(sched, "p_exp", None)?;
                list::<usize>(ns, "n")?.into_iter().map(|n| (n, coef * (n as f64).powf(expo))).collect()
            }
            (Some(_), Some(_)) => return Err(Error::config("give either 'points' or 'n', not both")),
            (None, None) => return Err(Error::config("schedule needs 'points' or 'n'")),
        };
        if schedule.is_empty() {
            return Err(Error::config("schedule is empty"));
        }

        let x_c: f64 = num(ratio, "x_c", Some(2.0))?;
        let x_rule = match get(ratio, "x_rule").unwrap_or("sqrt_mean") {
            "sqrt_mean" => XRule::SqrtMean { c: x_c },
            "sd" => XRule::Sd { c: x_c },
            "zone" => XRule::Zone,
            "absolute" => {
                let (lo, hi): (i64, i64) = (num(ratio, "x_lo", None)?, num(ratio, "x_hi", None)?);
                if lo > hi {
                    return Err(Error::config(format!("x_lo = {lo} exceeds x_hi = {hi}")));
                }
                XRule::Absolute { lo, hi }
            }
            "offsets" => {
                let cs = list(get(ratio, "x_offsets").ok_or_else(|| Error::config("offsets rule needs 'x_offsets'"))?, "x_offsets")?;
                if cs.is_empty() {
                    return Err(Error::config("x_offsets is empty"));
                }
                XRule::Offsets { cs }
            }
            other => return Err(Error::config(format!("unknown x_rule '{other}'"))),
        };

        let mode = match get(ratio, "mode").unwrap_or("strict") {
            "strict" => ConditionMode::Strict,
            "relaxed" => {
                let s = Thresholds::strict();
                ConditionMode::Relaxed(Thresholds {
                    nu1_scaled: num(ratio, "relaxed_nu1_scaled", Some(s.nu1_scaled))?,
                    y_abs: num(ratio, "relaxed_y_abs", Some(s.y_abs))?,
                    moment_factor: num(ratio, "relaxed_moment_factor", Some(s.moment_factor))?,
                })
            }
            other => return Err(Error::config(format!("mode must be strict or relaxed, got '{other}'"))),
        };
        let zone = ZoneProxy {
            c: num(ratio, "zone_c", Some(1.0))?,
            log_divisor: get(ratio, "zone_log_divisor").map_or(Ok(true), |v| parse_bool(v, "zone_log_divisor"))?,
        };

        let workers = num(out, "workers", Some(1usize))?;
        if workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        Ok(SweepConfig {
            theorem,
            stat,
            m,
            schedule,
            x_rule,
            cap: CapRule::parse(get(ratio, "cap").unwrap_or("auto"))?,
            method: ExactMethod::parse(get(ratio, "method").unwrap_or("auto"))?,
            mode,
            zone,
            out_dir: get(out, "dir").map(PathBuf::from),
            format: OutputFormat::parse(get(out, "format").unwrap_or("csv"))?,
            seed: num(out, "seed", Some(0))?,
            workers,
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_ini_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_schedule() {
        let c = SweepConfig::from_ini_str(
            "[schedule]\nn = 2000, 20000\np_coef = 0.5\np_exp = -0.25\n[ratio]\ntheorem = 3\n[output]\nworkers = 2\n",
        )
        .unwrap();
        assert_eq!(c.stat.name(), "two-runs");
        assert_eq!(c.schedule.len(), 2);
        assert!((c.schedule[0].1 - 0.5 * 2000f64.powf(-0.25)).abs() < 1e-16);
        assert_eq!(c.x_rule, XRule::SqrtMean { c: 2.0 });
        assert_eq!(c.workers, 2);
    }

    #[test]
    fn explicit_points_and_offsets() {
        let c = SweepConfig::from_ini_str(
            "[statistic]\nname = n11\nm = 2\n[schedule]\npoints = 300000:6.7e-5\n[ratio]\ntheorem = 2\nx_rule = offsets\nx_offsets = 1,2,3\nmode = relaxed\nrelaxed_y_abs = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.schedule, vec![(300_000, 6.7e-5)]);
        assert_eq!(c.x_rule, XRule::Offsets { cs: vec![1.0, 2.0, 3.0] });
        assert!(matches!(c.mode, ConditionMode::Relaxed(t) if t.y_abs == 0.5));
    }

    #[test]
    fn malformed() {
        assert!(SweepConfig::from_ini_str("[ratio]\ntheorem = 3\n").is_err());
        assert!(SweepConfig::from_ini_str("[schedule]\npoints = 10\n[ratio]\ntheorem = 3\n").is_err());
        assert!(SweepConfig::from_ini_str("[schedule]\npoints = 10:0.1\n[ratio]\ntheorem = 7\n").is_err());
        assert!(SweepConfig::from_ini_str("[schedule]\npoints = 10:0.1\n[ratio]\ntheorem = 3\nx_rule = absolute\nx_lo = 5\nx_hi = 1\n").is_err());
    }
}
