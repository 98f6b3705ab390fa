use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{OutputFormat, SweepConfig};
use super::report::{ratio_report, RatioReport, RatioRequest};
use crate::error::{Error, Result};
use crate::exact::CSV_SCHEMA_LINE;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointStatus {
    Ok,
    Skipped,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub index: usize,
    pub n: usize,
    pub p: f64,
    pub status: PointStatus,
    pub reason: Option<String>,
    pub rows: usize,
    pub max_deviation: Option<f64>,
    pub k_fit: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub theorem: u8,
    pub seed: u64,
    pub points: Vec<PointSummary>,
    /// Max deviation strictly decreasing over the points that produced rows.
    pub strictly_decreasing: bool,
}

impl SweepSummary {
    pub fn any_error(&self) -> bool {
        self.points.iter().any(|p| matches!(p.status, PointStatus::Error))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_SCHEMA_LINE}")?;
        writeln!(out, "# theorem={} seed={} strictly_decreasing={}", self.theorem, self.seed, self.strictly_decreasing)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "n", "p", "status", "rows", "max_deviation", "k_fit", "reason"])?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.16e}"));
        for p in &self.points {
            w.write_record([
                p.index.to_string(),
                p.n.to_string(),
                format!("{:.16e}", p.p),
                serde_json::to_value(&p.status)?.as_str().unwrap_or_default().to_string(),
                p.rows.to_string(),
                opt(p.max_deviation),
                opt(p.k_fit),
                p.reason.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct SweepOutcome {
    pub summary: SweepSummary,
    pub reports: Vec<Option<RatioReport>>,
}

fn request_for(cfg: &SweepConfig, n: usize, p: f64) -> RatioRequest {
    RatioRequest {
        theorem: cfg.theorem,
        stat: cfg.stat.clone(),
        m: cfg.m,
        n_terms: n,
        p,
        x_rule: cfg.x_rule.clone(),
        cap: cfg.cap,
        method: cfg.method,
        mode: cfg.mode,
        zone: cfg.zone,
    }
}

/// Runs every schedule point on `cfg.workers` threads; results are merged in
/// schedule order, so the outcome does not depend on the worker count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    let results: Vec<Result<RatioReport>> = pool.install(|| {
        cfg.schedule
            .par_iter()
            .map(|&(n, p)| ratio_report(&request_for(cfg, n, p)))
            .collect()
    });

    let mut points = Vec::with_capacity(results.len());
    let mut reports = Vec::with_capacity(results.len());
    for (index, (res, &(n, p))) in results.into_iter().zip(&cfg.schedule).enumerate() {
        let mut s = PointSummary { index, n, p, status: PointStatus::Ok, reason: None, rows: 0, max_deviation: None, k_fit: None };
        match res {
            Ok(rep) => {
                s.rows = rep.rows.len();
                s.max_deviation = rep.max_deviation();
                s.k_fit = rep.header.k_fit;
                if let Some(why) = &rep.header.skipped {
                    s.status = PointStatus::Skipped;
                    s.reason = Some(why.clone());
                }
                reports.push(Some(rep));
            }
            Err(e) => {
                s.status = PointStatus::Error;
                s.reason = Some(e.to_string());
                reports.push(None);
            }
        }
        points.push(s);
    }
    let devs: Vec<f64> = points.iter().filter_map(|p| p.max_deviation).collect();
    let strictly_decreasing = devs.len() >= 2 && devs.windows(2).all(|w| w[1] < w[0]);
    Ok(SweepOutcome {
        summary: SweepSummary { theorem: cfg.theorem, seed: cfg.seed, points, strictly_decreasing },
        reports,
    })
}

/// Writes `point_NNN.{csv,json}` per report and `summary.{csv,json}` into `dir`.
pub fn write_sweep(outcome: &SweepOutcome, dir: &Path, format: OutputFormat) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, rep) in outcome.reports.iter().enumerate() {
        if let Some(rep) = rep {
            let path = dir.join(format!("point_{i:03}.{}", format.extension()));
            match format {
                OutputFormat::Csv => rep.write_csv(fs::File::create(path)?)?,
                OutputFormat::Json => fs::write(path, rep.to_json()? + "\n")?,
            }
        }
    }
    let path = dir.join(format!("summary.{}", format.extension()));
    match format {
        OutputFormat::Csv => outcome.summary.write_csv(fs::File::create(path)?)?,
        OutputFormat::Json => fs::write(path, serde_json::to_string(&outcome.summary)? + "\n")?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_count_does_not_change_output() {
        let text = "[schedule]\nn = 2000, 20000\np_coef = 0.5\np_exp = -0.25\n[ratio]\ntheorem = 3\n";
        let mut cfg = SweepConfig::from_ini_str(text).unwrap();
        let one = run_sweep(&cfg).unwrap();
        cfg.workers = 3;
        let three = run_sweep(&cfg).unwrap();
        let csv = |o: &SweepOutcome| {
            let mut b = Vec::new();
            o.summary.write_csv(&mut b).unwrap();
            b
        };
        assert_eq!(csv(&one), csv(&three));
        assert!(one.summary.strictly_decreasing);
    }

    #[test]
    fn empty_zone_is_skipped_and_errors_recorded() {
        let text = "[schedule]\npoints = 2000:0.05, 7:0.9\n[ratio]\ntheorem = 3\nx_rule = absolute\nx_lo = 5000\nx_hi = 5001\n";
        let cfg = SweepConfig::from_ini_str(text).unwrap();
        let out = run_sweep(&cfg).unwrap();
        // the second point fails parameter selection
        assert!(matches!(out.summary.points[1].status, PointStatus::Error));
        assert!(out.summary.any_error());
        // mean 2000 * 0.051^2 = 5.202; a band of +-0.02 holds no integer
        let text = "[schedule]\npoints = 2000:0.051\n[ratio]\ntheorem = 3\nx_rule = sqrt_mean\nx_c = 0.01\n";
        let out = run_sweep(&SweepConfig::from_ini_str(text).unwrap()).unwrap();
        let p = &out.summary.points[0];
        assert!(matches!(p.status, PointStatus::Skipped));
        assert!(p.reason.as_deref().unwrap().contains("no values"));
    }
}
