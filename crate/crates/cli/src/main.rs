use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mdep_core::approx::{bi_params, nb_params, ApproxFamily};
use mdep_core::error::{Error, Result};
use mdep_core::exact::{pmf_moments, pmf_to_csv, pmf_to_json, LatticePMF, WindowStatistic, CSV_SCHEMA_LINE};
use mdep_core::harness::{
    compute_exact, ratio_report, run_sweep, verify_lemmas, write_sweep, CapRule, ExactMethod, Grid, OutputFormat,
    RatioRequest, SweepConfig, VerifyOptions, XRule,
};
use mdep_core::ldcore::ZoneProxy;
use mdep_core::moments::{block_moments, check_conditions, group_blocks, ConditionMode, Thresholds};
use mdep_core::numerics::LogReal;

/// Exact distributions of windowed Bernoulli-chain statistics and their
/// Poisson, negative binomial and binomial large-deviation approximations.
#[derive(Parser)]
#[command(name = "mdep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact distribution of a window statistic.
    Exact(ExactArgs),
    /// Masses of an approximating family fitted to a statistic.
    Approx(ApproxArgs),
    /// Exact-over-approximate ratios at one parameter point.
    Ratio(RatioArgs),
    /// Ratio reports over a schedule read from a config file.
    Sweep(SweepArgs),
    /// Numerical checks of the supporting identities and inequalities.
    VerifyLemmas(VerifyArgs),
    /// Evaluates the regularity conditions at one point.
    CheckConditions(ConditionArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Output file (directory for sweep). Defaults to stdout, or a file in $MDEP_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Default output directory when --out is absent.
    #[arg(long, env = "MDEP_OUT_DIR", hide_env_values = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

impl Output {
    fn emit(&self, default_name: &str, body: &[u8]) -> Result<()> {
        let ext = OutputFormat::from(self.format).extension();
        let path = match (&self.out, &self.out_dir) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(d)) => Some(d.join(format!("{default_name}.{ext}"))),
            (None, None) => None,
        };
        match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)?;
                }
                fs::write(&p, body)?;
                eprintln!("wrote {}", p.display());
            }
            None => io::stdout().write_all(body)?,
        }
        Ok(())
    }
}

#[derive(Args)]
struct ChainArgs {
    /// two-runs | n11 | nk1k2:K1,K2
    #[arg(long)]
    stat: Option<String>,
    /// Number of windows.
    #[arg(long)]
    n: usize,
    /// Success probability of the chain.
    #[arg(long)]
    p: f64,
}

impl ChainArgs {
    fn statistic(&self, default: &str) -> Result<WindowStatistic> {
        WindowStatistic::from_name(self.stat.as_deref().unwrap_or(default))
    }
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// auto | full | integer
    #[arg(long, default_value = "auto")]
    cap: String,
    /// auto | dp | matpow
    #[arg(long, default_value = "auto")]
    method: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Poisson,
    Nb,
    Bi,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// poisson: Poisson(K nu1) over blocks of size m; nb: two-runs fit; bi: n11 fit.
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Largest value listed; defaults to mean + 12 sd + 30.
    #[arg(long)]
    cap: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ModeArgs {
    /// strict | relaxed
    #[arg(long, default_value = "strict")]
    mode: String,
    #[arg(long)]
    nu1_scaled: Option<f64>,
    #[arg(long)]
    y_abs: Option<f64>,
    #[arg(long)]
    moment_factor: Option<f64>,
}

impl ModeArgs {
    fn mode(&self) -> Result<ConditionMode> {
        let s = Thresholds::strict();
        match self.mode.as_str() {
            "strict" => Ok(ConditionMode::Strict),
            "relaxed" => Ok(ConditionMode::Relaxed(Thresholds {
                nu1_scaled: self.nu1_scaled.unwrap_or(s.nu1_scaled),
                y_abs: self.y_abs.unwrap_or(s.y_abs),
                moment_factor: self.moment_factor.unwrap_or(s.moment_factor),
            })),
            other => Err(Error::Parameter(format!("mode must be strict or relaxed, got '{other}'"))),
        }
    }
}

#[derive(Args)]
struct RatioArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    theorem: u8,
    #[command(flatten)]
    chain: ChainArgs,
    /// Block size (theorems 1-2).
    #[arg(long)]
    m: Option<usize>,
    /// A single value `X` or a range `LO:HI`.
    #[arg(long, conflicts_with_all = ["zone", "sd"])]
    x: Option<String>,
    /// Use the theorem's equivalence-zone proxy as the x range.
    #[arg(long)]
    zone: bool,
    /// Use mean +- C sd as the x range.
    #[arg(long, value_name = "C")]
    sd: Option<f64>,
    /// Multiplier of the zone proxy.
    #[arg(long, default_value_t = 1.0)]
    zone_c: f64,
    #[arg(long, default_value = "auto")]
    cap: String,
    #[arg(long, default_value = "auto")]
    method: String,
    #[command(flatten)]
    mode: ModeArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    /// Config file (see the README for the grammar).
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "MDEP_OUT_DIR", hide_env_values = true)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run a single suite.
    #[arg(long)]
    only: Option<String>,
    /// start:stop:step grid for the Gamma bounds.
    #[arg(long, default_value = "1:1000:0.5")]
    grid: String,
    /// Print the report as JSON instead of one line per suite.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ConditionArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long)]
    x: i64,
    #[command(flatten)]
    mode: ModeArgs,
}

fn csv_with_header(header: serde_json::Value, pmf: &LatticePMF) -> Result<Vec<u8>> {
    let mut body = Vec::new();
    pmf_to_csv(pmf, &mut body)?;
    let header = format!("# header={header}\n");
    let at = CSV_SCHEMA_LINE.len() + 1;
    body.splice(at..at, header.into_bytes());
    Ok(body)
}

fn cmd_exact(a: &ExactArgs) -> Result<i32> {
    let stat = a.chain.statistic("two-runs")?;
    let run = compute_exact(&stat, a.chain.n, a.chain.p, CapRule::parse(&a.cap)?, ExactMethod::parse(&a.method)?)?;
    let moments = pmf_moments(&run.pmf).ok();
    let header = json!({
        "stat": stat.name(),
        "n": a.chain.n,
        "p": a.chain.p,
        "method": run.method,
        "cap": run.cap,
        "truncated": run.pmf.truncated,
        "truncation_bound": run.pmf.truncation_mass_bound.to_linear(),
        "mean": moments.map(|m| m.0),
        "variance": moments.map(|m| m.1),
    });
    let body = match a.output.format {
        Format::Csv => csv_with_header(header, &run.pmf)?,
        Format::Json => {
            let pmf: serde_json::Value = serde_json::from_str(&pmf_to_json(&run.pmf)?)?;
            (json!({ "header": header, "pmf": pmf }).to_string() + "\n").into_bytes()
        }
    };
    a.output.emit("exact", &body)?;
    Ok(0)
}

fn cmd_approx(a: &ApproxArgs) -> Result<i32> {
    let (n, p) = (a.chain.n, a.chain.p);
    let (family, params) = match a.family {
        Family::Poisson => {
            let stat = a.chain.statistic("n11")?;
            let g = group_blocks(&stat, a.m)?;
            let (k, _) = g.blocks_for(n);
            let ms = block_moments(&g, p)?;
            let lambda = k as f64 * ms.nu1;
            (ApproxFamily::poisson(lambda)?, json!({ "stat": stat.name(), "m": a.m, "n_blocks": k, "nu1": ms.nu1, "lambda": lambda }))
        }
        Family::Nb => {
            let nb = nb_params(n, p)?;
            (nb.family()?, json!({ "r": nb.r, "qbar": nb.qbar, "pbar": nb.pbar }))
        }
        Family::Bi => {
            let bi = bi_params(n, p)?;
            (bi.family()?, json!({ "n_trials": bi.n_trials, "ntilde": bi.ntilde, "ptilde": bi.ptilde, "alpha": bi.alpha }))
        }
    };
    let cap = a.cap.unwrap_or_else(|| (family.mean() + 12.0 * family.variance().sqrt() + 30.0).ceil() as usize);
    let cap = family.support_max().map_or(cap, |s| cap.min(s as usize));
    let pmf = LatticePMF::new((0..=cap as i64).map(|k| family.pmf(k)).collect::<Vec<LogReal>>());
    let header = json!({ "family": family.name(), "n": n, "p": p, "params": params, "mean": family.mean(), "variance": family.variance() });
    let body = match a.output.format {
        Format::Csv => csv_with_header(header, &pmf)?,
        Format::Json => {
            let pmf: serde_json::Value = serde_json::from_str(&pmf_to_json(&pmf)?)?;
            (json!({ "header": header, "pmf": pmf }).to_string() + "\n").into_bytes()
        }
    };
    a.output.emit("approx", &body)?;
    Ok(0)
}

fn parse_x(s: &str) -> Result<XRule> {
    let bad = || Error::Parameter(format!("--x must be X or LO:HI, got '{s}'"));
    let (lo, hi) = match s.split_once(':') {
        Some((lo, hi)) => (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok(XRule::Absolute { lo, hi })
}

fn cmd_ratio(a: &RatioArgs) -> Result<i32> {
    let default_stat = if a.theorem == 3 { "two-runs" } else { "n11" };
    let mut req = RatioRequest::new(a.theorem, a.chain.statistic(default_stat)?, a.chain.n, a.chain.p);
    if let Some(m) = a.m {
        req.m = m;
    }
    req.x_rule = match (&a.x, a.zone, a.sd) {
        (Some(x), _, _) => parse_x(x)?,
        (None, true, _) => XRule::Zone,
        (None, false, Some(c)) => XRule::Sd { c },
        (None, false, None) => req.x_rule,
    };
    req.zone = ZoneProxy { c: a.zone_c, ..ZoneProxy::default() };
    req.cap = CapRule::parse(&a.cap)?;
    req.method = ExactMethod::parse(&a.method)?;
    req.mode = a.mode.mode()?;
    let rep = ratio_report(&req)?;
    if let Some(why) = &rep.header.skipped {
        eprintln!("skipped: {why}");
    }
    let body = match a.output.format {
        Format::Csv => rep.to_csv_string()?.into_bytes(),
        Format::Json => (rep.to_json()? + "\n").into_bytes(),
    };
    a.output.emit(&format!("ratio_thm{}", a.theorem), &body)?;
    Ok(0)
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let mut cfg = SweepConfig::from_file(&a.config)?;
    if let Some(w) = a.workers {
        if w == 0 {
            return Err(Error::Parameter("workers must be at least 1".into()));
        }
        cfg.workers = w;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(f) = a.format {
        cfg.format = f.into();
    }
    let dir = a
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| a.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("reports"));
    let outcome = run_sweep(&cfg)?;
    write_sweep(&outcome, &dir, cfg.format)?;
    for p in &outcome.summary.points {
        let dev = p.max_deviation.map_or("-".to_string(), |d| format!("{d:.6e}"));
        let reason = p.reason.as_deref().map_or(String::new(), |r| format!(" ({r})"));
        println!("point {} n={} p={:.6e} rows={} max_deviation={dev}{reason}", p.index, p.n, p.p, p.rows);
    }
    println!("strictly_decreasing={} dir={}", outcome.summary.strictly_decreasing, dir.display());
    Ok(if outcome.summary.any_error() { 2 } else { 0 })
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let opts = VerifyOptions { seed: a.seed, only: a.only.clone(), gamma_grid: Grid::parse(&a.grid)? };
    let rep = verify_lemmas(&opts)?;
    if a.json {
        println!("{}", rep.to_json()?);
    } else {
        for line in rep.lines() {
            println!("{line}");
        }
    }
    Ok(if rep.all_pass() { 0 } else { 4 })
}

fn cmd_conditions(a: &ConditionArgs) -> Result<i32> {
    let stat = a.chain.statistic("n11")?;
    let g = group_blocks(&stat, a.m)?;
    let (k, rest) = g.blocks_for(a.chain.n);
    let ms = block_moments(&g, a.chain.p)?.with_blocks(k);
    let rep = check_conditions(&ms, k, a.x, a.mode.mode()?);
    let doc = json!({
        "stat": stat.name(),
        "n": a.chain.n,
        "m": a.m,
        "n_blocks": k,
        "dropped_windows": rest,
        "p": a.chain.p,
        "x": a.x,
        "moments": ms,
        "mode": rep.mode,
        "y": rep.y,
        "all_pass": rep.all_pass(),
        "clauses": rep.clauses,
    });
    println!("{doc}");
    Ok(0)
}

fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Exact(a) => cmd_exact(a),
        Command::Approx(a) => cmd_approx(a),
        Command::Ratio(a) => cmd_ratio(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::VerifyLemmas(a) => cmd_verify(a),
        Command::CheckConditions(a) => cmd_conditions(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
