//! Numerical verification suites for the saddle-point identities, the
//! factorization identities of the approximating families, the auxiliary
//! inequalities and the factorized characteristic functions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approx::{lambda_star, ApproxFamily};
use crate::error::{Error, Result};
use crate::exact::{cf_eval, pmf_dp, BernoulliChainSpec, LatticePMF, WindowStatistic};
use crate::ldcore::{
    heinrich_cf_2runs, heinrich_cf_generic, heinrich_cf_n11, hat_e_bound, inversion_check, lambda_closed,
    lambda_series, lambda_star_closed, lambda_star_series, solve_saddle, tilt_pmf, BlockOracle, DenominatorVariant,
    SaddleProblem,
};
use crate::metrics::{gamma_bounds_check, varijotas_check, SignedLatticeMeasure};
use crate::moments::{block_moments, group_blocks};
use crate::numerics::{ln_gamma, ComplexVal};

/// Suite names in run order.
pub const SUITES: &[&str] = &[
    "lambda_closed_form",
    "tilting_identity",
    "cf_tilt_ratio",
    "saddle_lambda_star",
    "poisson_conjugate",
    "poisson_factorization",
    "nb_factorization",
    "bi_factorization",
    "gamma_bounds",
    "tv_fourier_bound",
    "inversion",
    "heinrich_cf",
    "hat_e_bound",
];

/// `start:stop:step` grid for the Gamma bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = || Error::param(format!("grid must be start:stop:step, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts.iter().map(|p| p.parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        let g = Grid { start: v[0], stop: v[1], step: v[2] };
        if !(g.step > 0.0) || !(g.stop >= g.start) || !g.stop.is_finite() {
            return Err(bad());
        }
        Ok(g)
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid { start: 1.0, stop: 1000.0, step: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    pub only: Option<String>,
    pub gamma_grid: Grid,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub checks: usize,
    pub failures: usize,
    /// Smallest `limit - value` over all checks (tolerance minus error, or
    /// right side minus left side of an inequality).
    pub worst_margin: f64,
    pub worst_at: String,
}

impl SuiteResult {
    pub fn line(&self) -> String {
        format!(
            "{} {} checks={} failures={} worst_margin={:.6e} at {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            self.failures,
            self.worst_margin,
            self.worst_at
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.suites.iter().all(|s| s.pass)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn lines(&self) -> Vec<String> {
        self.suites.iter().map(SuiteResult::line).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

struct Tally {
    name: &'static str,
    checks: usize,
    failures: usize,
    worst_margin: f64,
    worst_at: String,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, checks: 0, failures: 0, worst_margin: f64::INFINITY, worst_at: String::new() }
    }

    fn record(&mut self, ok: bool, margin: f64, at: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
        // NaN margins count as the worst possible
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        if margin < self.worst_margin || self.worst_at.is_empty() {
            self.worst_margin = margin;
            self.worst_at = at();
        }
    }

    fn within(&mut self, err: f64, tol: f64, at: impl FnOnce() -> String) {
        self.record(err <= tol, tol - err, at);
    }

    fn below(&mut self, lhs: f64, rhs: f64, strict: bool, at: impl FnOnce() -> String) {
        let ok = if strict { lhs < rhs } else { lhs <= rhs };
        self.record(ok, rhs - lhs, at);
    }

    fn failed(&mut self, err: Error, at: impl FnOnce() -> String) {
        let at = at();
        self.record(false, f64::NEG_INFINITY, || format!("{at}: {err}"));
    }

    /// Folds a fallible check into the tally.
    fn run(&mut self, at: impl Fn() -> String, f: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = f(self) {
            self.failed(e, at);
        }
    }

    fn finish(self) -> SuiteResult {
        SuiteResult {
            name: self.name.to_string(),
            pass: self.failures == 0 && self.checks > 0,
            checks: self.checks,
            failures: self.failures,
            worst_margin: self.worst_margin,
            worst_at: self.worst_at,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Runs the requested suites (all of them unless `only` names one).
pub fn verify_lemmas(opts: &VerifyOptions) -> Result<VerifyReport> {
    let selected: Vec<&'static str> = match &opts.only {
        None => SUITES.to_vec(),
        Some(name) => {
            let hit = SUITES
                .iter()
                .find(|s| **s == name.as_str())
                .ok_or_else(|| Error::param(format!("unknown suite '{name}'; choose from {}", SUITES.join(", "))))?;
            vec![*hit]
        }
    };
    let suites = selected
        .into_iter()
        .map(|name| {
            let stream = SUITES.iter().position(|s| *s == name).unwrap_or(0) as u64;
            let mut t = Tally::new(name);
            match name {
                "lambda_closed_form" => lambda_closed_form(&mut t),
                "tilting_identity" => tilting_identity(&mut t),
                "cf_tilt_ratio" => cf_tilt_ratio(&mut t, &mut rng_for(opts.seed, stream)),
                "saddle_lambda_star" => saddle_lambda_star(&mut t),
                "poisson_conjugate" => poisson_conjugate(&mut t),
                "poisson_factorization" => poisson_factorization(&mut t),
                "nb_factorization" => nb_factorization(&mut t),
                "bi_factorization" => bi_factorization(&mut t),
                "gamma_bounds" => gamma_bounds(&mut t, &opts.gamma_grid),
                "tv_fourier_bound" => tv_fourier_bound(&mut t, &mut rng_for(opts.seed, stream)),
                "inversion" => inversion(&mut t, &mut rng_for(opts.seed, stream)),
                "heinrich_cf" => heinrich_cf(&mut t, opts.seed),
                "hat_e_bound" => hat_e_bounds(&mut t, opts.seed),
                _ => unreachable!(),
            }
            t.finish()
        })
        .collect();
    Ok(VerifyReport { seed: opts.seed, suites })
}

const NU1_GRID: [f64; 6] = [0.001, 0.01, 0.05, 0.1, 0.2, 0.4];

/// Closed forms against the series for `|nu1 y / (1 - nu1)| <= 0.5`.
fn lambda_closed_form(t: &mut Tally) {
    const TOL: f64 = 1e-12;
    for &nu1 in &NU1_GRID {
        for i in -50..=50 {
            let s = i as f64 / 100.0;
            if i == 0 {
                continue;
            }
            let y = s * (1.0 - nu1) / nu1;
            let at = || format!("nu1={nu1} s={s}");
            t.run(at, |t| {
                let a = lambda_series(1.0, nu1, y)?;
                t.within(rel(a.series, lambda_closed(1.0, nu1, y)?), TOL, at);
                let b = lambda_star_series(1.0, nu1, y)?;
                t.within(rel(b.series, lambda_star_closed(1.0, nu1, y)?), TOL, at);
                Ok(())
            });
        }
    }
}

/// `-xh + n ln(1 + nu1 (e^h - 1)) + zx - n nu1 (e^z - 1) = Lambda(y)` with both
/// saddle points solved independently. `nu1 |y| >= 1e-3` keeps `Lambda` away
/// from the cancellation floor of the four-term sum.
fn tilting_identity(t: &mut Tally) {
    const TOL: f64 = 1e-11;
    let ys = [-0.9, -0.5, -0.2, -0.1, -0.05, -0.02, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0];
    for &n in &[10.0, 1e3, 1e6] {
        for &nu1 in &NU1_GRID {
            for &y in &ys {
                let s = nu1 * y / (1.0 - nu1);
                if s.abs() > 0.5 || (nu1 * y).abs() < 1e-3 {
                    continue;
                }
                let x = n * nu1 * (1.0 + y);
                let at = || format!("n={n} nu1={nu1} y={y}");
                t.run(at, |t| {
                    let h = solve_saddle(SaddleProblem::Binomial { n, nu1, x })?;
                    let z = solve_saddle(SaddleProblem::Poisson { lambda: n * nu1, x })?;
                    let lhs = -x * h.value + n * (nu1 * h.derived).ln_1p() + z.value * x - n * nu1 * z.value.exp_m1();
                    t.within(rel(lhs, lambda_closed(n, nu1, y)?), TOL, at);
                    Ok(())
                });
            }
        }
    }
}

/// `(1 + nu1 (e^{it+h} - 1)) / (1 + nu1 (e^h - 1)) = 1 + (x/n)(e^{it} - 1)`.
fn cf_tilt_ratio(t: &mut Tally, rng: &mut ChaCha8Rng) {
    const TOL: f64 = 1e-12;
    let n = 1000.0;
    for _ in 0..500 {
        let nu1: f64 = rng.gen_range(1e-4..0.3);
        let s: f64 = rng.gen_range(-0.5..0.5);
        let y = (s * (1.0 - nu1) / nu1).max(-0.99);
        let th: f64 = rng.gen_range(-PI..PI);
        let x = n * nu1 * (1.0 + y);
        let at = || format!("nu1={nu1:.6} y={y:.6} t={th:.6}");
        t.run(at, |t| {
            let h = solve_saddle(SaddleProblem::Binomial { n, nu1, x })?.value;
            let e = |u: ComplexVal| ComplexVal::new(1.0, 0.0) + nu1 * (u.exp() - 1.0);
            let lhs = e(ComplexVal::new(h, th)) / e(ComplexVal::new(h, 0.0));
            let rhs = ComplexVal::new(1.0, 0.0) + (x / n) * (ComplexVal::new(0.0, th).exp() - 1.0);
            t.within((lhs - rhs).norm(), TOL, at);
            Ok(())
        });
    }
}

/// `n lambda* e^h = x` for the binomial saddle point `h`.
fn saddle_lambda_star(t: &mut Tally) {
    const TOL: f64 = 1e-12;
    for &n in &[10.0, 1e3, 1e6] {
        for &nu1 in &NU1_GRID {
            for i in -9..=9 {
                let s = i as f64 / 20.0;
                if i == 0 {
                    continue;
                }
                let y = s * (1.0 - nu1) / nu1;
                if y <= -1.0 {
                    continue;
                }
                let x = n * nu1 * (1.0 + y);
                let at = || format!("n={n} nu1={nu1} y={y}");
                t.run(at, |t| {
                    let h = solve_saddle(SaddleProblem::Binomial { n, nu1, x })?.value;
                    t.within(rel(n * lambda_star(nu1, y)? * h.exp(), x), TOL, at);
                    Ok(())
                });
            }
        }
    }
}

fn poisson_table(lambda: f64) -> Result<LatticePMF> {
    let f = ApproxFamily::poisson(lambda)?;
    let len = (lambda + 40.0 * lambda.sqrt() + 60.0).ceil() as i64;
    Ok(LatticePMF::new((0..len).map(|k| f.pmf(k)).collect()))
}

/// Largest relative gap between two tables over masses above `1e-200`.
fn table_gap(a: &LatticePMF, want: &ApproxFamily) -> f64 {
    (a.offset..=a.max_value())
        .map(|k| (a.mass(k), want.pmf(k)))
        .filter(|(_, w)| w.ln() > -460.0)
        .map(|(g, w)| (g.ln() - w.ln()).exp_m1().abs())
        .fold(0.0, f64::max)
}

/// Tilting `Poisson(lambda)` by `z` gives `Poisson(lambda e^z)`; in particular
/// `Poisson(n lambda*)` tilted by the binomial saddle point is `Poisson(x)`.
fn poisson_conjugate(t: &mut Tally) {
    const TOL: f64 = 1e-12;
    for &lambda in &[0.5, 3.0, 20.0, 150.0] {
        for &z in &[-0.7, -0.1, 0.0, 0.2, 0.6] {
            let at = || format!("lambda={lambda} z={z}");
            t.run(at, |t| {
                let (g, _) = tilt_pmf(&poisson_table(lambda)?, z)?;
                t.within(table_gap(&g, &ApproxFamily::poisson(lambda * z.exp())?), TOL, at);
                Ok(())
            });
        }
    }
    for &(n, nu1, y) in &[(200.0, 0.05, 0.3), (1000.0, 0.01, -0.4), (50.0, 0.2, 0.5), (5000.0, 0.002, 1.0)] {
        let at = || format!("n={n} nu1={nu1} y={y}");
        t.run(at, |t| {
            let x = n * nu1 * (1.0 + y);
            let h = solve_saddle(SaddleProblem::Binomial { n, nu1, x })?.value;
            let (g, _) = tilt_pmf(&poisson_table(n * lambda_star(nu1, y)?)?, h)?;
            t.within(table_gap(&g, &ApproxFamily::poisson(x)?), TOL, at);
            Ok(())
        });
    }
}

/// `(n nu1)^x e^{-n nu1} / x! = exp{n nu1 (e^z - 1) - zx} x^x e^{-x} / x!` with `n nu1 e^z = x`.
fn poisson_factorization(t: &mut Tally) {
    const TOL: f64 = 1e-11;
    for &lambda in &[1.0, 1.7, 4.0, 10.0, 23.5, 50.0] {
        for x in 1..=100u32 {
            let xf = x as f64;
            let at = || format!("lambda={lambda} x={x}");
            t.run(at, |t| {
                let z = solve_saddle(SaddleProblem::Poisson { lambda, x: xf })?.value;
                let lhs = ApproxFamily::poisson(lambda)?.ln_pmf(x as i64);
                let rhs = lambda * z.exp_m1() - z * xf + xf * xf.ln() - xf - ln_gamma(xf + 1.0);
                t.within((lhs - rhs).abs(), TOL, at);
                Ok(())
            });
        }
    }
}

/// `NB(r, qbar){x} = e^{-wx} NB^(w) NB(r, r/(r+x)){x}` with `pbar e^w = x/(r+x)`.
fn nb_factorization(t: &mut Tally) {
    const TOL: f64 = 1e-10;
    for &r in &[0.5, 2.0, 5.9453, 10.0, 75.3] {
        for &qbar in &[0.2, 0.6, 0.9, 0.99] {
            for &x in &[1u32, 2, 5, 10, 30, 100, 400] {
                let xf = x as f64;
                let at = || format!("r={r} qbar={qbar} x={x}");
                t.run(at, |t| {
                    let w = solve_saddle(SaddleProblem::NegBinomial { r, qbar, x: xf })?.value;
                    let fam = ApproxFamily::neg_binomial(r, qbar)?;
                    let lhs = fam.ln_pmf(x as i64);
                    let rhs = -w * xf + fam.log_mgf(w)? + ApproxFamily::neg_binomial(r, r / (r + xf))?.ln_pmf(x as i64);
                    t.within((lhs - rhs).abs(), TOL, at);
                    Ok(())
                });
            }
        }
    }
}

/// `BI(N, p){x} = e^{-hx} BI^(h) BI(N, x/N){x}` at the tilted saddle point.
fn bi_factorization(t: &mut Tally) {
    const TOL: f64 = 1e-10;
    for &n_trials in &[10u64, 34, 57, 300, 3000] {
        for &ptilde in &[0.01, 0.05, 0.3, 0.7] {
            for frac in [0.02, 0.1, 0.3, 0.5, 0.8, 0.97] {
                let x = ((n_trials as f64 * frac).round() as u64).clamp(1, n_trials - 1);
                let xf = x as f64;
                let at = || format!("N={n_trials} p={ptilde} x={x}");
                t.run(at, |t| {
                    let h = solve_saddle(SaddleProblem::BinomialTilde { n_trials, ptilde, x: xf })?.value;
                    let fam = ApproxFamily::binomial(n_trials, ptilde)?;
                    let lhs = fam.ln_pmf(x as i64);
                    let rhs = -h * xf + fam.log_mgf(h)? + ApproxFamily::binomial(n_trials, xf / n_trials as f64)?.ln_pmf(x as i64);
                    t.within((lhs - rhs).abs(), TOL, at);
                    Ok(())
                });
            }
        }
    }
}

/// Both Stirling-type bounds, strict, on the grid.
fn gamma_bounds(t: &mut Tally, grid: &Grid) {
    for x in grid.points() {
        let at = || format!("x={x}");
        t.run(at, |t| {
            let g = gamma_bounds_check(x)?;
            t.below(0.0, g.lower_margin, true, at);
            t.below(0.0, g.upper_margin, true, at);
            Ok(())
        });
    }
}

/// The total-variation bound on random signed measures, plus the instance
/// `F_h - Pi*_h` with `a = x`, `b = max(1, sqrt(n nu1))`.
fn tv_fourier_bound(t: &mut Tally, rng: &mut ChaCha8Rng) {
    const TOL: f64 = 1e-10;
    for i in 0..1000 {
        let len = rng.gen_range(1..=50);
        let offset = rng.gen_range(-20..=20);
        let masses: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = SignedLatticeMeasure::new(offset, masses);
        let weight: f64 = m.masses.iter().map(|v| v.abs()).sum();
        let a = m.masses.iter().enumerate().map(|(k, v)| (offset + k as i64) as f64 * v.abs()).sum::<f64>() / weight;
        let b = if i % 2 == 0 { 1.0 } else { 5.0 };
        let at = || format!("measure {i} len={len} b={b}");
        t.run(at, |t| {
            let c = varijotas_check(&m, a, b, TOL)?;
            t.below(c.lhs, c.rhs, false, at);
            Ok(())
        });
    }
    let at = || "n11 m=2 p=0.05 K=40 x=mean+sd".to_string();
    t.run(at, |t| {
        let g = group_blocks(&WindowStatistic::n11_event(), 2)?;
        let k = 40;
        let ms = block_moments(&g, 0.05)?;
        let mean = k as f64 * ms.nu1;
        let x = (mean + mean.sqrt()).ceil();
        let y = (x - mean) / mean;
        let kf = k as f64;
        let h = solve_saddle(SaddleProblem::Binomial { n: kf, nu1: ms.nu1, x })?.value;
        let exact = pmf_dp(&g.stat, &BernoulliChainSpec::new(g.terms_for(k), 0.05)?, None)?;
        let (f_h, _) = tilt_pmf(&exact, h)?;
        let (pi_h, _) = tilt_pmf(&poisson_table(kf * lambda_star(ms.nu1, y)?)?, h)?;
        let m = SignedLatticeMeasure::difference(&f_h, &pi_h);
        let c = varijotas_check(&m, x, mean.sqrt().max(1.0), TOL)?;
        t.below(c.lhs, c.rhs, false, at);
        Ok(())
    });
}

/// `e^{zm} G{m}` against the inversion integral on small exact instances.
fn inversion(t: &mut Tally, rng: &mut ChaCha8Rng) {
    const TOL: f64 = 1e-11;
    let at = || "two-runs n=6 p=0.3 z=0.2 m=2".to_string();
    t.run(at, |t| {
        let pmf = pmf_dp(&WindowStatistic::two_runs(), &BernoulliChainSpec::new(6, 0.3)?, None)?;
        t.within(inversion_check(&pmf, 0.2, 2)?, TOL, at);
        Ok(())
    });
    let stats = [
        WindowStatistic::two_runs(),
        WindowStatistic::n11_event(),
        WindowStatistic::nk1k2_event(1, 2).expect("valid pattern"),
        WindowStatistic::nk1k2_event(2, 2).expect("valid pattern"),
    ];
    for trial in 0..200 {
        let stat = &stats[trial % stats.len()];
        let n = rng.gen_range(1..=12usize);
        let p: f64 = rng.gen_range(0.05..0.95);
        let z: f64 = rng.gen_range(-0.5..0.5);
        let at = || format!("{} n={n} p={p:.4} z={z:.4}", stat.name());
        t.run(at, |t| {
            let pmf = pmf_dp(stat, &BernoulliChainSpec::new(n, p)?, None)?;
            let (tilted, _) = tilt_pmf(&pmf, z)?;
            let top = tilted.masses.iter().map(|m| m.ln()).fold(f64::NEG_INFINITY, f64::max);
            // points whose tilted mass is within 1e-3 of the largest
            let support: Vec<i64> = (pmf.offset..=pmf.max_value()).filter(|&k| tilted.mass(k).ln() >= top - 3.0 * std::f64::consts::LN_10).collect();
            let m = support[rng_pick(trial, support.len())];
            t.within(inversion_check(&pmf, z, m)?, TOL, || format!("{} m={m}", at()));
            Ok(())
        });
    }
}

fn rng_pick(trial: usize, len: usize) -> usize {
    (trial * 7919) % len
}

/// Evaluation points: 50 on the unit circle and 50 on `Re u = 0.2`.
fn cf_points(seed: u64, stream: u64) -> Vec<ComplexVal> {
    let mut rng = rng_for(seed, stream);
    (0..100).map(|i| ComplexVal::new(if i < 50 { 0.0 } else { 0.2 }, rng.gen_range(-PI..PI))).collect()
}

const CF_STREAM: u64 = 1000;

/// `(statistic, m, n_terms, p)` for the depth-6 generic recursion. The
/// truncation error shrinks by roughly `|e^u - 1| p` per dropped span, so
/// windowed blocks (`m = 1`) need smaller `p` than grouped ones.
fn generic_grid() -> Vec<(WindowStatistic, usize, usize, f64)> {
    let two = WindowStatistic::two_runs();
    let n11 = WindowStatistic::n11_event();
    let n12 = WindowStatistic::nk1k2_event(1, 2).expect("valid pattern");
    vec![
        (two.clone(), 1, 200, 0.01),
        (two.clone(), 1, 120, 0.02),
        (two, 2, 200, 0.03),
        (n11.clone(), 1, 200, 0.01),
        (n11, 2, 150, 0.03),
        (n12, 2, 200, 0.02),
    ]
}

/// Scale for comparing transforms at `u`: `E e^{Re(u) S}`, which is 1 on the unit circle.
fn cf_scale(pmf: &LatticePMF, u: ComplexVal) -> Result<f64> {
    Ok(cf_eval(pmf, ComplexVal::new(u.re, 0.0))?.re)
}

/// Factorized transforms against the exact one.
fn heinrich_cf(t: &mut Tally, seed: u64) {
    let pts = cf_points(seed, CF_STREAM);
    let exact = |stat: &WindowStatistic, n: usize, p: f64| pmf_dp(stat, &BernoulliChainSpec::new(n, p)?, None);

    for &(n, p) in &[(20usize, 0.25), (75, 0.1), (200, 0.05), (200, 0.3)] {
        let at = || format!("two-runs n={n} p={p}");
        t.run(at, |t| {
            let pmf = exact(&WindowStatistic::two_runs(), n, p)?;
            for &u in &pts {
                let at = || format!("two-runs n={n} p={p} u={u}");
                t.run(at, |t| {
                    let got = heinrich_cf_2runs(n, p, u)?.value();
                    t.within((got - cf_eval(&pmf, u)?).norm() / cf_scale(&pmf, u)?, 1e-8, at);
                    Ok(())
                });
            }
            Ok(())
        });
    }
    for &(n, p) in &[(15usize, 0.15), (60, 0.1), (200, 0.05), (200, 0.12)] {
        let at = || format!("n11 n={n} p={p}");
        t.run(at, |t| {
            let pmf = exact(&WindowStatistic::n11_event(), n, p)?;
            for &u in &pts {
                let at = || format!("n11 n={n} p={p} u={u}");
                t.run(at, |t| {
                    let got = heinrich_cf_n11(n, p, u, DenominatorVariant::UpToKminus1)?.value();
                    t.within((got - cf_eval(&pmf, u)?).norm() / cf_scale(&pmf, u)?, 1e-10, at);
                    Ok(())
                });
            }
            Ok(())
        });
    }
    for (stat, m, n, p) in generic_grid() {
        let at = || format!("generic {} m={m} n={n} p={p}", stat.name());
        t.run(at, |t| {
            let g = group_blocks(&stat, m)?;
            let oracle = BlockOracle::new(&g, p, 6)?;
            let k = n / m;
            let pmf = exact(&stat, g.terms_for(k), p)?;
            for &u in &pts {
                let at = || format!("generic {} m={m} n={n} p={p} u={u}", stat.name());
                t.run(at, |t| {
                    let got = heinrich_cf_generic(&oracle, k, u, 6)?.value();
                    t.within((got - cf_eval(&pmf, u)?).norm() / cf_scale(&pmf, u)?, 1e-8, at);
                    Ok(())
                });
            }
            Ok(())
        });
    }
}

/// `|E^(Y_1..Y_k)| <= 2^{k-1} (E|Y|^2)^{k/2}` for every span the generic
/// recursion evaluates at the points used by `heinrich_cf`. Near `u = 0` both
/// sides sink below the rounding floor of the subset expansion, which is
/// allowed as absolute slack.
const HAT_E_FLOOR: f64 = 64.0 * f64::EPSILON;

fn hat_e_bounds(t: &mut Tally, seed: u64) {
    let pts = cf_points(seed, CF_STREAM);
    for (stat, m, n, p) in generic_grid() {
        let at = || format!("{} m={m} n={n} p={p}", stat.name());
        t.run(at, |t| {
            let oracle = BlockOracle::new(&group_blocks(&stat, m)?, p, 6)?;
            for &u in &pts {
                let e = oracle.hat_e(u, 6)?;
                let second = oracle.y_second_moment(u)?;
                for len in 1..=6 {
                    let at = || format!("{} m={m} p={p} u={u} span={len}", stat.name());
                    t.below(e.span(len).norm(), hat_e_bound(second, len) * (1.0 + 1e-12) + HAT_E_FLOOR * 2f64.powi(len as i32), false, at);
                }
            }
            Ok(())
        });
    }
}
