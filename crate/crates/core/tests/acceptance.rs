//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when a
//! criterion fails that is not listed in `KNOWN_UNATTAINABLE`, or when a
//! listed one unexpectedly passes.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mdep_core::approx::{bi_params, nb_params, DEFAULT_BI_VARIANCE_CONSTANT};
use mdep_core::exact::{
    pmf_bruteforce, pmf_dp, pmf_matpow, pmf_moments, BernoulliChainSpec, WindowStatistic,
};
use mdep_core::harness::{
    compute_exact, ratio_report, run_sweep, verify_lemmas, CapRule, ExactMethod, RatioReport, RatioRequest,
    SweepConfig, SweepOutcome, VerifyOptions, VerifyReport, XRule,
};
use mdep_core::moments::{block_moments, group_blocks};
use mdep_core::numerics::rational;

const SEED: u64 = 0;

/// Criteria that cannot hold as stated; each still runs and prints FAIL.
/// C6: `|N p~^2 - (3n - 2) alpha^2| / alpha^2 = 9 frac(n^2 / (3n - 2)) + O(1/n)`,
/// which exceeds 2 whenever the fractional part does.
const KNOWN_UNATTAINABLE: &[&str] = &["C6"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn builtins() -> Vec<WindowStatistic> {
    let mut v = vec![WindowStatistic::two_runs(), WindowStatistic::n11_event()];
    for (k1, k2) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        v.push(WindowStatistic::nk1k2_event(k1, k2).unwrap());
    }
    v
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for stat in builtins() {
        for n in 1..=16 {
            for i in 1..=9 {
                let chain = BernoulliChainSpec::new(n, i as f64 / 10.0).unwrap();
                let dp = pmf_dp(&stat, &chain, None).unwrap();
                let brute = pmf_bruteforce(&stat, &chain).unwrap();
                if !brute.is_normalized() || dp.masses.len() != brute.masses.len() {
                    return outcome(false, format!("{} n={n} p=0.{i}: support or normalization mismatch", stat.name()));
                }
                for (d, b) in dp.masses.iter().zip(&brute.masses) {
                    worst = worst.max(rel_gap(d.to_linear(), rational::to_f64(b)));
                }
                cases += 1;
            }
        }
    }
    outcome(worst <= 1e-12, format!("{cases} cases, worst relative mass gap {worst:.3e} (tol 1e-12)"))
}

fn fast_path_equivalence() -> Outcome {
    let stats = builtins();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    rng.set_stream(2);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let stat = &stats[rng.gen_range(0..stats.len())];
        let n = rng.gen_range(1..=64usize);
        let p: f64 = rng.gen_range(0.01..0.99);
        let full = n * stat.max_payoff() as usize;
        let cap = if rng.gen_bool(0.5) { full } else { rng.gen_range(1..=full.max(1)) };
        let chain = BernoulliChainSpec::new(n, p).unwrap();
        let a = pmf_matpow(stat, &chain, cap).unwrap();
        let b = pmf_dp(stat, &chain, Some(cap)).unwrap();
        if a.masses.len() != b.masses.len() || a.truncated != b.truncated {
            return outcome(false, format!("{} n={n} p={p} cap={cap}: shapes differ", stat.name()));
        }
        for (x, y) in a.masses.iter().zip(&b.masses).chain([(&a.truncation_mass_bound, &b.truncation_mass_bound)]) {
            worst = worst.max(rel_gap(x.to_linear(), y.to_linear()));
        }
    }
    outcome(worst <= 1e-12, format!("200 triples, worst relative mass gap {worst:.3e} (tol 1e-12)"))
}

fn suites(report: &VerifyReport, names: &[&str]) -> Outcome {
    let picked: Vec<_> = names.iter().map(|n| report.suite(n).expect("suite ran")).collect();
    let detail = picked
        .iter()
        .map(|s| format!("{} {} checks={} worst_margin={:.2e}", if s.pass { "ok" } else { "FAILED" }, s.name, s.checks, s.worst_margin))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(picked.iter().all(|s| s.pass), detail)
}

fn moment_matching() -> Outcome {
    let mut nb_worst: f64 = 0.0;
    let mut mean_worst: f64 = 0.0;
    let mut gap_worst: f64 = 0.0;
    let mut gap_at = String::new();
    for n in [100usize, 1000, 10_000] {
        for p in [0.01, 0.05, 0.1, 0.2] {
            let exact = compute_exact(&WindowStatistic::two_runs(), n, p, CapRule::Auto, ExactMethod::Dp).unwrap();
            let (mean, var) = pmf_moments(&exact.pmf).unwrap();
            let nb = nb_params(n, p).unwrap().family().unwrap();
            nb_worst = nb_worst.max(rel_gap(nb.mean(), mean)).max(rel_gap(nb.variance(), var));
            let bi = bi_params(n, p).unwrap();
            mean_worst = mean_worst.max(rel_gap(bi.n_trials as f64 * bi.ptilde, n as f64 * bi.alpha));
            let gap = bi.variance_gap(n);
            if gap > gap_worst {
                gap_worst = gap;
                gap_at = format!("n={n} p={p}");
            }
        }
    }
    let nb_ok = nb_worst <= 1e-9;
    let mean_ok = mean_worst <= 4.0 * f64::EPSILON;
    let gap_ok = gap_worst <= DEFAULT_BI_VARIANCE_CONSTANT;
    outcome(
        nb_ok && mean_ok && gap_ok,
        format!(
            "NB mean/variance worst rel {nb_worst:.2e} (tol 1e-9) {}; N p~ vs n alpha worst rel {mean_worst:.2e} {}; \
             |N p~^2 - (3n-2) alpha^2| / alpha^2 worst {gap_worst:.3} at {gap_at} (bound {DEFAULT_BI_VARIANCE_CONSTANT}) {}",
            if nb_ok { "ok" } else { "FAILED" },
            if mean_ok { "ok" } else { "FAILED" },
            if gap_ok { "ok" } else { "FAILED" },
        ),
    )
}

fn sweep_bytes(out: &SweepOutcome) -> Vec<u8> {
    let mut bytes = Vec::new();
    out.summary.write_csv(&mut bytes).unwrap();
    for rep in out.reports.iter().flatten() {
        rep.write_csv(&mut bytes).unwrap();
    }
    bytes
}

fn trend(out: &SweepOutcome, last_below: Option<f64>) -> Outcome {
    let devs: Vec<String> = out
        .summary
        .points
        .iter()
        .map(|p| format!("n={} {}", p.n, p.max_deviation.map_or("none".into(), |d| format!("{d:.3e}"))))
        .collect();
    let all_rows = out.summary.points.iter().all(|p| p.rows > 0) && !out.summary.any_error();
    let last = out.summary.points.last().and_then(|p| p.max_deviation).unwrap_or(f64::INFINITY);
    let last_ok = last_below.is_none_or(|b| last < b);
    outcome(
        all_rows && out.summary.strictly_decreasing && last_ok,
        format!("max deviation {} strictly_decreasing={}", devs.join(", "), out.summary.strictly_decreasing),
    )
}

fn theorem3_sweep(workers: usize) -> SweepOutcome {
    let text = format!(
        "[statistic]\nname = two-runs\n[schedule]\nn = 2000, 20000, 200000\np_coef = 0.5\np_exp = -0.25\n\
         [ratio]\ntheorem = 3\nx_rule = sqrt_mean\nx_c = 2\n[output]\nseed = {SEED}\nworkers = {workers}\n"
    );
    run_sweep(&SweepConfig::from_ini_str(&text).unwrap()).unwrap()
}

fn theorem4_sweep(workers: usize) -> SweepOutcome {
    let text = format!(
        "[statistic]\nname = n11\n[schedule]\nn = 2000, 20000, 200000\np_coef = 1\np_exp = -0.333333333333333333\n\
         [ratio]\ntheorem = 4\nx_rule = sqrt_mean\nx_c = 2\n[output]\nseed = {SEED}\nworkers = {workers}\n"
    );
    run_sweep(&SweepConfig::from_ini_str(&text).unwrap()).unwrap()
}

/// `p` with `p (1 - p) = alpha`, `p < 1/2`.
fn p_for_alpha(alpha: f64) -> f64 {
    (1.0 - (1.0 - 4.0 * alpha).sqrt()) / 2.0
}

/// `(n_terms, p, n nu1)` for grouped n11 blocks with `K = round(20 / nu1)`.
fn n11_point(alpha: f64) -> (usize, f64, f64) {
    let p = p_for_alpha(alpha);
    let g = group_blocks(&WindowStatistic::n11_event(), 2).unwrap();
    let nu1 = block_moments(&g, p).unwrap().nu1;
    let k = (20.0 / nu1).round() as usize;
    (g.terms_for(k), p, k as f64 * nu1)
}

fn theorem1_report() -> RatioReport {
    let (n_terms, p, mean) = n11_point(6.7e-6);
    let mut req = RatioRequest::new(1, WindowStatistic::n11_event(), n_terms, p);
    req.method = ExactMethod::Matpow;
    req.x_rule = XRule::Absolute { lo: (0.9 * mean).ceil() as i64, hi: (1.1 * mean).floor() as i64 };
    ratio_report(&req).unwrap()
}

fn theorem1_check(rep: &RatioReport) -> Outcome {
    let h = &rep.header;
    let k_fit = h.k_fit.unwrap_or(f64::INFINITY);
    let strict_rows = rep.rows.iter().filter(|r| r.conditions_ok).count();
    let centre = rep.rows.iter().min_by(|a, b| a.y.abs().total_cmp(&b.y.abs())).expect("rows");
    let (gamma, nu1) = (h.gamma.expect("gamma"), h.moments.expect("moments").nu1);
    let within = rep.rows.iter().filter(|r| r.conditions_ok).all(|r| {
        let scale = gamma * (1.0 / nu1 + h.n_blocks as f64 * r.y * r.y);
        (r.ratio_over_main_term - 1.0).abs() <= k_fit * scale * (1.0 + 1e-12)
    });
    let pass = strict_rows == rep.rows.len() && k_fit < 100.0 && within && (centre.ratio - 1.0).abs() <= 0.02;
    outcome(
        pass,
        format!(
            "K={} blocks via {:?}, x in [{}, {}], strict conditions on {strict_rows}/{} rows, K_fit={k_fit:.4} (< 100), \
             ratio at y={:.4} is {:.6}",
            h.n_blocks,
            h.method_used,
            rep.rows.first().map_or(0, |r| r.x),
            rep.rows.last().map_or(0, |r| r.x),
            rep.rows.len(),
            centre.y,
            centre.ratio
        ),
    )
}

fn theorem2_sweep(workers: usize) -> SweepOutcome {
    let points: Vec<String> = [6.7e-5, 6.7e-6, 6.7e-7]
        .iter()
        .map(|&a| {
            let (n, p, _) = n11_point(a);
            format!("{n}:{p:e}")
        })
        .collect();
    let text = format!(
        "[statistic]\nname = n11\nm = 2\n[schedule]\npoints = {}\n[ratio]\ntheorem = 2\nx_rule = offsets\n\
         x_offsets = 1, 2, 3\n[output]\nseed = {SEED}\nworkers = {workers}\n",
        points.join(", ")
    );
    run_sweep(&SweepConfig::from_ini_str(&text).unwrap()).unwrap()
}

fn run(label: &str, title: &str, f: impl FnOnce() -> Outcome, failures: &mut Vec<String>) {
    let t = Instant::now();
    let o = f();
    println!("{} {label} {title}: {} [{:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed().as_secs_f64());
    let known = KNOWN_UNATTAINABLE.contains(&label);
    if o.pass == known {
        failures.push(format!("{label}{}", if known { " passed but is listed as unattainable" } else { "" }));
    }
}

fn main() {
    let mut failures = Vec::new();
    run("C1", "oracle equivalence", oracle_equivalence, &mut failures);
    run("C2", "fast-path equivalence", fast_path_equivalence, &mut failures);

    let t = Instant::now();
    let lemmas = verify_lemmas(&VerifyOptions { seed: SEED, ..Default::default() }).unwrap();
    println!("     (identity and inequality suites ran in {:.1}s)", t.elapsed().as_secs_f64());
    run("C3", "factorized transforms", || suites(&lemmas, &["heinrich_cf"]), &mut failures);
    run("C4", "closed forms and tilting identity", || suites(&lemmas, &["lambda_closed_form", "tilting_identity"]), &mut failures);
    run(
        "C5",
        "supporting identities and inequalities",
        || {
            suites(
                &lemmas,
                &[
                    "poisson_factorization",
                    "nb_factorization",
                    "bi_factorization",
                    "gamma_bounds",
                    "tv_fourier_bound",
                    "hat_e_bound",
                    "inversion",
                    "cf_tilt_ratio",
                    "saddle_lambda_star",
                    "poisson_conjugate",
                ],
            )
        },
        &mut failures,
    );
    run("C6", "moment matching", moment_matching, &mut failures);

    let (mut s3, mut s4, mut t1, mut s2) = (None, None, None, None);
    run("C7", "negative binomial trend", || trend(s3.insert(theorem3_sweep(1)), Some(0.05)), &mut failures);
    run("C8", "binomial trend", || trend(s4.insert(theorem4_sweep(1)), Some(0.05)), &mut failures);
    run("C9", "Poisson ratio in the strict regime", || theorem1_check(t1.insert(theorem1_report())), &mut failures);
    run("C10", "Poisson tail trend", || trend(s2.insert(theorem2_sweep(1)), None), &mut failures);
    let mut first = Vec::new();
    first.extend(sweep_bytes(s3.as_ref().unwrap()));
    first.extend(sweep_bytes(s4.as_ref().unwrap()));
    first.extend(t1.as_ref().unwrap().to_csv_string().unwrap().into_bytes());
    first.extend(sweep_bytes(s2.as_ref().unwrap()));

    run(
        "C11",
        "determinism",
        || {
            let mut again = Vec::new();
            again.extend(sweep_bytes(&theorem3_sweep(3)));
            again.extend(sweep_bytes(&theorem4_sweep(3)));
            again.extend(theorem1_report().to_csv_string().unwrap().into_bytes());
            again.extend(sweep_bytes(&theorem2_sweep(3)));
            outcome(again == first, format!("{} report bytes, rerun with 3 workers identical: {}", first.len(), again == first))
        },
        &mut failures,
    );

    if !failures.is_empty() {
        eprintln!("unexpected outcomes: {}", failures.join(", "));
        std::process::exit(1);
    }
}
