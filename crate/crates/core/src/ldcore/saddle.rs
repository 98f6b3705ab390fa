use serde::Serialize;

use crate::error::{Error, Result};

/// Which saddle-point equation a solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SaddleKind {
    /// `x = n nu1 e^h / (1 + nu1 (e^h - 1))`.
    BinomialH,
    /// `lambda e^z = x`.
    PoissonZ,
    /// `pbar e^w = x / (r + x)`.
    NbW,
    /// `N p e^h / (1 + p (e^h - 1)) = x`.
    BiHtilde,
}

/// Inputs of one saddle-point equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SaddleProblem {
    Binomial { n: f64, nu1: f64, x: f64 },
    Poisson { lambda: f64, x: f64 },
    NegBinomial { r: f64, qbar: f64, x: f64 },
    BinomialTilde { n_trials: u64, ptilde: f64, x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleSolution {
    pub kind: SaddleKind,
    pub value: f64,
    /// `e^value - 1`.
    pub derived: f64,
    /// Log of the relevant generating function at `value`.
    pub log_normalizer: f64,
    /// Relative residual of the saddle equation.
    pub residual: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

/// Closed-form solution of the requested equation, with its residual.
pub fn solve_saddle(problem: SaddleProblem) -> Result<SaddleSolution> {
    match problem {
        SaddleProblem::Binomial { n, nu1, x } => {
            if !(nu1 > 0.0 && nu1 < 1.0) || !(n > 0.0) {
                return Err(Error::param(format!("binomial saddle needs nu1 in (0, 1), n > 0; got {nu1}, {n}")));
            }
            let y = (x - n * nu1) / (n * nu1);
            let s = nu1 * y / (1.0 - nu1);
            if !(1.0 + y > 0.0) || !(s < 1.0) {
                return Err(Error::param(format!("binomial saddle undefined at y = {y} (needs -1 < y < (1 - nu1) / nu1)")));
            }
            // h = ln(1 + y) - ln(1 - s); e^h - 1 = y / (1 - nu1 - nu1 y)
            let h = y.ln_1p() - (-s).ln_1p();
            let derived = y / (1.0 - nu1 - nu1 * y);
            let log_normalizer = -n * (-s).ln_1p();
            let implied = n * nu1 * h.exp() / (1.0 + nu1 * derived);
            Ok(SaddleSolution { kind: SaddleKind::BinomialH, value: h, derived, log_normalizer, residual: rel(implied, x) })
        }
        SaddleProblem::Poisson { lambda, x } => {
            if !(lambda > 0.0) || !(x > 0.0) {
                return Err(Error::param(format!("Poisson saddle needs lambda, x > 0; got {lambda}, {x}")));
            }
            let y = (x - lambda) / lambda;
            let z = y.ln_1p();
            let implied = lambda * z.exp();
            Ok(SaddleSolution { kind: SaddleKind::PoissonZ, value: z, derived: y, log_normalizer: x - lambda, residual: rel(implied, x) })
        }
        SaddleProblem::NegBinomial { r, qbar, x } => {
            if !(r > 0.0) || !(qbar > 0.0 && qbar < 1.0) || !(x > 0.0) {
                return Err(Error::param(format!("NB saddle needs r, x > 0 and qbar in (0, 1); got {r}, {qbar}, {x}")));
            }
            let pbar = 1.0 - qbar;
            let target = x / (r + x);
            let w = target.ln() - pbar.ln();
            let log_normalizer = r * (qbar.ln() - (-target).ln_1p());
            let implied = r * pbar * w.exp() / (1.0 - pbar * w.exp());
            Ok(SaddleSolution { kind: SaddleKind::NbW, value: w, derived: w.exp_m1(), log_normalizer, residual: rel(implied, x) })
        }
        SaddleProblem::BinomialTilde { n_trials, ptilde, x } => {
            let nf = n_trials as f64;
            if !(ptilde > 0.0 && ptilde < 1.0) || !(x > 0.0 && x < nf) {
                return Err(Error::param(format!("binomial saddle needs 0 < x < N and p in (0, 1); got x={x}, N={n_trials}")));
            }
            let h = x.ln() + (-ptilde).ln_1p() - ptilde.ln() - (nf - x).ln();
            let derived = h.exp_m1();
            // 1 + p (e^h - 1) = (1 - p) N / (N - x)
            let log_normalizer = nf * ((-ptilde).ln_1p() + nf.ln() - (nf - x).ln());
            let implied = nf * ptilde * h.exp() / (1.0 + ptilde * derived);
            Ok(SaddleSolution { kind: SaddleKind::BiHtilde, value: h, derived, log_normalizer, residual: rel(implied, x) })
        }
    }
}
