use serde::Serialize;

use super::lambda::{lambda_series, lambda_star_series};
use crate::error::{Error, Result};
use crate::moments::{gamma_of, MomentSet};

/// Operational stand-in for an asymptotic zone: `|x - mean| <= c * bound / ln n`
/// for little-o zones, `c * bound` for big-O zones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZoneProxy {
    pub c: f64,
    pub log_divisor: bool,
}

impl Default for ZoneProxy {
    fn default() -> Self {
        ZoneProxy { c: 1.0, log_divisor: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PredictionInputs {
    /// Block moments (with `n_blocks`) and the target value, for the Poisson results.
    Moments { moments: MomentSet, x: i64 },
    /// Chain length and success probability, for the NB and binomial results.
    Chain { n: usize, p: f64, x: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MainTermPrediction {
    pub theorem: u8,
    pub inputs: PredictionInputs,
    pub mean: f64,
    pub y: f64,
    pub log_main_term: f64,
    /// Half-width of the equivalence zone after applying the proxy.
    pub zone_half_width: f64,
    pub zone_divisor: f64,
    pub zone_c: f64,
    pub zone_ok: bool,
    /// `gamma (1/nu1 + n y^2)` for the point result, `gamma sqrt(n nu1) (1/nu1 + n y^2)` for tails.
    pub error_scale: Option<f64>,
    pub gamma: Option<f64>,
}

impl MainTermPrediction {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn divisor(n: f64, proxy: ZoneProxy, little_o: bool) -> f64 {
    if little_o && proxy.log_divisor {
        n.ln().max(1.0)
    } else {
        1.0
    }
}

/// Main term and zone flag for one of the four ratio results.
///
/// 1: point probabilities against `Poisson(n nu1)`, main term `e^{Lambda(y)}`.
/// 2: right tails against `Poisson(n lambda*)`, main term `e^{Lambda*(y)}`, needs `x > n nu1`.
/// 3: 2-runs against the matched negative binomial, main term 1.
/// 4: `sum eta_j (1 - eta_{j+1})` against the matched binomial, main term 1.
pub fn predict_main_term(theorem: u8, inputs: PredictionInputs, proxy: ZoneProxy) -> Result<MainTermPrediction> {
    match (theorem, inputs) {
        (1 | 2, PredictionInputs::Moments { moments, x }) => {
            let n = moments.n_blocks as f64;
            let nu1 = moments.nu1;
            let mean = n * nu1;
            if !(mean > 0.0) {
                return Err(Error::param(format!("n nu1 must be positive, got {mean}")));
            }
            let y = (x as f64 - mean) / mean;
            let gamma = gamma_of(&moments);
            let spread = 1.0 / nu1 + n * y * y;
            let (log_main_term, error_scale, little_o) = if theorem == 1 {
                (lambda_series(n, nu1, y)?.series, gamma * spread, true)
            } else {
                (lambda_star_series(n, nu1, y)?.series, gamma * mean.sqrt() * spread, false)
            };
            let zone_divisor = divisor(n, proxy, little_o);
            let zone_half_width = proxy.c * mean.sqrt() / zone_divisor;
            let mut zone_ok = (x as f64 - mean).abs() <= zone_half_width;
            if theorem == 2 {
                zone_ok &= x as f64 > mean;
            }
            Ok(MainTermPrediction {
                theorem,
                inputs,
                mean,
                y,
                log_main_term,
                zone_half_width,
                zone_divisor,
                zone_c: proxy.c,
                zone_ok,
                error_scale: Some(error_scale),
                gamma: Some(gamma),
            })
        }
        (3 | 4, PredictionInputs::Chain { n, p, x }) => {
            if n == 0 || !(p > 0.0 && p < 1.0) {
                return Err(Error::param(format!("need n >= 1 and p in (0, 1), got n={n}, p={p}")));
            }
            let nf = n as f64;
            let (mean, bound) = if theorem == 3 {
                (nf * p * p, (nf * p * p).min(nf.powf(2.0 / 3.0) * p.powf(2.0 / 3.0)))
            } else {
                (nf * p * (1.0 - p), (nf * p).min(nf.powf(2.0 / 3.0)))
            };
            let zone_divisor = divisor(nf, proxy, true);
            let zone_half_width = proxy.c * bound / zone_divisor;
            Ok(MainTermPrediction {
                theorem,
                inputs,
                mean,
                y: (x as f64 - mean) / mean,
                log_main_term: 0.0,
                zone_half_width,
                zone_divisor,
                zone_c: proxy.c,
                zone_ok: (x as f64 - mean).abs() <= zone_half_width,
                error_scale: None,
                gamma: None,
            })
        }
        (1..=4, _) => Err(Error::param(format!("theorem {theorem} got the wrong kind of inputs"))),
        _ => Err(Error::param(format!("theorem must be 1, 2, 3 or 4, got {theorem}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(nu1: f64, n_blocks: usize) -> MomentSet {
        MomentSet { nu1, nu2: 0.0, ex1x2: nu1 * nu1, c0: 1, n_blocks }
    }

    #[test]
    fn centered_point_has_unit_main_term() {
        let pred = predict_main_term(1, PredictionInputs::Moments { moments: ms(0.001, 20_000), x: 20 }, ZoneProxy::default()).unwrap();
        assert_eq!(pred.log_main_term, 0.0);
        assert!(pred.zone_ok);
        assert!(pred.to_json().unwrap().contains("\"theorem\":1"));
    }

    #[test]
    fn nb_zone_wider_than_poisson_zone() {
        let n = 1_000_000usize;
        let p = (n as f64).powf(-0.25);
        let mean = n as f64 * p * p;
        let nb = predict_main_term(3, PredictionInputs::Chain { n, p, x: mean as i64 }, ZoneProxy::default()).unwrap();
        let poisson = predict_main_term(1, PredictionInputs::Moments { moments: ms(p * p, n), x: mean as i64 }, ZoneProxy::default()).unwrap();
        assert!(nb.zone_half_width > 10.0 * poisson.zone_half_width);
    }

    #[test]
    fn binomial_zone_scale() {
        let n = 1_000_000usize;
        let p = (n as f64).powf(-1.0 / 3.0);
        let pred = predict_main_term(4, PredictionInputs::Chain { n, p, x: 30_000 }, ZoneProxy { c: 1.0, log_divisor: false }).unwrap();
        assert!((pred.zone_half_width - 1e4).abs() < 1e-6);
        assert!(!pred.zone_ok);
        assert!(predict_main_term(5, PredictionInputs::Chain { n, p, x: 0 }, ZoneProxy::default()).is_err());
    }
}
