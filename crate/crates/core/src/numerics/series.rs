use serde::Serialize;

use crate::error::{Error, Result};

/// Outcome of [`series_sum`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesSum {
    pub value: f64,
    pub terms_used: usize,
    /// Bound on `|sum of the omitted terms|`.
    pub tail_bound: f64,
}

/// Sums `term(first), term(first + 1), ...` until the geometric tail bound
/// drops below `tol * max(|partial|, f64::MIN_POSITIVE)`.
///
/// `ratio_bound` must satisfy `|term(j+1)| <= ratio_bound * |term(j)|` for
/// every index past `first`; it is what makes the tail bound rigorous.
pub fn series_sum<F>(term: F, first: usize, ratio_bound: f64, tol: f64, max_terms: usize) -> Result<SeriesSum>
where
    F: Fn(usize) -> f64,
{
    if !(0.0..1.0).contains(&ratio_bound) {
        return Err(Error::param(format!("series ratio bound {ratio_bound} not in [0, 1)")));
    }
    let tail_factor = ratio_bound / (1.0 - ratio_bound);
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut last_tail = f64::INFINITY;
    for k in 0..max_terms {
        let t = term(first + k);
        // Kahan-compensated accumulation
        let yv = t - comp;
        let s = sum + yv;
        comp = (s - sum) - yv;
        sum = s;
        last_tail = t.abs() * tail_factor;
        if last_tail <= tol * sum.abs().max(f64::MIN_POSITIVE) {
            return Ok(SeriesSum { value: sum, terms_used: k + 1, tail_bound: last_tail });
        }
    }
    Err(Error::NonConvergence { terms: max_terms, last_tail })
}

/// `ln(1 + x) - x` without cancellation, for `x > -1`.
///
/// Uses `ln(1+x) - x = -x^2/(2+x) + 2 (r^3/3 + r^5/5 + ...)` with
/// `r = x/(2+x)`, which has no leading-order cancellation for small `x`.
pub fn log1pmx(x: f64) -> f64 {
    assert!(x > -1.0, "log1pmx domain is x > -1, got {x}");
    if x.abs() > 0.5 {
        return x.ln_1p() - x;
    }
    let r = x / (2.0 + x);
    let r2 = r * r;
    let mut pow = r * r2;
    let mut odd = 0.0;
    let mut k = 3.0;
    loop {
        let t = pow / k;
        odd += t;
        if t.abs() <= 1e-18 * odd.abs() || pow == 0.0 {
            break;
        }
        pow *= r2;
        k += 2.0;
    }
    -x * x / (2.0 + x) + 2.0 * odd
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_half() {
        let s = series_sum(|j| 0.5f64.powi(j as i32), 2, 0.5, 1e-15, 200).unwrap();
        assert!((s.value - 0.5).abs() < 1e-15);
        assert!(s.tail_bound <= 1e-15);
    }

    #[test]
    fn all_zero_terms() {
        let s = series_sum(|_| 0.0, 2, 0.5, 1e-15, 10).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.terms_used, 1);
    }

    #[test]
    fn non_convergence_reports_tail() {
        let e = series_sum(|j| 0.99f64.powi(j as i32), 0, 0.99, 1e-15, 10).unwrap_err();
        match e {
            Error::NonConvergence { terms, last_tail } => {
                assert_eq!(terms, 10);
                assert!(last_tail > 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lambda_star_series_matches_log_identity() {
        // sum_{j>=2} t^j / j = -ln(1-t) - t
        let (n, nu1, y) = (10.0, 0.1, 0.05);
        let t: f64 = nu1 * y / (1.0 - nu1);
        let s = series_sum(|j| t.powi(j as i32) / j as f64, 2, t.abs(), 1e-16, 500).unwrap();
        let closed = -n * ((-t).ln_1p() + t);
        assert!(((n * s.value) - closed).abs() <= 1e-12 * closed.abs());
    }

    #[test]
    fn log1pmx_small_and_large() {
        for &x in &[1e-12f64, -1e-9, 1e-5, -0.3, 0.49, 0.7, -0.9, 3.0] {
            let want = if x.abs() < 1e-3 {
                // Taylor: -x^2/2 + x^3/3 - x^4/4
                -x * x / 2.0 + x * x * x / 3.0 - x * x * x * x / 4.0
            } else {
                x.ln_1p() - x
            };
            let got = log1pmx(x);
            assert!(((got - want) / want).abs() < 1e-12, "x={x} got={got} want={want}");
        }
    }
}
