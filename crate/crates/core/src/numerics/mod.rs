//! Numerical substrate: log-domain reals, exact rationals, complex values,
//! series summation and periodic quadrature.

mod logreal;
mod quadrature;
pub mod rational;
pub mod scaled;
mod series;

pub use logreal::{log_sum_exp, LogReal};
pub use quadrature::{nodes_for_degree, periodic_quadrature};
pub use rational::Rational;
pub use series::{log1pmx, series_sum, SeriesSum};

/// Complex scalar used for characteristic-function arguments `u = h + it`.
pub type ComplexVal = num_complex::Complex64;

/// Natural log of `k!`.
pub fn ln_factorial(k: u64) -> f64 {
    statrs::function::factorial::ln_factorial(k)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}
