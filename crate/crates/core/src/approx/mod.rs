//! Poisson, negative-binomial and binomial approximating laws with their
//! moment-matched parameter selections.

mod family;
mod params;

pub use family::ApproxFamily;
pub use params::{
    bi_params, lambda_star, n11_mean_var, nb_params, two_runs_mean_var, BIParams, NBParams,
    DEFAULT_BI_VARIANCE_CONSTANT,
};
