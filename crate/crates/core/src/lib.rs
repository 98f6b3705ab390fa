//! Exact distributions of sliding-window statistics over Bernoulli chains and
//! their Poisson, negative-binomial and binomial large-deviation approximations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod approx;
pub mod exact;
pub mod harness;
pub mod ldcore;
pub mod metrics;
pub mod moments;
pub mod numerics;

pub use error::{Error, Result};
