//! Large-deviation machinery: Cramer-type series, saddle points, exponential
//! tilting, Heinrich factorizations and main-term predictions.

mod heinrich;
mod lambda;
mod predict;
mod saddle;
mod tilt;

pub use heinrich::{
    hat_e_bound, heinrich_cf_2runs, heinrich_cf_generic, heinrich_cf_n11, heinrich_hat_e, BlockOracle, DenominatorVariant,
    FactorizedCf, HatE, INSTABILITY_FLOOR, MAX_SPAN,
};
pub use lambda::{expansion_ratio, lambda_closed, lambda_series, lambda_star_closed, lambda_star_series, SeriesValue};
pub use predict::{predict_main_term, MainTermPrediction, PredictionInputs, ZoneProxy};
pub use saddle::{solve_saddle, SaddleKind, SaddleProblem, SaddleSolution};
pub use tilt::{inversion_check, tilt_pmf};
