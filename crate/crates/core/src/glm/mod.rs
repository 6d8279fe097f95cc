//! Families, likelihood derivatives and the two per-subset fitting engines:
//! closed-form least squares from Gram sums, and damped Newton–Raphson.

mod block;
mod family;
mod fit;
mod likelihood;

pub use block::{DesignBlock, LinearPredictor, MeanResponse, ResponseBlock};
pub use family::{Categories, Family, FamilyKind};
pub(crate) use fit::solve_normal_equations;
pub use fit::{
    accumulate_gram, fit_irls, fit_ols, FitConfig, GramStats, SubsetFit, SATURATION_WEIGHT,
    SEPARATION_LIMIT,
};
pub use likelihood::{
    linear_predictor, log_likelihood, logistic, mean_from_eta, observed_information, score,
    softplus, POISSON_ETA_LIMIT,
};
