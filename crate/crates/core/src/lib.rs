//! Bayesian nonparametric regression with an adaptive sum of tensor-product
//! B-spline atoms, fitted by reversible-jump MCMC.
//!
//! The mean function is
//!
//! ```text
//! f(x) = β₀ + Σⱼ βⱼ Πₗ B_{cₗ}(x_{νₗ}; ξₗ),   J ~ Poi(M),  M ~ Ga(a_γ, b_γ)
//! ```
//!
//! with Gaussian noise for regression and a probit link for binary labels.

pub mod basis;
pub mod benchmarks;
pub mod commands;
pub mod config;
pub mod dist;
pub mod error;
pub mod io;
pub mod model;
pub mod probit;
pub mod sampler;
pub mod tensor;

pub use basis::{bspline_support, eval_bspline, KnotSequence, Support};
pub use error::{MlabsError, Result};
pub use model::{
    fit_defaults, log_likelihood, log_prior, mean_function, predict, CoefScale,
    CoefficientProposal, Dataset, Hyperparams, ModelState, Prediction,
};
pub use probit::{predict_prob, run_probit_chain};
pub use sampler::{run_chain, run_chain_with, Chain, ChainKind, ChainOptions};
pub use tensor::{design_column, eval_atom, AtomFactor, BasisAtom};
