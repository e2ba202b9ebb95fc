//! Log-likelihood kernels.

mod diag;
mod general;
mod hyper;

pub use diag::{diag_eval, loglike_gmm_diag, loglike_mnr_diag, loglike_prof_diag, loglike_unif_diag, DiagGrad};
pub use general::{loglike_general, LatentPrior};
pub use hyper::{hierarchical_hyperprior_logdensity, hyperprior_eval, log_scaled_inv_chi2_nu1, HyperGrad};
