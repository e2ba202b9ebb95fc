//! Maximum-likelihood fitting, posterior sampling and run diagnostics.

pub mod diagnostics;
pub mod layout;
pub mod mle;
pub mod nuts;
mod objective;
pub mod posterior;

pub use diagnostics::{bic, effective_sample_size, n_free_params, sigma_int_summary, split_rhat};
pub use layout::{default_bounds, Layout, Mode, PriorBounds, Transform};
pub use mle::{default_init, fit_mle, fit_mle_with, merged_bounds, MleFit, MleOptions};
pub use nuts::{run_chain, ChainOutput, LogDensity, NutsOptions};
pub use objective::log_likelihood;
pub use posterior::{
    emit_warnings, sample_posterior, select_ngauss, taylor_warning, NgaussRow, NgaussSelection, PosteriorResult,
    SamplerConfig, Warning,
};
