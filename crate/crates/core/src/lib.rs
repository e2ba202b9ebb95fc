//! Straight-line and nonlinear regression with uncertainties on both axes
//! and intrinsic scatter.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod causality;
pub mod cubic;
pub mod data;
pub mod error;
pub mod inference;
pub mod likelihood;
pub mod mock;
pub mod model;
pub mod optim;
pub mod spec;
pub mod stats;

pub use analytic::{mnr_mle, prof_mle, unif_bias, unif_mle, HomoscedasticErrors, SampleMoments};
pub use causality::{assess_causality, CausalityReport, Recommendation};
pub use cubic::{real_roots, real_roots_oracle, CubicBranch, CubicCoeffs};
pub use data::{assemble_covariance, validate_dataset, CovarianceBlocks, Dataset, RawDataset, Uncertainty};
pub use error::{Error, Result};
pub use inference::{
    bic, default_init, fit_mle, fit_mle_with, log_likelihood, sample_posterior, select_ngauss, sigma_int_summary,
    MleFit, MleOptions, PosteriorResult, PriorBounds, SamplerConfig, Warning,
};
pub use mock::{bias_of_fit, gen_mock, BiasReport, MockConfig, MockTruth, TrueLine, XtDist};
pub use model::{Jacobian, Linear, LinearisedModel, ModelFunction, PointwiseModel};
pub use spec::{Component, Hierarchy, Hyperprior, LikelihoodSpec, Method, ParamVector};
