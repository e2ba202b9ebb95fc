//! Which variable should be treated as independent: fit both directions
//! and compare how strongly the normalised residuals still correlate with
//! the regressor.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::inference::{default_init, fit_mle, MleFit};
use crate::model::ModelFunction;
use crate::spec::LikelihoodSpec;
use crate::stats;

/// Minimum difference in the largest |coefficient| needed to recommend a
/// direction.
pub const MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recommendation {
    XIndependent,
    YIndependent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub param_names: Vec<String>,
    pub values: Vec<f64>,
    pub loglike: f64,
    pub residuals: Vec<f64>,
    pub pearson: f64,
    pub spearman: f64,
}

impl DirectionReport {
    pub fn max_abs_coefficient(&self) -> f64 {
        self.pearson.abs().max(self.spearman.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityReport {
    /// y regressed on x.
    pub forward: Option<DirectionReport>,
    /// x regressed on y.
    pub inverse: Option<DirectionReport>,
    pub forward_error: Option<String>,
    pub inverse_error: Option<String>,
    pub recommendation: Recommendation,
    /// Correlations may be non-monotonic, so the recommendation is a hint
    /// to be checked against the residual plots.
    pub advisory: bool,
    pub margin: f64,
}

impl CausalityReport {
    pub fn partial(&self) -> bool {
        self.forward.is_none() || self.inverse.is_none()
    }
}

/// (y_o - f(x_o)) / sqrt(sigma_y^2 + sigma_int^2 + f'(x_o)^2 sigma_x^2).
pub fn normalised_residuals(d: &Dataset, model: &dyn ModelFunction, theta: &[f64], sigma_int: f64) -> Vec<f64> {
    let f = model.eval(d.x_obs(), theta);
    let slopes = model.jacobian(d.x_obs(), theta).diagonal();
    let sx = d.x_sigma();
    let sy = d.y_sigma();
    (0..d.len())
        .map(|i| {
            let var = sy[i] * sy[i] + sigma_int * sigma_int + slopes[i] * slopes[i] * sx[i] * sx[i];
            (d.y_obs()[i] - f[i]) / var.sqrt()
        })
        .collect()
}

fn direction(
    d: &Dataset,
    model: &dyn ModelFunction,
    spec: &LikelihoodSpec,
    init_theta: Option<&[f64]>,
) -> Result<DirectionReport> {
    let init = default_init(spec, d, model, init_theta)?;
    let fit: MleFit = fit_mle(spec, d, model, &init)?;
    let residuals = normalised_residuals(d, model, &fit.params.theta, fit.params.sigma_int);
    Ok(DirectionReport {
        pearson: stats::pearson(&residuals, d.x_obs()),
        spearman: stats::spearman(&residuals, d.x_obs()),
        param_names: fit.param_names,
        values: fit.values,
        loglike: fit.loglike,
        residuals,
    })
}

pub fn assess_causality(
    d: &Dataset,
    model_fwd: &dyn ModelFunction,
    model_inv: &dyn ModelFunction,
    spec: &LikelihoodSpec,
) -> CausalityReport {
    assess_causality_with(d, model_fwd, model_inv, spec, None, None)
}

/// As [`assess_causality`], with starting parameters for non-linear models.
pub fn assess_causality_with(
    d: &Dataset,
    model_fwd: &dyn ModelFunction,
    model_inv: &dyn ModelFunction,
    spec: &LikelihoodSpec,
    init_fwd: Option<&[f64]>,
    init_inv: Option<&[f64]>,
) -> CausalityReport {
    let swapped = d.swapped();
    let (fwd, inv) = rayon::join(
        || direction(d, model_fwd, spec, init_fwd),
        || direction(&swapped, model_inv, spec, init_inv),
    );
    let (forward, forward_error) = split(fwd);
    let (inverse, inverse_error) = split(inv);
    let recommendation = match (&forward, &inverse) {
        (Some(f), Some(i)) => {
            let (cf, ci) = (f.max_abs_coefficient(), i.max_abs_coefficient());
            if ci - cf > MARGIN {
                Recommendation::XIndependent
            } else if cf - ci > MARGIN {
                Recommendation::YIndependent
            } else {
                Recommendation::Inconclusive
            }
        }
        _ => Recommendation::Inconclusive,
    };
    CausalityReport {
        forward,
        inverse,
        forward_error,
        inverse_error,
        recommendation,
        advisory: true,
        margin: MARGIN,
    }
}

fn split(r: Result<DirectionReport>) -> (Option<DirectionReport>, Option<String>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    }
}
