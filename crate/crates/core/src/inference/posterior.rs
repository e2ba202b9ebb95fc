//! Posterior sampling runs, their summaries and warnings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::ModelFunction;
use crate::spec::{Hyperprior, LikelihoodSpec, ParamVector};
use crate::stats;

use super::diagnostics::{bic, effective_sample_size, n_free_params, split_rhat};
use super::layout::{Layout, Mode, PriorBounds, Transform};
use super::mle::{default_init, fit_mle_with, merged_bounds, MleOptions};
use super::nuts::{run_chain, LogDensity, NutsOptions};
use super::objective::Objective;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_warmup: usize,
    pub n_samples: usize,
    pub n_chains: usize,
    pub seed: u64,
    /// Prior boxes merged on top of the defaults (scales non-negative,
    /// everything else unbounded).
    pub prior_bounds: PriorBounds,
    /// Starting model parameters; required for non-linear models.
    pub init_theta: Option<Vec<f64>>,
    pub max_tree_depth: usize,
    pub target_accept: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_warmup: 700,
            n_samples: 5000,
            n_chains: 2,
            seed: 0,
            prior_bounds: PriorBounds::new(),
            init_theta: None,
            max_tree_depth: 10,
            target_accept: 0.8,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_chains == 0 || self.max_tree_depth == 0 {
            return Err(Error::InvalidConfig(
                "sample count, chain count and tree depth must be positive".into(),
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target_accept = {} is not in (0, 1)",
                self.target_accept
            )));
        }
        for (k, (lo, hi)) in &self.prior_bounds {
            if lo.is_nan() || hi.is_nan() || !(lo < hi) {
                return Err(Error::InvalidConfig(format!("prior box for {k} is [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    LowEss { param: String, ess: f64 },
    NearPriorEdge { param: String, value: f64, bound: f64 },
    AtPriorBound { param: String },
    TaylorExpansion { n_points: usize, first_index: usize },
    Unconverged { param: String, rhat: f64 },
    Divergences { count: usize },
    MleNotConverged,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::LowEss { param, ess } => write!(f, "only {ess:.0} effective samples for {param}"),
            Warning::NearPriorEdge { param, value, bound } => {
                write!(f, "peak of {param} at {value} is within 1% of the prior bound {bound}")
            }
            Warning::AtPriorBound { param } => write!(f, "maximum-likelihood {param} sits on its prior bound"),
            Warning::TaylorExpansion { n_points, first_index } => write!(
                f,
                "|f''| sigma_x exceeds |f'| at {n_points} points (first at row {first_index}); the linearised likelihood may be inaccurate"
            ),
            Warning::Unconverged { param, rhat } => write!(f, "R-hat for {param} is {rhat:.4}"),
            Warning::Divergences { count } => write!(f, "{count} divergent transitions after warmup"),
            Warning::MleNotConverged => write!(f, "the simplex did not converge within its evaluation budget"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorResult {
    pub param_names: Vec<String>,
    /// Draws of the natural parameters, chains concatenated in order.
    pub samples: Vec<Vec<f64>>,
    pub n_chains: usize,
    pub mle: ParamVector,
    pub mle_values: Vec<f64>,
    pub log_like_at_mle: f64,
    pub mle_converged: bool,
    pub mle_at_bound: Vec<String>,
    pub gelman_rubin: Vec<f64>,
    pub ess: Vec<f64>,
    pub n_free_params: usize,
    pub bic: f64,
    pub n_divergent: usize,
    pub step_sizes: Vec<f64>,
    pub warnings: Vec<Warning>,
    #[serde(skip)]
    pub prior_bounds: PriorBounds,
}

impl PosteriorResult {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.index(name)?;
        Some(self.samples.iter().map(|r| r[j]).collect())
    }

    pub fn mean(&self, name: &str) -> Option<f64> {
        self.column(name).map(|c| stats::mean(&c))
    }

    pub fn std(&self, name: &str) -> Option<f64> {
        self.column(name).map(|c| stats::std_sample(&c))
    }

    pub fn n_draws(&self) -> usize {
        self.samples.len()
    }

    fn chain_columns(&self, j: usize) -> Vec<Vec<f64>> {
        let len = self.samples.len() / self.n_chains.max(1);
        (0..self.n_chains)
            .map(|c| self.samples[c * len..(c + 1) * len].iter().map(|r| r[j]).collect())
            .collect()
    }
}

struct Target<'a> {
    obj: Objective<'a>,
}

impl LogDensity for Target<'_> {
    fn dim(&self) -> usize {
        self.obj.layout.n_unconstrained()
    }

    fn logp_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        self.obj.log_posterior(q, grad)
    }
}

/// Fit the maximum-likelihood point, then run `n_chains` independent
/// no-U-turn chains started near it.
pub fn sample_posterior(
    spec: &LikelihoodSpec,
    d: &Dataset,
    model: &dyn ModelFunction,
    cfg: &SamplerConfig,
) -> Result<PosteriorResult> {
    cfg.validate()?;
    let bounds = merged_bounds(spec, &cfg.prior_bounds);
    let layout = Layout::new(spec, model, &bounds)?;

    let init = default_init(spec, d, model, cfg.init_theta.as_deref())?;
    let mut x_init = layout.from_params(&init)?;
    for (i, v) in x_init.iter_mut().enumerate() {
        if let Transform::Interval(lo, hi) = layout.transform(i) {
            let pad = 1e-3 * (hi - lo);
            *v = v.clamp(lo + pad, hi - pad);
        } else {
            let (lo, hi) = layout.transform(i).bounds();
            *v = v.clamp(lo, hi);
        }
    }
    let init = layout.to_params(&x_init);
    let mle = fit_mle_with(
        spec,
        d,
        model,
        &init,
        &MleOptions {
            bounds: cfg.prior_bounds.clone(),
            simplex: None,
        },
    )?;

    let y_scale = stats::var_pop(d.y_obs()).sqrt().max(1e-12);
    let floors: Vec<f64> = mle.values.iter().map(|v| 1e-3 * (v.abs() + y_scale)).collect();
    let z_start = layout.from_natural(&mle.values, Mode::Sample, &floors);
    let opts = NutsOptions {
        n_warmup: cfg.n_warmup,
        n_samples: cfg.n_samples,
        max_depth: cfg.max_tree_depth,
        target_accept: cfg.target_accept,
        ..NutsOptions::default()
    };

    let target = Target {
        obj: Objective {
            layout: &layout,
            d,
            model,
        },
    };
    let chains: Vec<Result<_>> = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c as u64);
            let mut z0 = z_start.clone();
            let mut scratch = vec![0.0; z0.len()];
            for attempt in 0..100 {
                let scale = 0.1 / (1 + attempt / 10) as f64;
                let trial: Vec<f64> = z_start
                    .iter()
                    .map(|z| z + scale * rng.random_range(-1.0..1.0))
                    .collect();
                if target.logp_grad(&trial, &mut scratch).is_finite() {
                    z0 = trial;
                    break;
                }
            }
            run_chain(&target, &z0, &opts, &mut rng)
        })
        .collect();

    let mut samples = Vec::with_capacity(cfg.n_chains * cfg.n_samples);
    let mut n_divergent = 0;
    let mut step_sizes = Vec::new();
    for ch in chains {
        let ch = ch?;
        n_divergent += ch.n_divergent;
        step_sizes.push(ch.step_size);
        samples.extend(ch.draws.iter().map(|z| layout.to_natural(z, Mode::Sample)));
    }

    let k = n_free_params(spec, layout.n_theta);
    let mut result = PosteriorResult {
        param_names: layout.names.clone(),
        samples,
        n_chains: cfg.n_chains,
        mle: mle.params.clone(),
        mle_values: mle.values.clone(),
        log_like_at_mle: mle.loglike,
        mle_converged: mle.converged,
        mle_at_bound: mle.at_bound.clone(),
        gelman_rubin: vec![],
        ess: vec![],
        n_free_params: k,
        bic: bic(mle.loglike, k, d.len()),
        n_divergent,
        step_sizes,
        warnings: vec![],
        prior_bounds: bounds,
    };
    for j in 0..layout.n_natural() {
        let cols = result.chain_columns(j);
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        result.gelman_rubin.push(split_rhat(&refs));
        result.ess.push(effective_sample_size(&refs));
    }
    result.warnings = emit_warnings(&result, d, model, &mle.params.theta);
    Ok(result)
}

/// Diagnostics of a finished run: low effective sample size, a peak near
/// the edge of a finite prior box or exactly on a bound, failure of the
/// local linearisation of the model, poor mixing, divergences and an
/// unconverged simplex.
pub fn emit_warnings(
    result: &PosteriorResult,
    d: &Dataset,
    model: &dyn ModelFunction,
    theta_hat: &[f64],
) -> Vec<Warning> {
    let mut w = Vec::new();
    for (name, ess) in result.param_names.iter().zip(&result.ess) {
        if *ess < 100.0 {
            w.push(Warning::LowEss {
                param: name.clone(),
                ess: *ess,
            });
        }
    }
    for (name, value) in result.param_names.iter().zip(&result.mle_values) {
        if let Some(&(lo, hi)) = result.prior_bounds.get(name) {
            if lo.is_finite() && hi.is_finite() {
                let tol = 0.01 * (hi - lo);
                for bound in [lo, hi] {
                    if (value - bound).abs() <= tol {
                        w.push(Warning::NearPriorEdge {
                            param: name.clone(),
                            value: *value,
                            bound,
                        });
                    }
                }
            }
        }
    }
    for name in &result.mle_at_bound {
        w.push(Warning::AtPriorBound { param: name.clone() });
    }
    w.extend(taylor_warning(d, model, theta_hat));
    for (name, r) in result.param_names.iter().zip(&result.gelman_rubin) {
        if r - 1.0 > 0.01 {
            w.push(Warning::Unconverged {
                param: name.clone(),
                rhat: *r,
            });
        }
    }
    if result.n_divergent > 0 {
        w.push(Warning::Divergences {
            count: result.n_divergent,
        });
    }
    if !result.mle_converged {
        w.push(Warning::MleNotConverged);
    }
    w
}

/// Points where |f''| sigma_x exceeds |f'|, so that the first-order
/// expansion of the model about x_o is unreliable.
pub fn taylor_warning(d: &Dataset, model: &dyn ModelFunction, theta_hat: &[f64]) -> Option<Warning> {
    let pw = model.pointwise()?;
    let sx = d.x_sigma();
    let bad: Vec<usize> = d
        .x_obs()
        .iter()
        .enumerate()
        .filter(|(i, &x)| pw.curvature(x, theta_hat).abs() * sx[*i] > pw.slope(x, theta_hat).abs())
        .map(|(i, _)| i)
        .collect();
    bad.first().map(|&first| Warning::TaylorExpansion {
        n_points: bad.len(),
        first_index: first,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgaussRow {
    pub n_gauss: usize,
    pub loglike: Option<f64>,
    pub bic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgaussSelection {
    pub best: usize,
    pub table: Vec<NgaussRow>,
}

/// Fit mixtures with 1..=max_ng components and pick the one with the
/// smallest information criterion. Failed fits are recorded and skipped.
pub fn select_ngauss(
    d: &Dataset,
    model: &dyn ModelFunction,
    max_ng: usize,
    hyperprior: Hyperprior,
    init_theta: Option<&[f64]>,
) -> Result<NgaussSelection> {
    if max_ng == 0 {
        return Err(Error::InvalidConfig("max_ng must be at least 1".into()));
    }
    let table: Vec<NgaussRow> = (1..=max_ng)
        .into_par_iter()
        .map(|k| {
            let spec = LikelihoodSpec::gmm(k, hyperprior);
            let fit = default_init(&spec, d, model, init_theta)
                .and_then(|init| fit_mle_with(&spec, d, model, &init, &MleOptions::default()));
            match fit {
                Ok(f) => NgaussRow {
                    n_gauss: k,
                    loglike: Some(f.loglike),
                    bic: Some(bic(f.loglike, n_free_params(&spec, model.n_params()), d.len())),
                    error: None,
                },
                Err(e) => NgaussRow {
                    n_gauss: k,
                    loglike: None,
                    bic: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let best = table
        .iter()
        .filter_map(|r| r.bic.map(|b| (r.n_gauss, b)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::InvalidConfig("every mixture fit failed".into()))?;
    Ok(NgaussSelection { best, table })
}
