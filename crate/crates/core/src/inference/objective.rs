//! Log-likelihood and log-prior as functions of the flat natural vector.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::{diag_eval, hyperprior_eval, loglike_general, LatentPrior};
use crate::model::ModelFunction;
use crate::spec::{LikelihoodSpec, Method, ParamVector};

use super::layout::{Layout, Mode};

/// Log-likelihood of `params` under `spec`, choosing the per-point kernel
/// when the errors are independent and the model is pointwise, and the
/// dense-covariance kernel otherwise.
pub fn log_likelihood(
    spec: &LikelihoodSpec,
    d: &Dataset,
    model: &dyn ModelFunction,
    params: &ParamVector,
) -> Result<f64> {
    spec.validate()?;
    let sigma_int = if spec.include_intrinsic_scatter {
        params.sigma_int
    } else {
        0.0
    };
    if let (true, Some(pw)) = (d.is_diagonal(), model.pointwise()) {
        return diag_eval(spec.method, d, pw, &params.theta, sigma_int, params.components(), false).map(|r| r.0);
    }
    let latent = match spec.method {
        Method::Mnr => {
            let c = params
                .components()
                .first()
                .ok_or_else(|| Error::InvalidParameter("mnr needs a latent mean and width".into()))?;
            Some(LatentPrior::shared(c.mean, c.width, d.len()))
        }
        Method::Gmm => {
            return Err(Error::InvalidSpec(
                "the mixture prior needs independent per-point errors and a pointwise model".into(),
            ))
        }
        _ => None,
    };
    loglike_general(spec.method, d, model, &params.theta, sigma_int, latent.as_ref())
}

pub(crate) struct Objective<'a> {
    pub layout: &'a Layout,
    pub d: &'a Dataset,
    pub model: &'a dyn ModelFunction,
}

pub(crate) struct Evaluation {
    pub loglike: f64,
    pub log_prior: f64,
    pub grad: Option<Vec<f64>>,
}

impl<'a> Objective<'a> {
    pub fn analytic_gradient(&self) -> bool {
        self.d.is_diagonal() && self.model.pointwise().is_some()
    }

    /// Log-likelihood and the hierarchical prior on the mixture. With
    /// `sampling` the prior also carries the Jacobian from component
    /// variances to widths, since the sampler moves in widths.
    pub fn eval(&self, x: &[f64], want_grad: bool, sampling: bool) -> Result<Evaluation> {
        let l = self.layout;
        let spec = &l.spec;
        let pv = l.to_params(x);
        let want_grad = want_grad && self.analytic_gradient();
        let mut grad = want_grad.then(|| vec![0.0; x.len()]);

        let loglike = if want_grad {
            let pw = self.model.pointwise().expect("checked above");
            let sigma_int = if spec.include_intrinsic_scatter {
                pv.sigma_int
            } else {
                0.0
            };
            let (v, g) = diag_eval(spec.method, self.d, pw, &pv.theta, sigma_int, pv.components(), true)?;
            let g = g.expect("gradient requested");
            let out = grad.as_mut().unwrap();
            let p = l.n_theta;
            out[..p].copy_from_slice(&g.theta);
            let mut i = p;
            if spec.include_intrinsic_scatter {
                out[i] = g.sigma_int;
                i += 1;
            }
            match spec.method {
                Method::Mnr => {
                    out[i] = g.means[0];
                    out[i + 1] = g.widths[0];
                }
                Method::Gmm => {
                    let k = spec.n_gauss;
                    out[i..i + k].copy_from_slice(&g.weights);
                    out[i + k..i + 2 * k].copy_from_slice(&g.means);
                    out[i + 2 * k..i + 3 * k].copy_from_slice(&g.widths);
                }
                _ => {}
            }
            v
        } else {
            log_likelihood(spec, self.d, self.model, &pv)?
        };

        let mut log_prior = 0.0;
        if let (true, Some(h)) = (spec.is_hierarchical(), pv.hierarchy.as_ref()) {
            let comps = pv.components();
            let (v, hg) = hyperprior_eval(comps, h, want_grad)?;
            log_prior += v;
            if sampling {
                log_prior += comps.iter().map(|c| (2.0 * c.width).ln()).sum::<f64>();
            }
            if let (Some(out), Some(hg)) = (grad.as_mut(), hg) {
                let k = spec.n_gauss;
                let m0 = l.n_theta + usize::from(spec.include_intrinsic_scatter) + k;
                for j in 0..k {
                    out[m0 + j] += hg.means[j];
                    out[m0 + k + j] += hg.widths[j] + if sampling { 1.0 / comps[j].width } else { 0.0 };
                }
                let h0 = m0 + 2 * k;
                out[h0] += hg.mu_star;
                out[h0 + 1] += hg.u_star2;
                out[h0 + 2] += hg.w_star2;
            }
        }
        Ok(Evaluation {
            loglike,
            log_prior,
            grad,
        })
    }

    /// Unnormalised log posterior in unconstrained sampling coordinates,
    /// with its gradient. Returns -inf outside the support.
    pub fn log_posterior(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let x = self.layout.to_natural(z, Mode::Sample);
        if self.analytic_gradient() {
            match self.eval(&x, true, true) {
                Ok(e) if (e.loglike + e.log_prior).is_finite() => {
                    let lj = self.layout.pullback(z, e.grad.as_ref().unwrap(), grad);
                    let v = e.loglike + e.log_prior + lj;
                    if grad.iter().all(|g| g.is_finite()) {
                        v
                    } else {
                        f64::NEG_INFINITY
                    }
                }
                _ => f64::NEG_INFINITY,
            }
        } else {
            let f0 = self.log_posterior_value(z);
            if !f0.is_finite() {
                return f64::NEG_INFINITY;
            }
            let mut zz = z.to_vec();
            for j in 0..z.len() {
                let h = 1e-6 * (1.0 + z[j].abs());
                zz[j] = z[j] + h;
                let fp = self.log_posterior_value(&zz);
                zz[j] = z[j] - h;
                let fm = self.log_posterior_value(&zz);
                zz[j] = z[j];
                grad[j] = (fp - fm) / (2.0 * h);
            }
            if grad.iter().all(|g| g.is_finite()) {
                f0
            } else {
                f64::NEG_INFINITY
            }
        }
    }

    pub fn log_posterior_value(&self, z: &[f64]) -> f64 {
        let x = self.layout.to_natural(z, Mode::Sample);
        let mut scratch = vec![0.0; z.len()];
        let lj = self.layout.pullback(z, &vec![0.0; x.len()], &mut scratch);
        match self.eval(&x, false, true) {
            Ok(e) => {
                let v = e.loglike + e.log_prior + lj;
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }
}
