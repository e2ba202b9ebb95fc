//! Hierarchical prior over mixture means and variances.

use crate::error::{Error, Result};
use crate::spec::{Component, Hierarchy};
use crate::stats::LN_2PI;

/// log density of the scaled inverse chi-squared distribution with one
/// degree of freedom and scale `s2`, evaluated at `x`.
pub fn log_scaled_inv_chi2_nu1(x: f64, s2: f64) -> f64 {
    // (s2/2)^(1/2) / Gamma(1/2) * x^(-3/2) * exp(-s2 / (2x))
    0.5 * (0.5 * s2).ln() - 0.5 * std::f64::consts::PI.ln() - 1.5 * x.ln() - 0.5 * s2 / x
}

/// Gradient of the hierarchical log prior.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HyperGrad {
    pub means: Vec<f64>,
    pub widths: Vec<f64>,
    pub mu_star: f64,
    pub u_star2: f64,
    pub w_star2: f64,
}

/// Normal prior N(mu_star, u_star2) on each component mean, scaled
/// inverse chi-squared (nu = 1, scale w_star2) on each component variance
/// and on u_star2. The flat priors on mu_star and w_star2 add nothing.
pub fn hierarchical_hyperprior_logdensity(components: &[Component], h: &Hierarchy) -> Result<f64> {
    hyperprior_eval(components, h, false).map(|r| r.0)
}

pub fn hyperprior_eval(components: &[Component], h: &Hierarchy, want_grad: bool) -> Result<(f64, Option<HyperGrad>)> {
    if !(h.u_star2 > 0.0) || !(h.w_star2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hierarchy scales must be positive (u*^2 = {}, w*^2 = {})",
            h.u_star2, h.w_star2
        )));
    }
    let mut g = HyperGrad {
        means: vec![0.0; components.len()],
        widths: vec![0.0; components.len()],
        ..Default::default()
    };
    let mut total = 0.0;
    for (k, c) in components.iter().enumerate() {
        if !(c.width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "width of component {k} is {}",
                c.width
            )));
        }
        let dm = c.mean - h.mu_star;
        total += -0.5 * (LN_2PI + h.u_star2.ln() + dm * dm / h.u_star2);
        let v = c.width * c.width;
        total += log_scaled_inv_chi2_nu1(v, h.w_star2);
        if want_grad {
            g.means[k] = -dm / h.u_star2;
            g.mu_star += dm / h.u_star2;
            g.u_star2 += -0.5 / h.u_star2 + 0.5 * dm * dm / (h.u_star2 * h.u_star2);
            let dv = -1.5 / v + 0.5 * h.w_star2 / (v * v);
            g.widths[k] = dv * 2.0 * c.width;
            g.w_star2 += 0.5 / h.w_star2 - 0.5 / v;
        }
    }
    total += log_scaled_inv_chi2_nu1(h.u_star2, h.w_star2);
    if want_grad {
        g.u_star2 += -1.5 / h.u_star2 + 0.5 * h.w_star2 / (h.u_star2 * h.u_star2);
        g.w_star2 += 0.5 / h.w_star2 - 0.5 / h.u_star2;
    }
    Ok((total, want_grad.then_some(g)))
}
