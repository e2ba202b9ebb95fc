//! Maximum-likelihood fits by the simplex method.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::ModelFunction;
use crate::optim::{minimize, NelderMeadOptions};
use crate::spec::{Component, Hierarchy, LikelihoodSpec, Method, ParamVector};
use crate::stats;

use super::layout::{default_bounds, Layout, Mode, PriorBounds, Transform};
use super::objective::Objective;

#[derive(Debug, Clone, Default)]
pub struct MleOptions {
    /// Overrides merged on top of [`default_bounds`].
    pub bounds: PriorBounds,
    /// Simplex settings; `None` uses [`NelderMeadOptions::for_dim`].
    pub simplex: Option<NelderMeadOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub params: ParamVector,
    pub param_names: Vec<String>,
    /// Natural parameters in `param_names` order.
    pub values: Vec<f64>,
    pub loglike: f64,
    /// Maximised objective: the log-likelihood plus the hierarchical
    /// mixture prior when that is active.
    pub objective: f64,
    pub converged: bool,
    pub evaluations: usize,
    /// Parameters that ended exactly on a prior bound.
    pub at_bound: Vec<String>,
}

impl MleFit {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.param_names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

pub fn merged_bounds(spec: &LikelihoodSpec, overrides: &PriorBounds) -> PriorBounds {
    let mut b = default_bounds(spec);
    for (k, v) in overrides {
        b.insert(k.clone(), *v);
    }
    b
}

/// Fit with default bounds and simplex settings.
pub fn fit_mle(spec: &LikelihoodSpec, d: &Dataset, model: &dyn ModelFunction, init: &ParamVector) -> Result<MleFit> {
    fit_mle_with(spec, d, model, init, &MleOptions::default())
}

pub fn fit_mle_with(
    spec: &LikelihoodSpec,
    d: &Dataset,
    model: &dyn ModelFunction,
    init: &ParamVector,
    opts: &MleOptions,
) -> Result<MleFit> {
    let bounds = merged_bounds(spec, &opts.bounds);
    let layout = Layout::new(spec, model, &bounds)?;
    let x0 = layout.from_params(init)?;
    for (i, v) in x0.iter().enumerate() {
        let (lo, hi) = layout.transform(i).bounds();
        if !v.is_finite() || *v < lo || *v > hi {
            return Err(Error::InvalidParameter(format!(
                "initial {} = {v} lies outside [{lo}, {hi}]",
                layout.names[i]
            )));
        }
    }
    let obj = Objective {
        layout: &layout,
        d,
        model,
    };
    let value = |x: &[f64]| -> f64 {
        match obj.eval(x, false, false) {
            Ok(e) => e.loglike + e.log_prior,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    if !value(&x0).is_finite() {
        return Err(Error::NonFiniteInit);
    }
    let floors = vec![0.0; x0.len()];
    let z0 = layout.from_natural(&x0, Mode::Optimise, &floors);
    let neg = |z: &[f64]| -value(&layout.to_natural(z, Mode::Optimise));
    let nm = opts
        .simplex
        .clone()
        .unwrap_or_else(|| NelderMeadOptions::for_dim(z0.len()));
    let mut res = minimize(neg, &z0, &nm);
    let mut evals = res.evals;
    // The profile likelihood often has a second mode with sigma_int on its
    // lower bound, which a start in the interior does not reach.
    if let (Method::Prof, Some(i)) = (spec.method, layout.index_of("sigma_int")) {
        let (lo, _) = layout.transform(i).bounds();
        if lo.is_finite() && x0[i] != lo {
            let mut x1 = x0.clone();
            x1[i] = lo;
            if value(&x1).is_finite() {
                let alt = minimize(neg, &layout.from_natural(&x1, Mode::Optimise, &floors), &nm);
                evals += alt.evals;
                if alt.fx < res.fx {
                    res = alt;
                }
            }
        }
    }
    let mut z = res.x;
    let mut best = -res.fx;

    // Parameters that want to sit on a bound are moved exactly onto it.
    let mut at_bound = Vec::new();
    for i in 0..layout.n_natural() {
        let Some(iz) = unconstrained_index(&layout, i) else {
            continue;
        };
        let snapped = match layout.transform(i) {
            Transform::Free => continue,
            Transform::Lower(_) | Transform::Upper(_) => 0.0,
            Transform::Interval(..) => std::f64::consts::FRAC_PI_2.copysign(z[iz].sin()),
        };
        let mut trial = z.clone();
        trial[iz] = snapped;
        let v = value(&layout.to_natural(&trial, Mode::Optimise));
        evals += 1;
        if v >= best - 1e-10 {
            z = trial;
            best = best.max(v);
            at_bound.push(layout.names[i].clone());
        }
    }

    let x = layout.to_natural(&z, Mode::Optimise);
    let e = obj.eval(&x, false, false)?;
    Ok(MleFit {
        params: layout.to_params(&x),
        param_names: layout.names.clone(),
        values: x,
        loglike: e.loglike,
        objective: e.loglike + e.log_prior,
        converged: res.converged,
        evaluations: evals,
        at_bound,
    })
}

/// Position in the unconstrained vector of a scalar-mapped natural
/// parameter; `None` for mixture weights and means.
fn unconstrained_index(layout: &Layout, i: usize) -> Option<usize> {
    if layout.spec.method != Method::Gmm {
        return Some(i);
    }
    let g = layout.n_theta + usize::from(layout.spec.include_intrinsic_scatter);
    let k = layout.spec.n_gauss;
    if i < g {
        Some(i)
    } else if i < g + 2 * k {
        None
    } else {
        Some(i - 1)
    }
}

/// Data-driven starting point: least squares for straight lines
/// (`theta0` otherwise), scatter from the excess residual variance, and
/// latent-prior parameters from the moments of the observed abscissae.
pub fn default_init(
    spec: &LikelihoodSpec,
    d: &Dataset,
    model: &dyn ModelFunction,
    theta0: Option<&[f64]>,
) -> Result<ParamVector> {
    spec.validate()?;
    let x = d.x_obs();
    let y = d.y_obs();
    let sx = d.x_sigma();
    let sy = d.y_sigma();
    let theta = match theta0 {
        Some(t) => {
            if t.len() != model.n_params() {
                return Err(Error::DimensionMismatch(format!(
                    "init_theta has {} entries, model has {} parameters",
                    t.len(),
                    model.n_params()
                )));
            }
            t.to_vec()
        }
        None => match model.pointwise() {
            Some(pw) if pw.is_straight_line() => {
                let m = crate::analytic::SampleMoments::from_xy(x, y);
                if !(m.var_x > 0.0) {
                    return Err(Error::DegenerateAbscissa);
                }
                let a = m.cov_xy / m.var_x;
                vec![a, m.mean_y - a * m.mean_x]
            }
            _ => {
                return Err(Error::InvalidConfig(
                    "a starting point for the model parameters is required for non-linear models".into(),
                ))
            }
        },
    };

    let f = model.eval(x, &theta);
    let slopes = model.jacobian(x, &theta).diagonal();
    let resid: Vec<f64> = f.iter().zip(y).map(|(a, b)| b - a).collect();
    let vr = stats::var_pop(&resid);
    let err2 = stats::mean(
        &(0..d.len())
            .map(|i| sy[i] * sy[i] + slopes[i] * slopes[i] * sx[i] * sx[i])
            .collect::<Vec<_>>(),
    );
    let mut sigma_int = if spec.include_intrinsic_scatter {
        (vr - err2).max(0.01 * vr).sqrt()
    } else {
        0.0
    };
    if !sigma_int.is_finite() {
        sigma_int = 1.0;
    }
    let mut pv = ParamVector::new(theta, sigma_int);

    let mx = stats::mean(x);
    let vx = stats::var_pop(x);
    let mean_sx2 = stats::mean(&sx.iter().map(|s| s * s).collect::<Vec<_>>());
    let spread = (vx - mean_sx2).max(0.01 * vx).max(1e-12).sqrt();
    match spec.method {
        Method::Mnr => pv = pv.with_gaussian(mx, spread),
        Method::Gmm => {
            let k = spec.n_gauss;
            let mut sorted = x.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mut comps: Vec<Component> = (0..k)
                .map(|j| Component {
                    weight: 1.0 / k as f64,
                    mean: stats::quantile_sorted(&sorted, (j as f64 + 0.5) / k as f64),
                    width: spread / k as f64,
                })
                .collect();
            let gap = 1e-3 * spread;
            for j in 1..k {
                if comps[j].mean <= comps[j - 1].mean {
                    comps[j].mean = comps[j - 1].mean + gap;
                }
            }
            pv = pv.with_components(comps);
            if spec.is_hierarchical() {
                pv = pv.with_hierarchy(Hierarchy {
                    mu_star: mx,
                    u_star2: vx.max(1e-12),
                    w_star2: (spread / k as f64).powi(2),
                });
            }
        }
        _ => {}
    }
    Ok(pv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{mnr_mle, moments, unif_mle, HomoscedasticErrors};
    use crate::model::Linear;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn mock(seed: u64, n: usize) -> Dataset {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = Normal::new(0.0, 1.0).unwrap();
        let (sx, sy, sig): (f64, f64, f64) = (1.0, 2.0, 2.0);
        let mut xo = Vec::new();
        let mut yo = Vec::new();
        for _ in 0..n {
            let xt = 10.0 + 4.0 * g.sample(&mut rng);
            xo.push(xt + sx * g.sample(&mut rng));
            yo.push(3.0 * xt + 1.0 + (sy * sy + sig * sig).sqrt() * g.sample(&mut rng));
        }
        Dataset::diagonal(xo, yo, vec![sx; n], vec![sy; n]).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-12)
    }

    #[test]
    fn unif_and_mnr_match_closed_forms() {
        let d = mock(3, 500);
        let m = moments(&d);
        let e = HomoscedasticErrors::new(1.0, 2.0);
        let model = Linear::new();

        let spec = LikelihoodSpec::new(Method::Unif);
        let fit = fit_mle(&spec, &d, &model, &default_init(&spec, &d, &model, None).unwrap()).unwrap();
        let u = unif_mle(&m, &e).unwrap();
        assert!(rel(fit.params.theta[0], u.a) < 1e-4);
        assert!(rel(fit.params.theta[1], u.b) < 1e-4);
        assert!(rel(fit.params.sigma_int.powi(2) + 4.0, u.s2) < 1e-4);

        let spec = LikelihoodSpec::new(Method::Mnr);
        let fit = fit_mle(&spec, &d, &model, &default_init(&spec, &d, &model, None).unwrap()).unwrap();
        let c = mnr_mle(&m, &e).unwrap();
        let comp = fit.params.components()[0];
        assert!(rel(fit.params.theta[0], c.a) < 1e-4, "{} {}", fit.params.theta[0], c.a);
        assert!(rel(fit.params.theta[1], c.b) < 1e-4);
        assert!(rel(fit.params.sigma_int.powi(2) + 4.0, c.s2) < 1e-4);
        assert!(rel(comp.mean, c.mu) < 1e-4);
        assert!(rel(comp.width.powi(2), c.w2) < 1e-4);
    }

    #[test]
    fn exact_line_is_recovered() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| -1.5 * v + 4.0).collect();
        let d = Dataset::diagonal(x, y, vec![0.0; 20], vec![0.3; 20]).unwrap();
        let model = Linear::new();
        for method in [Method::Unif, Method::Prof, Method::Mnr] {
            let spec = LikelihoodSpec::new(method);
            let fit = fit_mle(&spec, &d, &model, &default_init(&spec, &d, &model, None).unwrap()).unwrap();
            assert!((fit.params.theta[0] + 1.5).abs() < 1e-8, "{method}: {:?}", fit.params);
            assert!((fit.params.theta[1] - 4.0).abs() < 1e-8, "{method}: {:?}", fit.params);
            assert_eq!(fit.params.sigma_int, 0.0, "{method}");
            assert!(fit.at_bound.contains(&"sigma_int".to_string()));
        }
    }

    #[test]
    fn init_outside_box_is_rejected() {
        let d = mock(1, 50);
        let model = Linear::new();
        let spec = LikelihoodSpec::new(Method::Unif);
        let mut opts = MleOptions::default();
        opts.bounds.insert("A".into(), (0.0, 1.0));
        let init = ParamVector::new(vec![3.0, 1.0], 1.0);
        assert!(fit_mle_with(&spec, &d, &model, &init, &opts).is_err());
    }
}
