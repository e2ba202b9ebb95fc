//! Per-point kernels for independent errors, with analytic gradients.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::PointwiseModel;
use crate::spec::{Component, Method};
use crate::stats::LN_2PI;

/// Gradient of a diagonal kernel in the natural parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagGrad {
    pub theta: Vec<f64>,
    pub sigma_int: f64,
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub widths: Vec<f64>,
}

/// Derivatives of one point's log-density in the per-point quantities.
#[derive(Default, Clone, Copy)]
struct PointGrad {
    r: f64,
    slope: f64,
    sy2: f64,
    mean: f64,
    v: f64,
}

fn unif_point(r: f64, a: f64, sx2: f64, sy2: f64) -> (f64, PointGrad) {
    let var = a * a * sx2 + sy2;
    let l = -0.5 * (LN_2PI + var.ln()) - 0.5 * r * r / var;
    let dvar = -0.5 / var + 0.5 * r * r / (var * var);
    (
        l,
        PointGrad {
            r: -r / var,
            slope: dvar * 2.0 * a * sx2,
            sy2: dvar,
            ..Default::default()
        },
    )
}

fn prof_point(r: f64, a: f64, sx2: f64, sy2: f64) -> (f64, PointGrad) {
    let var = a * a * sx2 + sy2;
    let l = -0.5 * (LN_2PI + sy2.ln()) - 0.5 * r * r / var;
    let dvar = 0.5 * r * r / (var * var);
    (
        l,
        PointGrad {
            r: -r / var,
            slope: dvar * 2.0 * a * sx2,
            sy2: dvar - 0.5 / sy2,
            ..Default::default()
        },
    )
}

/// Log-density of (x_o, y_o) with x_t ~ N(mu, v) integrated out.
fn mnr_point(r: f64, a: f64, xo: f64, sx2: f64, sy2: f64, mu: f64, v: f64) -> (f64, PointGrad) {
    let dd = xo - mu;
    let r1 = r - a * dd;
    let num = v * r * r + sx2 * r1 * r1 + sy2 * dd * dd;
    let den = a * a * v * sx2 + sy2 * (v + sx2);
    let l = -LN_2PI - 0.5 * den.ln() - 0.5 * num / den;
    let cn = -0.5 / den;
    let cd = 0.5 * num / (den * den) - 0.5 / den;
    (
        l,
        PointGrad {
            r: cn * (2.0 * v * r + 2.0 * sx2 * r1),
            slope: cn * (-2.0 * sx2 * r1 * dd) + cd * 2.0 * a * v * sx2,
            sy2: cn * dd * dd + cd * (v + sx2),
            mean: cn * (2.0 * sx2 * r1 * a - 2.0 * sy2 * dd),
            v: cn * r * r + cd * (a * a * sx2 + sy2),
        },
    )
}

/// Value and, optionally, gradient of a diagonal kernel.
///
/// `components` is ignored for unif and prof; mnr uses the first component
/// with unit weight.
pub fn diag_eval(
    method: Method,
    d: &Dataset,
    model: &dyn PointwiseModel,
    theta: &[f64],
    sigma_int: f64,
    components: &[Component],
    want_grad: bool,
) -> Result<(f64, Option<DiagGrad>)> {
    let (x_err, y_err) = match (d.x_err(), d.y_err()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::InvalidSpec("diagonal kernel needs per-point errors".into())),
    };
    if theta.len() != model.n_params() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} parameters, got {}",
            model.n_params(),
            theta.len()
        )));
    }
    let comps: &[Component] = match method {
        Method::Unif | Method::Prof => &[],
        Method::Mnr => {
            if components.is_empty() {
                return Err(Error::InvalidParameter("mnr needs a latent mean and width".into()));
            }
            &components[..1]
        }
        Method::Gmm => {
            if components.is_empty() {
                return Err(Error::Empty("components"));
            }
            components
        }
    };
    for (k, c) in comps.iter().enumerate() {
        if !(c.width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "width of component {k} is {}",
                c.width
            )));
        }
        if method == Method::Gmm && !(c.weight > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weight of component {k} is {}",
                c.weight
            )));
        }
    }
    let log_w: Vec<f64> = comps
        .iter()
        .map(|c| if method == Method::Mnr { 0.0 } else { c.weight.ln() })
        .collect();
    let k = Kernel {
        method,
        d,
        x_err,
        y_err,
        theta,
        sigma_int,
        comps,
        log_w: &log_w,
        want_grad,
    };
    if model.is_straight_line() && theta.len() == 2 {
        k.run(&Line)
    } else {
        k.run(&Dyn(model))
    }
}

/// Model evaluation used by the point loop; lets the straight line inline.
trait Eval {
    fn value(&self, x: f64, theta: &[f64]) -> f64;
    fn slope(&self, x: f64, theta: &[f64]) -> f64;
    fn value_grad(&self, x: f64, theta: &[f64], out: &mut [f64]);
    fn slope_grad(&self, x: f64, theta: &[f64], out: &mut [f64]);
}

struct Line;

impl Eval for Line {
    #[inline(always)]
    fn value(&self, x: f64, theta: &[f64]) -> f64 {
        theta[0] * x + theta[1]
    }
    #[inline(always)]
    fn slope(&self, _x: f64, theta: &[f64]) -> f64 {
        theta[0]
    }
    #[inline(always)]
    fn value_grad(&self, x: f64, _theta: &[f64], out: &mut [f64]) {
        out[0] = x;
        out[1] = 1.0;
    }
    #[inline(always)]
    fn slope_grad(&self, _x: f64, _theta: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        out[1] = 0.0;
    }
}

struct Dyn<'a>(&'a dyn PointwiseModel);

impl Eval for Dyn<'_> {
    fn value(&self, x: f64, theta: &[f64]) -> f64 {
        self.0.value(x, theta)
    }
    fn slope(&self, x: f64, theta: &[f64]) -> f64 {
        self.0.slope(x, theta)
    }
    fn value_grad(&self, x: f64, theta: &[f64], out: &mut [f64]) {
        self.0.value_grad(x, theta, out)
    }
    fn slope_grad(&self, x: f64, theta: &[f64], out: &mut [f64]) {
        self.0.slope_grad(x, theta, out)
    }
}

struct Kernel<'a> {
    method: Method,
    d: &'a Dataset,
    x_err: &'a [f64],
    y_err: &'a [f64],
    theta: &'a [f64],
    sigma_int: f64,
    comps: &'a [Component],
    log_w: &'a [f64],
    want_grad: bool,
}

impl Kernel<'_> {
    fn run<E: Eval>(&self, model: &E) -> Result<(f64, Option<DiagGrad>)> {
        let Kernel {
            method,
            d,
            x_err,
            y_err,
            theta,
            sigma_int,
            comps,
            log_w,
            want_grad,
        } = *self;
        let p = theta.len();
        let k_n = comps.len();
        let si2 = sigma_int * sigma_int;
        let mut total = 0.0;
        let mut g = DiagGrad {
            theta: vec![0.0; p],
            sigma_int: 0.0,
            weights: vec![0.0; k_n],
            means: vec![0.0; k_n],
            widths: vec![0.0; k_n],
        };
        let mut vg = vec![0.0; p];
        let mut sg = vec![0.0; p];
        let mut comp_l = vec![0.0; k_n];
        let mut comp_g = vec![PointGrad::default(); k_n];

        for i in 0..d.len() {
            let xo = d.x_obs()[i];
            let f = model.value(xo, theta);
            let a = model.slope(xo, theta);
            let r = f - d.y_obs()[i];
            let sx2 = x_err[i] * x_err[i];
            let sy2 = y_err[i] * y_err[i] + si2;

            let (l, pg) = match method {
                Method::Unif => {
                    let var = a * a * sx2 + sy2;
                    if !(var > 0.0) {
                        return Err(Error::NonPositiveVariance { index: i, value: var });
                    }
                    unif_point(r, a, sx2, sy2)
                }
                Method::Prof => {
                    if !(sy2 > 0.0) {
                        return Err(Error::NonPositiveVariance { index: i, value: sy2 });
                    }
                    prof_point(r, a, sx2, sy2)
                }
                Method::Mnr | Method::Gmm => {
                    for (k, c) in comps.iter().enumerate() {
                        let v = c.width * c.width;
                        let den = a * a * v * sx2 + sy2 * (v + sx2);
                        if !(den > 0.0) {
                            return Err(Error::NonPositiveVariance { index: i, value: den });
                        }
                        let (lk, gk) = mnr_point(r, a, xo, sx2, sy2, c.mean, v);
                        comp_l[k] = lk + log_w[k];
                        comp_g[k] = gk;
                    }
                    if k_n == 1 {
                        (comp_l[0], comp_g[0])
                    } else {
                        let m = comp_l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let s: f64 = comp_l.iter().map(|v| (v - m).exp()).sum();
                        let l = m + s.ln();
                        let mut acc = PointGrad::default();
                        if want_grad {
                            for k in 0..k_n {
                                let resp = (comp_l[k] - l).exp();
                                acc.r += resp * comp_g[k].r;
                                acc.slope += resp * comp_g[k].slope;
                                acc.sy2 += resp * comp_g[k].sy2;
                                g.weights[k] += resp / comps[k].weight;
                                g.means[k] += resp * comp_g[k].mean;
                                g.widths[k] += resp * comp_g[k].v * 2.0 * comps[k].width;
                            }
                        }
                        (l, acc)
                    }
                }
            };
            total += l;
            if want_grad {
                model.value_grad(xo, theta, &mut vg);
                model.slope_grad(xo, theta, &mut sg);
                for j in 0..p {
                    g.theta[j] += pg.r * vg[j] + pg.slope * sg[j];
                }
                g.sigma_int += pg.sy2 * 2.0 * sigma_int;
                if method == Method::Mnr || (method == Method::Gmm && k_n == 1) {
                    g.means[0] += pg.mean;
                    g.widths[0] += pg.v * 2.0 * comps[0].width;
                    if method == Method::Gmm {
                        g.weights[0] += 1.0 / comps[0].weight;
                    }
                }
            }
        }
        Ok((total, want_grad.then_some(g)))
    }
}

fn need_diagonal(d: &Dataset) -> Result<()> {
    if d.is_diagonal() {
        Ok(())
    } else {
        Err(Error::InvalidSpec("diagonal kernel needs per-point errors".into()))
    }
}

/// Flat-prior marginal likelihood.
pub fn loglike_unif_diag(d: &Dataset, model: &dyn PointwiseModel, theta: &[f64], sigma_int: f64) -> Result<f64> {
    need_diagonal(d)?;
    diag_eval(Method::Unif, d, model, theta, sigma_int, &[], false).map(|r| r.0)
}

/// Profile likelihood with each latent x at its conditional maximum.
///
/// Not a normalised density: the x-error normalisation is dropped.
pub fn loglike_prof_diag(d: &Dataset, model: &dyn PointwiseModel, theta: &[f64], sigma_int: f64) -> Result<f64> {
    need_diagonal(d)?;
    diag_eval(Method::Prof, d, model, theta, sigma_int, &[], false).map(|r| r.0)
}

/// Marginal likelihood under a Gaussian prior N(mu, w^2) on the latent x.
pub fn loglike_mnr_diag(
    d: &Dataset,
    model: &dyn PointwiseModel,
    theta: &[f64],
    sigma_int: f64,
    mu: f64,
    w: f64,
) -> Result<f64> {
    need_diagonal(d)?;
    if !(w > 0.0) {
        return Err(Error::InvalidParameter(format!("latent width w = {w}")));
    }
    let c = [Component {
        weight: 1.0,
        mean: mu,
        width: w,
    }];
    diag_eval(Method::Mnr, d, model, theta, sigma_int, &c, false).map(|r| r.0)
}

/// Marginal likelihood under a Gaussian-mixture prior on the latent x.
pub fn loglike_gmm_diag(
    d: &Dataset,
    model: &dyn PointwiseModel,
    theta: &[f64],
    sigma_int: f64,
    components: &[Component],
) -> Result<f64> {
    need_diagonal(d)?;
    diag_eval(Method::Gmm, d, model, theta, sigma_int, components, false).map(|r| r.0)
}
