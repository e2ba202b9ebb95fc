//! Likelihoods for an arbitrary data covariance and a linearised model.

use nalgebra::{DMatrix, DVector};

use crate::data::{assemble_covariance, Dataset};
use crate::error::{Error, Result};
use crate::model::ModelFunction;
use crate::spec::Method;
use crate::stats::LN_2PI;

/// Gaussian prior on the vector of latent abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPrior {
    pub mu: Vec<f64>,
    pub w: DMatrix<f64>,
}

impl LatentPrior {
    /// Every latent x drawn independently from N(mu, width^2).
    pub fn shared(mu: f64, width: f64, n: usize) -> Self {
        Self {
            mu: vec![mu; n],
            w: DMatrix::from_diagonal_element(n, n, width * width),
        }
    }
}

struct Factor {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Factor {
    fn new(m: DMatrix<f64>, name: &'static str) -> Result<Self> {
        let sym = (&m + m.transpose()) * 0.5;
        let diag = sym.diagonal();
        let conditioning = diag.min() / diag.max();
        match nalgebra::Cholesky::new(sym) {
            Some(chol) => Ok(Self { chol }),
            None => Err(Error::Singular { name, conditioning }),
        }
    }

    fn logdet(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    fn quad(&self, r: &DVector<f64>) -> f64 {
        let l = self.chol.l();
        let z = l.solve_lower_triangular(r).expect("factor has a positive diagonal");
        z.norm_squared()
    }
}

/// Log-likelihood for a full 2N x 2N data covariance.
///
/// For unif and prof the residual f(x_o) - y_o is weighted by
/// D = S_yy + G S_xx G^T - S_yx G^T - G S_xy. The prof normalisation uses
/// the conditional y covariance S_yy - S_yx S_xx^-1 S_xy, which reduces to
/// s_y^2 per point for independent errors. For mnr the latent abscissae are
/// integrated against `latent` and the 2N-dimensional residual
/// (mu - x_o, f(x_o) + G (mu - x_o) - y_o) is weighted by the joint covariance.
pub fn loglike_general(
    method: Method,
    d: &Dataset,
    model: &dyn ModelFunction,
    theta: &[f64],
    sigma_int: f64,
    latent: Option<&LatentPrior>,
) -> Result<f64> {
    let n = d.len();
    if theta.len() != model.n_params() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} parameters, got {}",
            model.n_params(),
            theta.len()
        )));
    }
    let blocks = assemble_covariance(d, sigma_int);
    let xo = DVector::from_column_slice(d.x_obs());
    let yo = DVector::from_column_slice(d.y_obs());
    let f = DVector::from_vec(model.eval(d.x_obs(), theta));
    let g = model.jacobian(d.x_obs(), theta).to_dense();
    if f.len() != n || g.nrows() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch("model output does not match the data".into()));
    }
    let nf = n as f64;
    match method {
        Method::Unif | Method::Prof => {
            let gt = g.transpose();
            let dm = &blocks.yy + &g * &blocks.xx * &gt - blocks.yx() * &gt - &g * &blocks.xy;
            let fd = Factor::new(dm, "D")?;
            let r = &f - &yo;
            let quad = fd.quad(&r);
            let logdet = if method == Method::Unif {
                fd.logdet()
            } else if blocks.xy.iter().all(|v| *v == 0.0) {
                Factor::new(blocks.yy.clone(), "S_yy")?.logdet()
            } else {
                let fx = Factor::new(blocks.xx.clone(), "S_xx")?;
                let s = &blocks.yy - blocks.yx() * fx.chol.solve(&blocks.xy);
                Factor::new(s, "S_yy|x")?.logdet()
            };
            Ok(-0.5 * quad - 0.5 * (nf * LN_2PI + logdet))
        }
        Method::Mnr => {
            let lp = latent.ok_or_else(|| Error::InvalidParameter("mnr needs a latent prior".into()))?;
            if lp.mu.len() != n || lp.w.nrows() != n || lp.w.ncols() != n {
                return Err(Error::DimensionMismatch("latent prior does not match the data".into()));
            }
            let mu = DVector::from_column_slice(&lp.mu);
            let gt = g.transpose();
            let mut m = DMatrix::zeros(2 * n, 2 * n);
            m.view_mut((0, 0), (n, n)).copy_from(&(&blocks.xx + &lp.w));
            let xy = &blocks.xy + &lp.w * &gt;
            m.view_mut((0, n), (n, n)).copy_from(&xy);
            m.view_mut((n, 0), (n, n)).copy_from(&xy.transpose());
            m.view_mut((n, n), (n, n)).copy_from(&(&blocks.yy + &g * &lp.w * &gt));
            let dx = &mu - &xo;
            let dy = &f + &g * &dx - &yo;
            let mut e = DVector::zeros(2 * n);
            e.rows_mut(0, n).copy_from(&dx);
            e.rows_mut(n, n).copy_from(&dy);
            let fm = Factor::new(m, "M")?;
            Ok(-0.5 * fm.quad(&e) - 0.5 * (2.0 * nf * LN_2PI + fm.logdet()))
        }
        Method::Gmm => Err(Error::InvalidSpec(
            "the general-covariance likelihood supports unif, prof and mnr".into(),
        )),
    }
}
