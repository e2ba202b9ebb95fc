//! Observed data, its uncertainties, and assembly of the covariance blocks
//! used by the likelihood kernels.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance on the smallest pivot of the PSD factorisation.
const PSD_PIVOT_TOL: f64 = 1e-10;
/// Relative tolerance on |S_ij - S_ji| before a covariance is rejected.
const SYMMETRY_TOL: f64 = 1e-10;

/// Measurement uncertainties attached to a [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub enum Uncertainty {
    /// Independent Gaussian errors, one standard deviation per point and axis.
    Diagonal { x_err: Vec<f64>, y_err: Vec<f64> },
    /// Full 2N x 2N covariance ordered as (x_1..x_N, y_1..y_N).
    Full(DMatrix<f64>),
}

/// Unvalidated input arrays, as read from disk or built by hand.
#[derive(Debug, Clone, Default)]
pub struct RawDataset {
    pub x_obs: Vec<f64>,
    pub y_obs: Vec<f64>,
    pub x_err: Option<Vec<f64>>,
    pub y_err: Option<Vec<f64>>,
    pub full_cov: Option<DMatrix<f64>>,
}

/// A validated set of observations. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x_obs: Vec<f64>,
    y_obs: Vec<f64>,
    uncertainty: Uncertainty,
}

/// The (xx, xy, yy) blocks of the data covariance, with the intrinsic
/// scatter already added to the yy diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBlocks {
    pub xx: DMatrix<f64>,
    pub xy: DMatrix<f64>,
    pub yy: DMatrix<f64>,
}

impl CovarianceBlocks {
    pub fn yx(&self) -> DMatrix<f64> {
        self.xy.transpose()
    }

    /// Recombine into the full 2N x 2N matrix.
    pub fn full(&self) -> DMatrix<f64> {
        let n = self.xx.nrows();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&self.xx);
        out.view_mut((0, n), (n, n)).copy_from(&self.xy);
        out.view_mut((n, 0), (n, n)).copy_from(&self.xy.transpose());
        out.view_mut((n, n), (n, n)).copy_from(&self.yy);
        out
    }
}

/// Check shapes, signs, symmetry and positive semi-definiteness.
pub fn validate_dataset(raw: RawDataset) -> Result<Dataset> {
    let n = raw.x_obs.len();
    if raw.y_obs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "x_obs has {} entries, y_obs has {}",
            n,
            raw.y_obs.len()
        )));
    }
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    check_finite(&raw.x_obs, "x_obs")?;
    check_finite(&raw.y_obs, "y_obs")?;

    let uncertainty = match raw.full_cov {
        Some(cov) => {
            if raw.x_err.is_some() || raw.y_err.is_some() {
                return Err(Error::AmbiguousErrors);
            }
            if cov.nrows() != 2 * n || cov.ncols() != 2 * n {
                return Err(Error::DimensionMismatch(format!(
                    "covariance is {}x{}, expected {}x{}",
                    cov.nrows(),
                    cov.ncols(),
                    2 * n,
                    2 * n
                )));
            }
            check_covariance(&cov)?;
            Uncertainty::Full(cov)
        }
        None => {
            let x_err = raw.x_err.unwrap_or_else(|| vec![0.0; n]);
            let y_err = raw.y_err.unwrap_or_else(|| vec![0.0; n]);
            for (field, errs) in [("x_err", &x_err), ("y_err", &y_err)] {
                if errs.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{field} has {} entries, expected {n}",
                        errs.len()
                    )));
                }
                check_finite(errs, field)?;
                if let Some((index, &value)) = errs.iter().enumerate().find(|(_, e)| **e < 0.0) {
                    return Err(Error::NegativeUncertainty { field, index, value });
                }
            }
            Uncertainty::Diagonal { x_err, y_err }
        }
    };

    Ok(Dataset {
        x_obs: raw.x_obs,
        y_obs: raw.y_obs,
        uncertainty,
    })
}

fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_covariance(cov: &DMatrix<f64>) -> Result<()> {
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("full_cov"));
    }
    let scale = cov.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let n = cov.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let asymmetry = (cov[(i, j)] - cov[(j, i)]).abs();
            if asymmetry > SYMMETRY_TOL * scale.max(1.0) {
                return Err(Error::NotSymmetric { i, j, asymmetry });
            }
        }
    }
    if !ldl_is_psd(cov, PSD_PIVOT_TOL * scale) {
        let eig = SymmetricEigen::new(cov.clone());
        let eigenvalue = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::NotPositiveSemiDefinite { eigenvalue });
    }
    Ok(())
}

/// Unpivoted LDL^T; a pivot below `-tol` means the matrix is indefinite.
/// Pivots within `tol` of zero are treated as exact zeros, which is valid
/// only when the rest of their column vanishes as well.
fn ldl_is_psd(a: &DMatrix<f64>, tol: f64) -> bool {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = vec![0.0; n];
    for j in 0..n {
        let mut dj = a[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if dj < -tol {
            return false;
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            if dj.abs() <= tol {
                if v.abs() > tol.sqrt() * (a[(i, i)].abs().sqrt() + tol.sqrt()) {
                    return false;
                }
                l[(i, j)] = 0.0;
            } else {
                l[(i, j)] = v / dj;
            }
        }
    }
    true
}

impl Dataset {
    /// Build and validate a dataset with independent per-point errors.
    pub fn diagonal(x_obs: Vec<f64>, y_obs: Vec<f64>, x_err: Vec<f64>, y_err: Vec<f64>) -> Result<Self> {
        validate_dataset(RawDataset {
            x_obs,
            y_obs,
            x_err: Some(x_err),
            y_err: Some(y_err),
            full_cov: None,
        })
    }

    /// Build and validate a dataset with a full 2N x 2N covariance.
    pub fn with_covariance(x_obs: Vec<f64>, y_obs: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        validate_dataset(RawDataset {
            x_obs,
            y_obs,
            x_err: None,
            y_err: None,
            full_cov: Some(cov),
        })
    }

    pub fn len(&self) -> usize {
        self.x_obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_obs.is_empty()
    }

    pub fn x_obs(&self) -> &[f64] {
        &self.x_obs
    }

    pub fn y_obs(&self) -> &[f64] {
        &self.y_obs
    }

    pub fn uncertainty(&self) -> &Uncertainty {
        &self.uncertainty
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.uncertainty, Uncertainty::Diagonal { .. })
    }

    /// Per-point x errors, when the errors are diagonal.
    pub fn x_err(&self) -> Option<&[f64]> {
        match &self.uncertainty {
            Uncertainty::Diagonal { x_err, .. } => Some(x_err),
            Uncertainty::Full(_) => None,
        }
    }

    pub fn y_err(&self) -> Option<&[f64]> {
        match &self.uncertainty {
            Uncertainty::Diagonal { y_err, .. } => Some(y_err),
            Uncertainty::Full(_) => None,
        }
    }

    /// Per-point x standard deviations: the diagonal errors, or the square
    /// root of the xx-block diagonal for a full covariance.
    pub fn x_sigma(&self) -> Vec<f64> {
        match &self.uncertainty {
            Uncertainty::Diagonal { x_err, .. } => x_err.clone(),
            Uncertainty::Full(c) => (0..self.len()).map(|i| c[(i, i)].max(0.0).sqrt()).collect(),
        }
    }

    pub fn y_sigma(&self) -> Vec<f64> {
        let n = self.len();
        match &self.uncertainty {
            Uncertainty::Diagonal { y_err, .. } => y_err.clone(),
            Uncertainty::Full(c) => (0..n).map(|i| c[(n + i, n + i)].max(0.0).sqrt()).collect(),
        }
    }

    /// Exchange the roles of x and y, including their uncertainties.
    pub fn swapped(&self) -> Dataset {
        let uncertainty = match &self.uncertainty {
            Uncertainty::Diagonal { x_err, y_err } => Uncertainty::Diagonal {
                x_err: y_err.clone(),
                y_err: x_err.clone(),
            },
            Uncertainty::Full(c) => {
                let n = self.len();
                let perm: Vec<usize> = (n..2 * n).chain(0..n).collect();
                Uncertainty::Full(DMatrix::from_fn(2 * n, 2 * n, |i, j| c[(perm[i], perm[j])]))
            }
        };
        Dataset {
            x_obs: self.y_obs.clone(),
            y_obs: self.x_obs.clone(),
            uncertainty,
        }
    }

    /// Same observations with the diagonal errors promoted to a full covariance.
    pub fn to_full(&self) -> Dataset {
        Dataset {
            x_obs: self.x_obs.clone(),
            y_obs: self.y_obs.clone(),
            uncertainty: Uncertainty::Full(assemble_covariance(self, 0.0).full()),
        }
    }
}

/// Covariance blocks with sigma_int^2 added to each yy diagonal element.
pub fn assemble_covariance(d: &Dataset, sigma_int: f64) -> CovarianceBlocks {
    let n = d.len();
    let add = sigma_int * sigma_int;
    match &d.uncertainty {
        Uncertainty::Diagonal { x_err, y_err } => CovarianceBlocks {
            xx: DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, x_err.iter().map(|s| s * s))),
            xy: DMatrix::zeros(n, n),
            yy: DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, y_err.iter().map(|s| s * s + add))),
        },
        Uncertainty::Full(c) => {
            let mut yy = c.view((n, n), (n, n)).clone_owned();
            for i in 0..n {
                yy[(i, i)] += add;
            }
            CovarianceBlocks {
                xx: c.view((0, 0), (n, n)).clone_owned(),
                xy: c.view((0, n), (n, n)).clone_owned(),
                yy,
            }
        }
    }
}

/// Per-point total y variance s_y^2 = sigma_y^2 + sigma_int^2.
pub fn total_y_variance(y_err: &[f64], sigma_int: f64) -> Vec<f64> {
    let add = sigma_int * sigma_int;
    y_err.iter().map(|s| s * s + add).collect()
}
