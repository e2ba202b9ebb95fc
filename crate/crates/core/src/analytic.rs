//! Closed-form maximum-likelihood estimates for the straight-line model with
//! the same x and y errors on every point, and the asymptotic bias of the
//! flat-prior estimator.

use serde::{Deserialize, Serialize};

use crate::cubic::{real_roots_with_branch, CubicBranch, CubicCoeffs};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Population (1/N) moments of the observed data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub n: usize,
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
}

impl SampleMoments {
    pub fn from_xy(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        let nf = n as f64;
        let mean_x = x.iter().sum::<f64>() / nf;
        let mean_y = y.iter().sum::<f64>() / nf;
        let (mut vx, mut vy, mut c) = (0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(y) {
            let (dx, dy) = (a - mean_x, b - mean_y);
            vx += dx * dx;
            vy += dy * dy;
            c += dx * dy;
        }
        Self {
            n,
            mean_x,
            mean_y,
            var_x: vx / nf,
            var_y: vy / nf,
            cov_xy: c / nf,
        }
    }
}

pub fn moments(d: &Dataset) -> SampleMoments {
    SampleMoments::from_xy(d.x_obs(), d.y_obs())
}

/// Common per-point errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomoscedasticErrors {
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl HomoscedasticErrors {
    pub fn new(sigma_x: f64, sigma_y: f64) -> Self {
        Self { sigma_x, sigma_y }
    }

    /// Extract the shared errors of a diagonal dataset, failing if they vary.
    pub fn from_dataset(d: &Dataset) -> Result<Self> {
        let (sx, sy) = (d.x_sigma(), d.y_sigma());
        let same = |v: &[f64]| v.iter().all(|s| (s - v[0]).abs() <= 1e-12 * v[0].abs().max(1e-300));
        if !d.is_diagonal() || !same(&sx) || !same(&sy) {
            return Err(Error::InvalidParameter(
                "errors are not the same for every point".into(),
            ));
        }
        Ok(Self::new(sx[0], sy[0]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnifMle {
    pub a: f64,
    pub b: f64,
    /// Total y-variance s^2 = sigma_y^2 + sigma_int^2; may be negative.
    pub s2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnifBias {
    pub d_a: f64,
    pub d_b: f64,
    pub d_s2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MnrMle {
    pub a: f64,
    pub b: f64,
    pub s2: f64,
    pub mu: f64,
    pub w2: f64,
}

/// Origin of a candidate maximum of the profile likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfCandidateKind {
    CubicRoot,
    Boundary,
    ZeroSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfCandidate {
    pub kind: ProfCandidateKind,
    pub a: f64,
    pub s2: f64,
    /// Profile log-likelihood up to a constant that does not depend on (A, s).
    pub loglike: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfBranchReport {
    pub cubic_branch: CubicBranch,
    pub cubic_roots: Vec<f64>,
    pub candidates: Vec<ProfCandidate>,
    pub winner: ProfCandidateKind,
}

impl ProfBranchReport {
    pub fn boundary_won(&self) -> bool {
        self.winner == ProfCandidateKind::Boundary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfMle {
    pub a: f64,
    pub b: f64,
    pub s2: f64,
    pub report: ProfBranchReport,
}

/// sigma_int implied by a total variance, clamped at zero.
pub fn sigma_int_from_s2(s2: f64, sigma_y: f64) -> f64 {
    (s2 - sigma_y * sigma_y).max(0.0).sqrt()
}

pub fn unif_mle(m: &SampleMoments, e: &HomoscedasticErrors) -> Result<UnifMle> {
    if !(m.var_x > 0.0) {
        return Err(Error::DegenerateAbscissa);
    }
    let a = m.cov_xy / m.var_x;
    let b = m.mean_y - a * m.mean_x;
    let s2 = m.var_y - (m.cov_xy * m.cov_xy / (m.var_x * m.var_x)) * (m.var_x + e.sigma_x * e.sigma_x);
    Ok(UnifMle { a, b, s2 })
}

/// Large-N bias of [`unif_mle`] for true slope `a_true` and latent-x
/// mean and variance `mean_xt`, `var_xt`.
pub fn unif_bias(a_true: f64, mean_xt: f64, var_xt: f64, sigma_x: f64) -> UnifBias {
    let sx2 = sigma_x * sigma_x;
    let denom = var_xt + sx2;
    UnifBias {
        d_a: -a_true * sx2 / denom,
        d_b: a_true * sx2 * mean_xt / denom,
        d_s2: a_true * a_true * var_xt * sx2 * sx2 / (denom * denom),
    }
}

pub fn mnr_mle(m: &SampleMoments, e: &HomoscedasticErrors) -> Result<MnrMle> {
    let sx2 = e.sigma_x * e.sigma_x;
    let w2 = m.var_x - sx2;
    if !(w2 > 0.0) {
        return Err(Error::VarianceNotExceedingError {
            var_x: m.var_x,
            sigma_x2: sx2,
        });
    }
    let a = m.cov_xy / w2;
    Ok(MnrMle {
        a,
        b: m.mean_y - a * m.mean_x,
        s2: m.var_y - m.cov_xy * m.cov_xy / w2,
        mu: m.mean_x,
        w2,
    })
}

/// Cubic whose roots include the stationary s^2 of the profile likelihood.
pub fn prof_cubic(m: &SampleMoments, e: &HomoscedasticErrors) -> CubicCoeffs {
    let (vx, vy, c) = (m.var_x, m.var_y, m.cov_xy);
    let sx2 = e.sigma_x * e.sigma_x;
    let c2 = c * c;
    CubicCoeffs::new(
        vx * vx,
        -vx * vx * vy + 4.0 * c2 * sx2 - 2.0 * vx * vy * sx2,
        -c2 * c2 + c2 * vx * vy - 4.0 * c2 * vy * sx2 + 2.0 * vx * vy * vy * sx2 + vy * vy * sx2 * sx2,
        -vy * vy * vy * sx2 * sx2,
    )
}

/// Profile log-likelihood per point at the optimal intercept, dropping the
/// constant -log(2 pi)/2.
pub fn prof_loglike_per_point(m: &SampleMoments, e: &HomoscedasticErrors, a: f64, s2: f64) -> f64 {
    let q = m.var_y + a * a * m.var_x - 2.0 * a * m.cov_xy;
    -0.5 * s2.ln() - 0.5 * q / (s2 + a * a * e.sigma_x * e.sigma_x)
}

/// Relative residuals of the two stationarity conditions (in s and in A).
pub fn prof_stationarity_residuals(m: &SampleMoments, e: &HomoscedasticErrors, a: f64, s2: f64) -> (f64, f64) {
    let sx2 = e.sigma_x * e.sigma_x;
    let q = m.var_y + a * a * m.var_x - 2.0 * a * m.cov_xy;
    let t = s2 + a * a * sx2;
    let scale_s = (t * t).max(s2 * (m.var_y + a * a * m.var_x + 2.0 * (a * m.cov_xy).abs()));
    let rs = (t * t - s2 * q) / scale_s;
    let lhs = (a * m.var_x - m.cov_xy) * t;
    let rhs = a * sx2 * q;
    let scale_a = ((a * m.var_x).abs() + m.cov_xy.abs()) * t + (a * sx2 * q).abs();
    let ra = if scale_a > 0.0 { (lhs - rhs) / scale_a } else { 0.0 };
    (rs, ra)
}

pub fn prof_mle(m: &SampleMoments, e: &HomoscedasticErrors) -> Result<ProfMle> {
    if !(m.var_x > 0.0) {
        return Err(Error::DegenerateAbscissa);
    }
    let (vx, vy, c) = (m.var_x, m.var_y, m.cov_xy);
    let sx2 = e.sigma_x * e.sigma_x;
    let sy2 = e.sigma_y * e.sigma_y;
    let cubic = prof_cubic(m, e);
    let (roots, branch) = real_roots_with_branch(&cubic)?;

    let mut candidates = Vec::new();
    let mut push = |kind, a: f64, s2: f64| {
        if a.is_finite() && s2.is_finite() && s2 > 0.0 {
            let loglike = prof_loglike_per_point(m, e, a, s2);
            if loglike.is_finite() {
                candidates.push(ProfCandidate { kind, a, s2, loglike });
            }
        }
    };

    for &u in &roots {
        if u < sy2 {
            continue;
        }
        let den = c * c - u * vx + sx2 * vy;
        if den == 0.0 {
            continue;
        }
        push(ProfCandidateKind::CubicRoot, c * (vy - 2.0 * u) / den, u);
    }

    // Boundary s = sigma_y: the optimal slope solves
    // c sx2 A^2 + (vx sy2 - sx2 vy) A - c sy2 = 0.
    if sy2 > 0.0 {
        let qa = c * sx2;
        let qb = vx * sy2 - sx2 * vy;
        let qc = -c * sy2;
        if qa == 0.0 {
            if qb != 0.0 {
                push(ProfCandidateKind::Boundary, -qc / qb, sy2);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                let t = -0.5 * (qb + qb.signum() * sq);
                let t = if t == 0.0 { -0.5 * sq } else { t };
                if t != 0.0 {
                    push(ProfCandidateKind::Boundary, t / qa, sy2);
                    push(ProfCandidateKind::Boundary, qc / t, sy2);
                } else {
                    push(ProfCandidateKind::Boundary, 0.0, sy2);
                }
            }
        }
    }

    push(ProfCandidateKind::ZeroSlope, 0.0, vy.max(sy2));

    let best = candidates
        .iter()
        .copied()
        .max_by(|p, q| p.loglike.total_cmp(&q.loglike))
        .ok_or(Error::DegenerateAbscissa)?;
    Ok(ProfMle {
        a: best.a,
        b: m.mean_y - best.a * m.mean_x,
        s2: best.s2,
        report: ProfBranchReport {
            cubic_branch: branch,
            cubic_roots: roots,
            candidates,
            winner: best.kind,
        },
    })
}
