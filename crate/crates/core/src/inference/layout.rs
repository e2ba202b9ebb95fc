//! Flat parameter layouts and the maps between constrained and
//! unconstrained coordinates.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::ModelFunction;
use crate::spec::{Component, Hierarchy, LikelihoodSpec, Method, ParamVector};

/// Prior box per parameter name: (lo, hi), either end may be infinite.
pub type PriorBounds = BTreeMap<String, (f64, f64)>;

/// Default boxes: scales non-negative, everything else unbounded.
pub fn default_bounds(spec: &LikelihoodSpec) -> PriorBounds {
    let mut b = PriorBounds::new();
    let pos = (0.0, f64::INFINITY);
    b.insert("sigma_int".into(), pos);
    b.insert("w".into(), pos);
    for k in 1..=spec.n_gauss.max(1) {
        b.insert(format!("w_{k}"), pos);
    }
    b.insert("u_star2".into(), pos);
    b.insert("w_star2".into(), pos);
    b
}

/// Which unconstrained map to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Square and sine maps, which can reach a bound exactly.
    Optimise,
    /// Exponential and logistic maps with Jacobian corrections.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Free,
    Lower(f64),
    Upper(f64),
    Interval(f64, f64),
}

impl Transform {
    pub fn from_bounds(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::InvalidConfig(format!("prior box [{lo}, {hi}] is empty")));
        }
        Ok(match (lo.is_finite(), hi.is_finite()) {
            (false, false) => Transform::Free,
            (true, false) => Transform::Lower(lo),
            (false, true) => Transform::Upper(hi),
            (true, true) => Transform::Interval(lo, hi),
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Transform::Free => (f64::NEG_INFINITY, f64::INFINITY),
            Transform::Lower(lo) => (lo, f64::INFINITY),
            Transform::Upper(hi) => (f64::NEG_INFINITY, hi),
            Transform::Interval(lo, hi) => (lo, hi),
        }
    }

    /// Constrained value, d x / d z and log |d x / d z| (the last only
    /// meaningful in sampling mode).
    pub fn forward(&self, z: f64, mode: Mode) -> (f64, f64, f64) {
        match (*self, mode) {
            (Transform::Free, _) => (z, 1.0, 0.0),
            (Transform::Lower(lo), Mode::Optimise) => (lo + z * z, 2.0 * z, 0.0),
            (Transform::Upper(hi), Mode::Optimise) => (hi - z * z, -2.0 * z, 0.0),
            (Transform::Interval(lo, hi), Mode::Optimise) => {
                (lo + (hi - lo) * 0.5 * (1.0 + z.sin()), (hi - lo) * 0.5 * z.cos(), 0.0)
            }
            (Transform::Lower(lo), Mode::Sample) => {
                let e = z.exp();
                (lo + e, e, z)
            }
            (Transform::Upper(hi), Mode::Sample) => {
                let e = z.exp();
                (hi - e, -e, z)
            }
            (Transform::Interval(lo, hi), Mode::Sample) => {
                let s = logistic(z);
                let w = hi - lo;
                (
                    lo + w * s,
                    w * s * (1.0 - s),
                    w.ln() + log_logistic(z) + log_logistic(-z),
                )
            }
        }
    }

    /// d log|dx/dz| / dz in sampling mode.
    pub fn dlogjac(&self, z: f64) -> f64 {
        match *self {
            Transform::Free => 0.0,
            Transform::Lower(_) | Transform::Upper(_) => 1.0,
            Transform::Interval(..) => 1.0 - 2.0 * logistic(z),
        }
    }

    /// Unconstrained coordinate of `x`; points on or outside a bound are
    /// pulled inside by `floor` in sampling mode.
    pub fn inverse(&self, x: f64, mode: Mode, floor: f64) -> f64 {
        match (*self, mode) {
            (Transform::Free, _) => x,
            (Transform::Lower(lo), Mode::Optimise) => (x - lo).max(0.0).sqrt(),
            (Transform::Upper(hi), Mode::Optimise) => (hi - x).max(0.0).sqrt(),
            (Transform::Interval(lo, hi), Mode::Optimise) => (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0).asin(),
            (Transform::Lower(lo), Mode::Sample) => (x - lo).max(floor).ln(),
            (Transform::Upper(hi), Mode::Sample) => (hi - x).max(floor).ln(),
            (Transform::Interval(lo, hi), Mode::Sample) => {
                let f = ((x - lo) / (hi - lo)).clamp(floor.min(0.25), 1.0 - floor.min(0.25));
                (f / (1.0 - f)).ln()
            }
        }
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn log_logistic(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Natural parameter names and the unconstrained coordinates behind them.
///
/// Natural order: theta, sigma_int (if fitted), then mu and w for mnr, or
/// weight_k, mu_k, w_k for gmm, then mu_star, u_star2, w_star2 when the
/// hierarchical prior is active. The unconstrained vector is the same
/// except that gmm weights use K - 1 additive log-ratio coordinates and
/// gmm means are a first value plus log increments.
#[derive(Debug, Clone)]
pub struct Layout {
    pub spec: LikelihoodSpec,
    pub n_theta: usize,
    pub names: Vec<String>,
    transforms: Vec<Transform>,
}

impl Layout {
    pub fn new(spec: &LikelihoodSpec, model: &dyn ModelFunction, bounds: &PriorBounds) -> Result<Self> {
        spec.validate()?;
        let mut names = model.param_names();
        if names.len() != model.n_params() {
            return Err(Error::InvalidSpec(
                "model parameter names do not match its parameter count".into(),
            ));
        }
        let n_theta = names.len();
        if spec.include_intrinsic_scatter {
            names.push("sigma_int".into());
        }
        let k = spec.n_gauss;
        match spec.method {
            Method::Mnr => names.extend(["mu".to_string(), "w".to_string()]),
            Method::Gmm => {
                names.extend((1..=k).map(|i| format!("weight_{i}")));
                names.extend((1..=k).map(|i| format!("mu_{i}")));
                names.extend((1..=k).map(|i| format!("w_{i}")));
            }
            _ => {}
        }
        if spec.is_hierarchical() {
            names.extend(["mu_star".to_string(), "u_star2".to_string(), "w_star2".to_string()]);
        }
        for key in bounds.keys() {
            let known = names.iter().any(|n| n == key) || default_bounds(spec).contains_key(key);
            if !known {
                return Err(Error::InvalidConfig(format!(
                    "prior bound for unknown parameter '{key}'"
                )));
            }
        }
        let mut transforms = Vec::with_capacity(names.len());
        for n in &names {
            let (lo, hi) = bounds.get(n).copied().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
            transforms.push(Transform::from_bounds(lo, hi)?);
        }
        Ok(Self {
            spec: *spec,
            n_theta,
            names,
            transforms,
        })
    }

    pub fn n_natural(&self) -> usize {
        self.names.len()
    }

    pub fn n_unconstrained(&self) -> usize {
        self.names.len() - usize::from(self.spec.method == Method::Gmm)
    }

    pub fn transform(&self, i: usize) -> Transform {
        self.transforms[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn gmm_start(&self) -> usize {
        self.n_theta + usize::from(self.spec.include_intrinsic_scatter)
    }

    /// Map unconstrained coordinates to natural parameters.
    pub fn to_natural(&self, z: &[f64], mode: Mode) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_natural());
        if self.spec.method != Method::Gmm {
            for (i, zi) in z.iter().enumerate() {
                x.push(self.transforms[i].forward(*zi, mode).0);
            }
            return x;
        }
        let g = self.gmm_start();
        let k = self.spec.n_gauss;
        for (t, zi) in self.transforms[..g].iter().zip(z) {
            x.push(t.forward(*zi, mode).0);
        }
        x.extend(alr_weights(&z[g..g + k - 1]));
        let mut m = z[g + k - 1];
        x.push(m);
        for j in 1..k {
            m += z[g + k - 1 + j].exp();
            x.push(m);
        }
        for j in 0..k {
            let zi = z[g + 2 * k - 1 + j];
            x.push(self.transforms[g + 2 * k + j].forward(zi, mode).0);
        }
        for j in g + 3 * k..self.n_natural() {
            x.push(self.transforms[j].forward(z[j - 1], mode).0);
        }
        x
    }

    /// Inverse of [`Layout::to_natural`]. `floors` keeps points on a bound
    /// strictly inside in sampling mode.
    pub fn from_natural(&self, x: &[f64], mode: Mode, floors: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.n_unconstrained());
        if self.spec.method != Method::Gmm {
            for (i, xi) in x.iter().enumerate() {
                z.push(self.transforms[i].inverse(*xi, mode, floors[i]));
            }
            return z;
        }
        let g = self.gmm_start();
        let k = self.spec.n_gauss;
        for i in 0..g {
            z.push(self.transforms[i].inverse(x[i], mode, floors[i]));
        }
        let last = x[g + k - 1].max(1e-300);
        for j in 0..k - 1 {
            z.push((x[g + j].max(1e-300) / last).ln());
        }
        let means = &x[g + k..g + 2 * k];
        z.push(means[0]);
        for j in 1..k {
            let gap = (means[j] - means[j - 1]).max(1e-8 * (1.0 + means[j].abs()));
            z.push(gap.ln());
        }
        for j in 0..k {
            let i = g + 2 * k + j;
            z.push(self.transforms[i].inverse(x[i], mode, floors[i]));
        }
        for i in g + 3 * k..self.n_natural() {
            z.push(self.transforms[i].inverse(x[i], mode, floors[i]));
        }
        z
    }

    /// Log Jacobian of the sampling map, and the chain rule from a natural
    /// gradient to an unconstrained one (Jacobian term included).
    pub fn pullback(&self, z: &[f64], g_nat: &[f64], g_z: &mut [f64]) -> f64 {
        let mut logj = 0.0;
        let scalar = |i_nat: usize, i_z: usize, g_z: &mut [f64]| {
            let t = self.transforms[i_nat];
            let (_, dx, lj) = t.forward(z[i_z], Mode::Sample);
            g_z[i_z] = g_nat[i_nat] * dx + t.dlogjac(z[i_z]);
            lj
        };
        if self.spec.method != Method::Gmm {
            for i in 0..z.len() {
                logj += scalar(i, i, g_z);
            }
            return logj;
        }
        let g = self.gmm_start();
        let k = self.spec.n_gauss;
        for i in 0..g {
            logj += scalar(i, i, g_z);
        }
        // Weights: dpi_i/dz_j = pi_i (delta_ij - pi_j); log J = sum log pi.
        let w = alr_weights(&z[g..g + k - 1]);
        let gw = &g_nat[g..g + k];
        let avg: f64 = w.iter().zip(gw).map(|(p, q)| p * q).sum();
        for j in 0..k - 1 {
            g_z[g + j] = w[j] * (gw[j] - avg) + 1.0 - k as f64 * w[j];
        }
        logj += w.iter().map(|p| p.ln()).sum::<f64>();
        // Means: m_1 = z_1, m_j = m_{j-1} + exp(z_j).
        let gm = &g_nat[g + k..g + 2 * k];
        let zm = g + k - 1;
        let mut tail = 0.0;
        for j in (0..k).rev() {
            tail += gm[j];
            if j == 0 {
                g_z[zm] = tail;
            } else {
                g_z[zm + j] = z[zm + j].exp() * tail + 1.0;
                logj += z[zm + j];
            }
        }
        for j in 0..k {
            logj += scalar(g + 2 * k + j, g + 2 * k - 1 + j, g_z);
        }
        for i in g + 3 * k..self.n_natural() {
            logj += scalar(i, i - 1, g_z);
        }
        logj
    }

    pub fn to_params(&self, x: &[f64]) -> ParamVector {
        let p = self.n_theta;
        let mut i = p;
        let sigma_int = if self.spec.include_intrinsic_scatter {
            i += 1;
            x[p]
        } else {
            0.0
        };
        let mut pv = ParamVector::new(x[..p].to_vec(), sigma_int);
        match self.spec.method {
            Method::Mnr => {
                pv = pv.with_gaussian(x[i], x[i + 1]);
                i += 2;
            }
            Method::Gmm => {
                let k = self.spec.n_gauss;
                let comps = (0..k)
                    .map(|j| Component {
                        weight: x[i + j],
                        mean: x[i + k + j],
                        width: x[i + 2 * k + j],
                    })
                    .collect();
                pv = pv.with_components(comps);
                i += 3 * k;
            }
            _ => {}
        }
        if self.spec.is_hierarchical() {
            pv = pv.with_hierarchy(Hierarchy {
                mu_star: x[i],
                u_star2: x[i + 1],
                w_star2: x[i + 2],
            });
        }
        pv
    }

    pub fn from_params(&self, pv: &ParamVector) -> Result<Vec<f64>> {
        if pv.theta.len() != self.n_theta {
            return Err(Error::DimensionMismatch(format!(
                "expected {} model parameters, got {}",
                self.n_theta,
                pv.theta.len()
            )));
        }
        let mut x = pv.theta.clone();
        if self.spec.include_intrinsic_scatter {
            x.push(pv.sigma_int);
        }
        let comps = pv.components();
        match self.spec.method {
            Method::Mnr => {
                let c = comps
                    .first()
                    .ok_or_else(|| Error::InvalidParameter("mnr needs a latent mean and width".into()))?;
                x.extend([c.mean, c.width]);
            }
            Method::Gmm => {
                if comps.len() != self.spec.n_gauss {
                    return Err(Error::DimensionMismatch(format!(
                        "expected {} mixture components, got {}",
                        self.spec.n_gauss,
                        comps.len()
                    )));
                }
                x.extend(comps.iter().map(|c| c.weight));
                x.extend(comps.iter().map(|c| c.mean));
                x.extend(comps.iter().map(|c| c.width));
            }
            _ => {}
        }
        if self.spec.is_hierarchical() {
            let h = pv
                .hierarchy
                .ok_or_else(|| Error::InvalidParameter("hierarchical prior needs mu_star, u_star2, w_star2".into()))?;
            x.extend([h.mu_star, h.u_star2, h.w_star2]);
        }
        Ok(x)
    }
}

/// Softmax with the last logit pinned at zero.
fn alr_weights(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(0.0f64, f64::max);
    let mut e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    e.push((-m).exp());
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}
