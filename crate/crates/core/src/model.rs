//! Parametric curves y = f(x, theta) and their derivatives.

use nalgebra::DMatrix;

/// Derivative of the model outputs with respect to the latent abscissae,
/// evaluated at the observed x.
#[derive(Debug, Clone, PartialEq)]
pub enum Jacobian {
    /// Output i depends only on input i; entry i is df_i/dx_i.
    Diagonal(Vec<f64>),
    /// Coupled model: entry (i, j) is df_i/dx_j.
    Dense(DMatrix<f64>),
}

impl Jacobian {
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Jacobian::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            Jacobian::Dense(m) => m.clone(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            Jacobian::Diagonal(d) => d.clone(),
            Jacobian::Dense(m) => m.diagonal().iter().cloned().collect(),
        }
    }
}

/// A general model mapping the vector of abscissae to the vector of ordinates.
pub trait ModelFunction: Send + Sync {
    fn n_params(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    fn eval(&self, x: &[f64], theta: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64], theta: &[f64]) -> Jacobian;

    /// Pointwise view, when y_i depends on x_i alone.
    fn pointwise(&self) -> Option<&dyn PointwiseModel> {
        None
    }
}

/// A model where each ordinate depends only on its own abscissa.
///
/// The parameter-gradient methods default to central differences; models
/// with cheap closed forms override them to speed up gradient-based sampling.
pub trait PointwiseModel: Send + Sync {
    fn n_params(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    fn value(&self, x: f64, theta: &[f64]) -> f64;
    fn slope(&self, x: f64, theta: &[f64]) -> f64;

    /// Is f exactly `theta[0] * x + theta[1]`?
    fn is_straight_line(&self) -> bool {
        false
    }

    /// d f(x, theta) / d theta_j into `out`.
    fn value_grad(&self, x: f64, theta: &[f64], out: &mut [f64]) {
        central_diff(theta, out, |t| self.value(x, t));
    }

    /// d f'(x, theta) / d theta_j into `out`.
    fn slope_grad(&self, x: f64, theta: &[f64], out: &mut [f64]) {
        central_diff(theta, out, |t| self.slope(x, t));
    }

    /// Second derivative in x, by central differences of the slope.
    fn curvature(&self, x: f64, theta: &[f64]) -> f64 {
        let h = 1e-4 * (1.0 + x.abs());
        (self.slope(x + h, theta) - self.slope(x - h, theta)) / (2.0 * h)
    }
}

fn central_diff(theta: &[f64], out: &mut [f64], f: impl Fn(&[f64]) -> f64) {
    let mut t = theta.to_vec();
    for j in 0..theta.len() {
        let h = 1e-6 * (1.0 + theta[j].abs());
        t[j] = theta[j] + h;
        let fp = f(&t);
        t[j] = theta[j] - h;
        let fm = f(&t);
        t[j] = theta[j];
        out[j] = (fp - fm) / (2.0 * h);
    }
}

impl<T: PointwiseModel> ModelFunction for T {
    fn n_params(&self) -> usize {
        PointwiseModel::n_params(self)
    }

    fn param_names(&self) -> Vec<String> {
        PointwiseModel::param_names(self)
    }

    fn eval(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        x.iter().map(|&xi| self.value(xi, theta)).collect()
    }

    fn jacobian(&self, x: &[f64], theta: &[f64]) -> Jacobian {
        Jacobian::Diagonal(x.iter().map(|&xi| self.slope(xi, theta)).collect())
    }

    fn pointwise(&self) -> Option<&dyn PointwiseModel> {
        Some(self)
    }
}

/// Straight line `theta[0] * x + theta[1]`.
#[derive(Debug, Clone)]
pub struct Linear {
    names: [String; 2],
}

impl Linear {
    pub fn new() -> Self {
        Self::with_names("A", "B")
    }

    /// A straight line with custom parameter labels, e.g. slope `alpha`
    /// and intercept `log_one_minus_b` for a log-space scaling relation.
    pub fn with_names(slope: &str, intercept: &str) -> Self {
        Self {
            names: [slope.to_string(), intercept.to_string()],
        }
    }
}

impl Default for Linear {
    fn default() -> Self {
        Self::new()
    }
}

impl PointwiseModel for Linear {
    fn n_params(&self) -> usize {
        2
    }

    fn param_names(&self) -> Vec<String> {
        self.names.to_vec()
    }

    fn value(&self, x: f64, theta: &[f64]) -> f64 {
        theta[0] * x + theta[1]
    }

    fn slope(&self, _x: f64, theta: &[f64]) -> f64 {
        theta[0]
    }

    fn is_straight_line(&self) -> bool {
        true
    }

    fn value_grad(&self, x: f64, _theta: &[f64], out: &mut [f64]) {
        out[0] = x;
        out[1] = 1.0;
    }

    fn slope_grad(&self, _x: f64, _theta: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        out[1] = 0.0;
    }

    fn curvature(&self, _x: f64, _theta: &[f64]) -> f64 {
        0.0
    }
}

/// Per-point effective slopes and intercepts of the linearised model:
/// slope_i = f'(x_o_i) and intercept_i = f(x_o_i) - slope_i * x_o_i.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearisedModel {
    pub f_at_xo: Vec<f64>,
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
}

impl LinearisedModel {
    pub fn new(model: &dyn PointwiseModel, x_obs: &[f64], theta: &[f64]) -> Self {
        let mut f_at_xo = Vec::with_capacity(x_obs.len());
        let mut slopes = Vec::with_capacity(x_obs.len());
        let mut intercepts = Vec::with_capacity(x_obs.len());
        for &x in x_obs {
            let f = model.value(x, theta);
            let a = model.slope(x, theta);
            f_at_xo.push(f);
            slopes.push(a);
            intercepts.push(f - a * x);
        }
        Self {
            f_at_xo,
            slopes,
            intercepts,
        }
    }
}
