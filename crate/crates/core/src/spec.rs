//! Likelihood selection and the parameter vector shared by fitting and sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the latent abscissae are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Marginalise over an improper flat prior.
    Unif,
    /// Fix the latent values at their conditional maximum.
    Prof,
    /// Marginalise over a single Gaussian with fitted mean and width.
    Mnr,
    /// Marginalise over a Gaussian mixture.
    Gmm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Unif => "unif",
            Method::Prof => "prof",
            Method::Mnr => "mnr",
            Method::Gmm => "gmm",
        }
    }

    pub fn has_latent_prior(self) -> bool {
        matches!(self, Method::Mnr | Method::Gmm)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unif" => Ok(Method::Unif),
            "prof" => Ok(Method::Prof),
            "mnr" => Ok(Method::Mnr),
            "gmm" => Ok(Method::Gmm),
            _ => Err(Error::InvalidSpec(format!("unknown method '{s}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Prior over the mixture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Hyperprior {
    /// Flat priors with the component means constrained to be ordered.
    #[default]
    UniformOrdered,
    /// Normal prior on the means and scaled inverse-chi-squared priors on
    /// the variances, tied together by shared hyperparameters.
    Hierarchical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodSpec {
    pub method: Method,
    pub n_gauss: usize,
    pub hyperprior: Hyperprior,
    pub include_intrinsic_scatter: bool,
}

impl LikelihoodSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            n_gauss: 1,
            hyperprior: Hyperprior::UniformOrdered,
            include_intrinsic_scatter: true,
        }
    }

    pub fn gmm(n_gauss: usize, hyperprior: Hyperprior) -> Self {
        Self {
            method: Method::Gmm,
            n_gauss,
            hyperprior,
            include_intrinsic_scatter: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_gauss == 0 {
            return Err(Error::InvalidSpec("n_gauss must be at least 1".into()));
        }
        if self.method != Method::Gmm {
            if self.n_gauss != 1 {
                return Err(Error::InvalidSpec(format!(
                    "n_gauss = {} is only valid for gmm",
                    self.n_gauss
                )));
            }
            if self.hyperprior == Hyperprior::Hierarchical {
                return Err(Error::InvalidSpec(
                    "hierarchical hyperprior is only valid for gmm".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn is_hierarchical(&self) -> bool {
        self.method == Method::Gmm && self.hyperprior == Hyperprior::Hierarchical
    }

    /// Number of latent-prior components (zero for unif and prof).
    pub fn n_components(&self) -> usize {
        if self.method.has_latent_prior() {
            self.n_gauss
        } else {
            0
        }
    }
}

/// One Gaussian of the latent-x prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub width: f64,
}

/// Shared hyperparameters of the hierarchical mixture prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub mu_star: f64,
    pub u_star2: f64,
    pub w_star2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub theta: Vec<f64>,
    pub sigma_int: f64,
    pub components: Option<Vec<Component>>,
    pub hierarchy: Option<Hierarchy>,
}

impl ParamVector {
    pub fn new(theta: Vec<f64>, sigma_int: f64) -> Self {
        Self {
            theta,
            sigma_int,
            components: None,
            hierarchy: None,
        }
    }

    /// Single-Gaussian latent prior with mean `mu` and width `w`.
    pub fn with_gaussian(mut self, mu: f64, w: f64) -> Self {
        self.components = Some(vec![Component {
            weight: 1.0,
            mean: mu,
            width: w,
        }]);
        self
    }

    pub fn with_components(mut self, c: Vec<Component>) -> Self {
        self.components = Some(c);
        self
    }

    pub fn with_hierarchy(mut self, h: Hierarchy) -> Self {
        self.hierarchy = Some(h);
        self
    }

    pub fn components(&self) -> &[Component] {
        self.components.as_deref().unwrap_or(&[])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_int >= 0.0) || !self.sigma_int.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma_int = {}", self.sigma_int)));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("theta"));
        }
        if let Some(cs) = &self.components {
            if cs.is_empty() {
                return Err(Error::Empty("components"));
            }
            let total: f64 = cs.iter().map(|c| c.weight).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("component weights sum to {total}")));
            }
            for (k, c) in cs.iter().enumerate() {
                if !(c.width > 0.0) || !c.width.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "width of component {k} is {}",
                        c.width
                    )));
                }
                if !(c.weight > 0.0 && c.weight < 1.0 || cs.len() == 1 && c.weight == 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "weight of component {k} is {}",
                        c.weight
                    )));
                }
                if !c.mean.is_finite() {
                    return Err(Error::NonFinite("component mean"));
                }
            }
            if cs.windows(2).any(|p| p[1].mean < p[0].mean) {
                return Err(Error::InvalidParameter("component means must be non-decreasing".into()));
            }
        }
        if let Some(h) = &self.hierarchy {
            if !(h.u_star2 > 0.0) || !(h.w_star2 > 0.0) {
                return Err(Error::InvalidParameter("hierarchy variances must be positive".into()));
            }
        }
        Ok(())
    }
}
