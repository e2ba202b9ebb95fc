//! Run configuration, read from TOML.
//!
//! ```toml
//! data = "points.csv"          # relative to the config file
//! # covariance = "cov.csv"     # optional 2N x 2N matrix replacing sx, sy
//! method = "mnr"               # unif | prof | mnr | gmm
//! n_gauss = 1
//! hyperprior = "uniform-ordered"
//! seed = 0
//! out = "results"             # relative to the working directory
//!
//! [columns]                    # CSV header names
//! x = "x"
//! y = "y"
//! sx = "sx"
//! sy = "sy"
//!
//! [model]
//! builtin = "linear"           # or "cluster", or give expr instead
//! # expr = "a * exp(b * x) + c"
//! # params = ["a", "b", "c"]
//! # init = [1.0, 0.1, 0.0]
//!
//! [sampler]                    # any SamplerConfig field
//! n_samples = 5000
//! prior_bounds = { sigma_int = [0.0, 10.0] }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mnr_core::mock::{StudyConfig, SweepParam};
use mnr_core::{Hyperprior, LikelihoodSpec, Method, MockConfig, ModelFunction, SamplerConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::expr::ExprModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Columns {
    #[serde(default = "col_x")]
    pub x: String,
    #[serde(default = "col_y")]
    pub y: String,
    #[serde(default = "col_sx")]
    pub sx: String,
    #[serde(default = "col_sy")]
    pub sy: String,
}

fn col_x() -> String {
    "x".into()
}
fn col_y() -> String {
    "y".into()
}
fn col_sx() -> String {
    "sx".into()
}
fn col_sy() -> String {
    "sy".into()
}

impl Default for Columns {
    fn default() -> Self {
        Self {
            x: col_x(),
            y: col_y(),
            sx: col_sx(),
            sy: col_sy(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// y = A x + B.
    Linear,
    /// log-mass scaling relation y = alpha x + log10(1 - b).
    Cluster,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub builtin: Option<Builtin>,
    pub expr: Option<String>,
    pub params: Option<Vec<String>>,
    pub init: Option<Vec<f64>>,
}

/// The fitted curve plus anything derived from its parameters.
pub struct BuiltModel {
    pub model: Box<dyn ModelFunction>,
    pub init: Option<Vec<f64>>,
    /// (name, parameter, transform) for derived summaries.
    pub derived: Vec<Derived>,
}

/// (name, parameter, transform) for a derived summary.
pub type Derived = (String, String, fn(f64) -> f64);

fn pow10(v: f64) -> f64 {
    10f64.powf(v)
}

impl ModelConfig {
    pub fn build(&self) -> Result<BuiltModel, CliError> {
        let (model, derived): (Box<dyn ModelFunction>, Vec<Derived>) = match (&self.builtin, &self.expr) {
            (Some(_), Some(_)) => return Err(CliError::validation("model: give either builtin or expr, not both")),
            (Some(Builtin::Linear), None) | (None, None) => (Box::new(mnr_core::Linear::new()), vec![]),
            (Some(Builtin::Cluster), None) => (
                Box::new(mnr_core::Linear::with_names("alpha", "log10_one_minus_b")),
                vec![(
                    "one_minus_b".into(),
                    "log10_one_minus_b".into(),
                    pow10 as fn(f64) -> f64,
                )],
            ),
            (None, Some(src)) => {
                let m = ExprModel::new(src, self.params.as_deref())
                    .map_err(|e| CliError::validation(format!("model expression: {e}")))?;
                (Box::new(m), vec![])
            }
        };
        let names = model.param_names();
        for n in &names {
            if RESERVED.contains(&n.as_str()) {
                return Err(CliError::validation(format!("parameter name '{n}' is reserved")));
            }
        }
        if let Some(init) = &self.init {
            if init.len() != names.len() {
                return Err(CliError::validation(format!(
                    "model.init has {} values for parameters {:?}",
                    init.len(),
                    names
                )));
            }
        } else if self.expr.is_some() {
            return Err(CliError::validation(format!(
                "model.init is required for expression models (parameters {names:?})"
            )));
        }
        Ok(BuiltModel {
            model,
            init: self.init.clone(),
            derived,
        })
    }
}

/// Keys used by the output files; parameters may not take these names.
pub const RESERVED: &[&str] = &["loglike", "meta", "method", "converged", "at_bound", "warnings", "x"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMode {
    /// Every method at the base cell.
    #[default]
    Fiducial,
    /// One parameter varied over a grid.
    Sweep,
    /// Full factorial grid over all five varied parameters.
    Grid,
    /// Mixture priors with 1..=max_gauss components at the base cell.
    Gmm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub mode: BenchMode,
    pub methods: Vec<Method>,
    pub parameter: Option<SweepParam>,
    pub points: usize,
    pub replicates: usize,
    /// Use the full 150 replicates regardless of `replicates`.
    pub full_scale: bool,
    pub max_gauss: usize,
    pub budget_secs: Option<f64>,
    pub cell: MockConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            mode: BenchMode::Fiducial,
            methods: vec![Method::Mnr, Method::Unif, Method::Prof],
            parameter: None,
            points: 20,
            replicates: 30,
            full_scale: false,
            max_gauss: 3,
            budget_secs: None,
            cell: MockConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn study(&self, sampler: &SamplerConfig, seed: u64) -> StudyConfig {
        StudyConfig {
            replicates: if self.full_scale { 150 } else { self.replicates },
            base: self.cell,
            sampler: sampler.clone(),
            seed,
            budget_secs: self.budget_secs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub covariance: Option<PathBuf>,
    #[serde(default)]
    pub columns: Columns,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "one")]
    pub n_gauss: usize,
    #[serde(default)]
    pub hyperprior: Hyperprior,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub model: ModelConfig,
    /// Model for x as a function of y in assess-causality; linear by default.
    #[serde(default)]
    pub inverse_model: ModelConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    /// MLE box constraints by parameter name.
    #[serde(default)]
    pub bounds: BTreeMap<String, (f64, f64)>,
    #[serde(default)]
    pub bias_bench: BenchConfig,
}

fn default_method() -> Method {
    Method::Mnr
}
fn one() -> usize {
    1
}
fn default_out() -> PathBuf {
    "out".into()
}

impl RunConfig {
    /// Read `path`. Relative data paths are taken from the config file's
    /// directory; `out` is left relative to the working directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data, &mut cfg.covariance].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn spec(&self) -> Result<LikelihoodSpec, CliError> {
        let spec = LikelihoodSpec {
            method: self.method,
            n_gauss: self.n_gauss,
            hyperprior: self.hyperprior,
            include_intrinsic_scatter: true,
        };
        spec.validate().map_err(CliError::from)?;
        Ok(spec)
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed,
            ..self.sampler.clone()
        }
    }

    /// Hex SHA-256 of the effective configuration, overrides included.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg: RunConfig = toml::from_str("data = \"d.csv\"").unwrap();
        assert_eq!(cfg.method, Method::Mnr);
        assert_eq!(cfg.columns, Columns::default());
        assert_eq!(cfg.sampler, SamplerConfig::default());
        assert!(cfg.model.build().is_ok());
    }

    #[test]
    fn full_config() {
        let cfg: RunConfig = toml::from_str(
            r#"
            data = "d.csv"
            method = "gmm"
            n_gauss = 2
            hyperprior = "hierarchical"
            seed = 4
            [columns]
            x = "logM"
            [model]
            expr = "a * x^2 + b"
            init = [1.0, 0.0]
            [sampler]
            n_samples = 100
            prior_bounds = { sigma_int = [0.0, 3.0] }
            [bias_bench]
            mode = "sweep"
            parameter = "sigma_x"
            methods = ["mnr"]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.columns.x, "logM");
        assert_eq!(cfg.columns.sy, "sy");
        assert_eq!(cfg.spec().unwrap().n_gauss, 2);
        assert_eq!(cfg.sampler().seed, 4);
        assert_eq!(cfg.sampler.prior_bounds["sigma_int"], (0.0, 3.0));
        assert_eq!(cfg.bias_bench.parameter, Some(SweepParam::SigmaX));
        assert_eq!(cfg.model.build().unwrap().model.param_names(), ["a", "b"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("data = \"d.csv\"\nmethd = \"mnr\"").is_err());
    }

    #[test]
    fn model_validation() {
        let m = |s: &str| toml::from_str::<ModelConfig>(s).unwrap().build();
        assert!(m("expr = \"a * x\"").is_err());
        assert!(m("expr = \"a * x\"\ninit = [1.0, 2.0]").is_err());
        assert!(m("expr = \"loglike * x\"\ninit = [1.0]").is_err());
        assert!(m("builtin = \"linear\"\nexpr = \"a * x\"").is_err());
        let c = m("builtin = \"cluster\"").unwrap();
        assert_eq!(c.model.param_names(), ["alpha", "log10_one_minus_b"]);
        assert!(((c.derived[0].2)(-0.5) - 10f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn hash_tracks_overrides() {
        let a: RunConfig = toml::from_str("data = \"d.csv\"").unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
