//! Mock data sets with known truth, and the bias-measurement harness run
//! over them.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference::{sample_posterior, select_ngauss, sigma_int_summary, PosteriorResult, SamplerConfig};
use crate::model::Linear;
use crate::spec::{Hyperprior, LikelihoodSpec, Method};
use crate::stats;

/// Distribution of the true abscissae.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum XtDist {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Density rising linearly from zero at `lo` to its maximum at `hi`.
    TriangularRising {
        lo: f64,
        hi: f64,
    },
    Exponential {
        scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockConfig {
    pub a_true: f64,
    pub b_true: f64,
    pub sigma_int_true: f64,
    pub n: usize,
    pub xt_dist: XtDist,
    pub sigma_x_mean: f64,
    pub sigma_y_mean: f64,
    /// Per-point sigma_x ~ N(mean, frac * mean).
    pub sigma_x_spread_frac: f64,
    /// Per-point sigma_y ~ N(mean, spread).
    pub sigma_y_spread: f64,
    pub seed: u64,
}

impl Default for MockConfig {
    /// The fiducial cell.
    fn default() -> Self {
        Self {
            a_true: 5.0,
            b_true: 1.0,
            sigma_int_true: 2.0,
            n: 1000,
            xt_dist: XtDist::Exponential { scale: 8.0 },
            sigma_x_mean: 1.0,
            sigma_y_mean: 2.0,
            sigma_x_spread_frac: 0.2,
            sigma_y_spread: 0.2,
            seed: 0,
        }
    }
}

impl MockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewPoints(self.n));
        }
        let finite = [
            self.a_true,
            self.b_true,
            self.sigma_int_true,
            self.sigma_x_mean,
            self.sigma_y_mean,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mock parameters"));
        }
        if self.sigma_x_mean < 0.0 || self.sigma_y_mean < 0.0 || self.sigma_int_true < 0.0 {
            return Err(Error::InvalidConfig(
                "error scales and intrinsic scatter must be non-negative".into(),
            ));
        }
        if !(self.sigma_x_spread_frac >= 0.0) || !(self.sigma_y_spread >= 0.0) {
            return Err(Error::InvalidConfig("error spreads must be non-negative".into()));
        }
        match self.xt_dist {
            XtDist::Uniform { lo, hi } | XtDist::TriangularRising { lo, hi } if !(lo < hi) => {
                Err(Error::InvalidConfig(format!("x_t range [{lo}, {hi}] is empty")))
            }
            XtDist::Exponential { scale } if !(scale > 0.0) => {
                Err(Error::InvalidConfig(format!("exponential scale {scale}")))
            }
            _ => Ok(()),
        }
    }

    pub fn lambda_x(&self) -> Option<f64> {
        match self.xt_dist {
            XtDist::Exponential { scale } => Some(scale),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockTruth {
    pub x_t: Vec<f64>,
    pub y_t: Vec<f64>,
    pub config: MockConfig,
}

/// Truth values the bias statistic is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueLine {
    pub a: f64,
    pub b: f64,
    pub sigma_int: f64,
}

impl From<&MockConfig> for TrueLine {
    fn from(c: &MockConfig) -> Self {
        Self {
            a: c.a_true,
            b: c.b_true,
            sigma_int: c.sigma_int_true,
        }
    }
}

fn positive_normal<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    let g = Normal::new(mean, sd).expect("finite spread");
    loop {
        let v: f64 = g.sample(rng);
        if v >= 0.0 {
            return v;
        }
    }
}

pub fn gen_mock(cfg: &MockConfig) -> Result<(Dataset, MockTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n;
    let x_t: Vec<f64> = match cfg.xt_dist {
        XtDist::Uniform { lo, hi } => (0..n).map(|_| rng.random_range(lo..hi)).collect(),
        XtDist::TriangularRising { lo, hi } => (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>().sqrt()).collect(),
        XtDist::Exponential { scale } => {
            let e = Exp::new(1.0 / scale).expect("positive scale");
            (0..n).map(|_| e.sample(&mut rng)).collect()
        }
    };
    let y_t: Vec<f64> = x_t.iter().map(|x| cfg.a_true * x + cfg.b_true).collect();
    let sx: Vec<f64> = (0..n)
        .map(|_| positive_normal(&mut rng, cfg.sigma_x_mean, cfg.sigma_x_spread_frac * cfg.sigma_x_mean))
        .collect();
    let sy: Vec<f64> = (0..n)
        .map(|_| positive_normal(&mut rng, cfg.sigma_y_mean, cfg.sigma_y_spread))
        .collect();
    let g = Normal::new(0.0, 1.0).unwrap();
    let mut xo = Vec::with_capacity(n);
    let mut yo = Vec::with_capacity(n);
    for i in 0..n {
        xo.push(x_t[i] + sx[i] * g.sample(&mut rng));
        let s = (sy[i] * sy[i] + cfg.sigma_int_true * cfg.sigma_int_true).sqrt();
        yo.push(y_t[i] + s * g.sample(&mut rng));
    }
    let d = Dataset::diagonal(xo, yo, sx, sy)?;
    Ok((d, MockTruth { x_t, y_t, config: *cfg }))
}

/// Standardised offsets of the posterior from the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBias {
    pub a: f64,
    pub b: f64,
    pub sigma_int: f64,
}

/// (mean - truth) / std for the slope and intercept, and (mode - truth) /
/// width of a zero-truncated normal fit for sigma_int. A zero width gives
/// an infinite bias.
pub fn bias_of_fit(post: &PosteriorResult, truth: &TrueLine) -> Result<FitBias> {
    let names = &post.param_names;
    if names.len() < 2 {
        return Err(Error::InvalidParameter("posterior has no slope and intercept".into()));
    }
    let col = |j: usize| post.samples.iter().map(|r| r[j]).collect::<Vec<_>>();
    let standardise = |offset: f64, sd: f64| {
        if sd > 0.0 {
            offset / sd
        } else if offset == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(offset)
        }
    };
    let a = col(0);
    let b = col(1);
    let s = post
        .column("sigma_int")
        .ok_or_else(|| Error::InvalidParameter("posterior has no sigma_int".into()))?;
    let (mode, width) = sigma_int_summary(&s);
    Ok(FitBias {
        a: standardise(stats::mean(&a) - truth.a, stats::std_sample(&a)),
        b: standardise(stats::mean(&b) - truth.b, stats::std_sample(&b)),
        sigma_int: standardise(mode - truth.sigma_int, width),
    })
}

/// Parameters that the sweeps and the grid vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    ATrue,
    SigmaInt,
    N,
    SigmaX,
    LambdaX,
}

impl SweepParam {
    pub const ALL: [SweepParam; 5] = [
        SweepParam::ATrue,
        SweepParam::SigmaInt,
        SweepParam::N,
        SweepParam::SigmaX,
        SweepParam::LambdaX,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::ATrue => "a_true",
            SweepParam::SigmaInt => "sigma_int_true",
            SweepParam::N => "n",
            SweepParam::SigmaX => "sigma_x_mean",
            SweepParam::LambdaX => "lambda_x",
        }
    }

    pub fn range(self) -> (f64, f64) {
        match self {
            SweepParam::ATrue => (-30.0, 30.0),
            SweepParam::SigmaInt => (0.0, 20.0),
            SweepParam::N => (10.0, 4000.0),
            SweepParam::SigmaX => (0.0, 20.0),
            SweepParam::LambdaX => (1.0, 15.0),
        }
    }

    /// `points` values across the range, equally spaced (logarithmically
    /// for N when `log_n`).
    pub fn grid(self, points: usize, log_n: bool) -> Vec<f64> {
        let (lo, hi) = self.range();
        if points == 1 {
            return vec![lo];
        }
        (0..points)
            .map(|i| {
                let t = i as f64 / (points - 1) as f64;
                let v = if self == SweepParam::N && log_n {
                    (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + t * (hi - lo)
                };
                if self == SweepParam::N {
                    v.round()
                } else {
                    v
                }
            })
            .collect()
    }

    pub fn apply(self, cfg: &mut MockConfig, v: f64) {
        match self {
            SweepParam::ATrue => cfg.a_true = v,
            SweepParam::SigmaInt => cfg.sigma_int_true = v,
            SweepParam::N => cfg.n = v.round().max(2.0) as usize,
            SweepParam::SigmaX => cfg.sigma_x_mean = v,
            SweepParam::LambdaX => cfg.xt_dist = XtDist::Exponential { scale: v },
        }
    }

    pub fn get(self, cfg: &MockConfig) -> f64 {
        match self {
            SweepParam::ATrue => cfg.a_true,
            SweepParam::SigmaInt => cfg.sigma_int_true,
            SweepParam::N => cfg.n as f64,
            SweepParam::SigmaX => cfg.sigma_x_mean,
            SweepParam::LambdaX => cfg.lambda_x().unwrap_or(f64::NAN),
        }
    }
}

/// Bias distribution of one parameter over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub parameter: String,
    pub biases: Vec<f64>,
    pub median: f64,
    pub p16: f64,
    pub p84: f64,
    pub mean: f64,
}

impl BiasReport {
    pub fn from_biases(parameter: &str, biases: Vec<f64>) -> Self {
        let finite: Vec<f64> = biases.iter().cloned().filter(|v| !v.is_nan()).collect();
        let mut sorted = finite.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = if finite.iter().all(|v| v.is_finite()) {
            stats::mean(&finite)
        } else {
            f64::NAN
        };
        Self {
            parameter: parameter.to_string(),
            median: stats::quantile_sorted(&sorted, 0.5),
            p16: stats::quantile_sorted(&sorted, 0.16),
            p84: stats::quantile_sorted(&sorted, 0.84),
            mean,
            biases,
        }
    }

    pub fn width68(&self) -> f64 {
        self.p84 - self.p16
    }
}

/// Settings shared by the sweep, grid and mixture studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub replicates: usize,
    pub base: MockConfig,
    pub sampler: SamplerConfig,
    pub seed: u64,
    /// Wall-clock budget; replicates not started in time are skipped and
    /// the result flagged partial.
    pub budget_secs: Option<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            replicates: 30,
            base: MockConfig::default(),
            sampler: SamplerConfig::default(),
            seed: 0,
            budget_secs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: MockConfig,
    pub method: Method,
    pub n_gauss: usize,
    pub reports: Vec<BiasReport>,
    pub n_ok: usize,
    pub n_failed: usize,
    pub n_skipped: usize,
    pub failures: Vec<String>,
}

impl CellResult {
    pub fn report(&self, parameter: &str) -> Option<&BiasReport> {
        self.reports.iter().find(|r| r.parameter == parameter)
    }

    pub fn partial(&self) -> bool {
        self.n_skipped > 0
    }
}

/// SplitMix64 finaliser, used to derive independent per-task seeds.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

struct Deadline(Option<Instant>);

impl Deadline {
    fn new(secs: Option<f64>) -> Self {
        Self(secs.map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0))))
    }

    fn passed(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}

enum Outcome {
    Done(FitBias),
    Failed(String),
    Skipped,
}

fn fit_replicate(cell: &MockConfig, spec: &LikelihoodSpec, study: &StudyConfig, cell_id: u64, rep: usize) -> Outcome {
    let mut cfg = *cell;
    cfg.seed = mix_seed(&[study.seed, cell_id, rep as u64]);
    let run = || -> Result<FitBias> {
        let (d, _) = gen_mock(&cfg)?;
        let mut sc = study.sampler.clone();
        sc.seed = mix_seed(&[cfg.seed, 1]);
        let post = sample_posterior(spec, &d, &Linear::new(), &sc)?;
        bias_of_fit(&post, &TrueLine::from(&cfg))
    };
    match run() {
        Ok(b) => Outcome::Done(b),
        Err(e) => Outcome::Failed(e.to_string()),
    }
}

fn collect(cell: MockConfig, spec: &LikelihoodSpec, outcomes: Vec<Outcome>) -> CellResult {
    let mut biases = [Vec::new(), Vec::new(), Vec::new()];
    let mut failures = Vec::new();
    let mut n_skipped = 0;
    for o in outcomes {
        match o {
            Outcome::Done(b) => {
                biases[0].push(b.a);
                biases[1].push(b.b);
                biases[2].push(b.sigma_int);
            }
            Outcome::Failed(e) => failures.push(e),
            Outcome::Skipped => n_skipped += 1,
        }
    }
    let n_ok = biases[0].len();
    let [a, b, s] = biases;
    CellResult {
        cell,
        method: spec.method,
        n_gauss: spec.n_gauss,
        reports: vec![
            BiasReport::from_biases("A", a),
            BiasReport::from_biases("B", b),
            BiasReport::from_biases("sigma_int", s),
        ],
        n_ok,
        n_failed: failures.len(),
        n_skipped,
        failures,
    }
}

/// Run every (cell, spec) pair over `study.replicates` mocks. Mocks depend
/// on the cell and replicate only, so different specs see the same data.
pub fn run_cells(cells: &[MockConfig], specs: &[LikelihoodSpec], study: &StudyConfig) -> Vec<CellResult> {
    let deadline = Deadline::new(study.budget_secs);
    let tasks: Vec<(usize, usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..specs.len()).flat_map(move |s| (0..study.replicates).map(move |r| (c, s, r))))
        .collect();
    let outcomes: Vec<Outcome> = tasks
        .par_iter()
        .map(|&(c, s, r)| {
            if deadline.passed() {
                Outcome::Skipped
            } else {
                fit_replicate(&cells[c], &specs[s], study, c as u64, r)
            }
        })
        .collect();
    let mut it = outcomes.into_iter();
    let mut out = Vec::with_capacity(cells.len() * specs.len());
    for cell in cells {
        for spec in specs {
            let chunk: Vec<Outcome> = it.by_ref().take(study.replicates).collect();
            out.push(collect(*cell, spec, chunk));
        }
    }
    out
}

/// Vary one parameter over `grid` with the rest at `study.base`.
pub fn run_1d_sweep(param: SweepParam, grid: &[f64], methods: &[Method], study: &StudyConfig) -> Vec<CellResult> {
    let cells: Vec<MockConfig> = grid
        .iter()
        .map(|&v| {
            let mut c = study.base;
            param.apply(&mut c, v);
            c
        })
        .collect();
    let specs: Vec<LikelihoodSpec> = methods.iter().map(|&m| LikelihoodSpec::new(m)).collect();
    run_cells(&cells, &specs, study)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalCell {
    pub method: Method,
    pub parameter: String,
    pub direction: String,
    pub cell_index: usize,
    pub mean_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub cells: Vec<CellResult>,
    pub extremal: Vec<ExtremalCell>,
}

/// Full factorial grid over the five varied parameters with
/// `points_per_dim` points each (N logarithmic).
pub fn run_5d_grid(methods: &[Method], points_per_dim: usize, study: &StudyConfig) -> GridResult {
    let axes: Vec<Vec<f64>> = SweepParam::ALL.iter().map(|p| p.grid(points_per_dim, true)).collect();
    let mut cells = vec![study.base];
    for (p, axis) in SweepParam::ALL.iter().zip(&axes) {
        cells = cells
            .iter()
            .flat_map(|c| {
                axis.iter().map(move |&v| {
                    let mut c = *c;
                    p.apply(&mut c, v);
                    c
                })
            })
            .collect();
    }
    let specs: Vec<LikelihoodSpec> = methods.iter().map(|&m| LikelihoodSpec::new(m)).collect();
    let results = run_cells(&cells, &specs, study);
    let mut extremal = Vec::new();
    for &m in methods {
        for name in ["A", "B", "sigma_int"] {
            let means: Vec<(usize, f64)> = results
                .iter()
                .enumerate()
                .filter(|(_, r)| r.method == m)
                .filter_map(|(i, r)| r.report(name).map(|b| (i / specs.len(), b.mean)))
                .filter(|(_, v)| v.is_finite())
                .collect();
            let hi = means.iter().cloned().max_by(|a, b| a.1.total_cmp(&b.1));
            let lo = means.iter().cloned().min_by(|a, b| a.1.total_cmp(&b.1));
            for (dir, e) in [("high", hi), ("low", lo)] {
                if let Some((i, v)) = e {
                    extremal.push(ExtremalCell {
                        method: m,
                        parameter: name.into(),
                        direction: dir.into(),
                        cell_index: i,
                        mean_bias: v,
                    });
                }
            }
        }
    }
    GridResult {
        cells: results,
        extremal,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmStudy {
    pub cells: Vec<CellResult>,
    /// Per cell, the information-criterion choice of N_g for each replicate
    /// (None when every fit failed).
    pub selected: Vec<Vec<Option<usize>>>,
}

/// Bias against the number of mixture components, plus the component
/// count each replicate's information criterion prefers.
pub fn run_gmm_study(
    cells: &[MockConfig],
    ng_range: std::ops::RangeInclusive<usize>,
    hyperprior: Hyperprior,
    study: &StudyConfig,
) -> Result<GmmStudy> {
    if ng_range.is_empty() || *ng_range.start() == 0 {
        return Err(Error::InvalidConfig("component range must start at 1".into()));
    }
    let specs: Vec<LikelihoodSpec> = ng_range.clone().map(|k| LikelihoodSpec::gmm(k, hyperprior)).collect();
    let results = run_cells(cells, &specs, study);
    let max_ng = *ng_range.end();
    let selected = cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            (0..study.replicates)
                .into_par_iter()
                .map(|r| {
                    let mut cfg = *cell;
                    cfg.seed = mix_seed(&[study.seed, c as u64, r as u64]);
                    let (d, _) = gen_mock(&cfg).ok()?;
                    select_ngauss(&d, &Linear::new(), max_ng, hyperprior, None)
                        .ok()
                        .map(|s| s.best)
                })
                .collect()
        })
        .collect();
    Ok(GmmStudy {
        cells: results,
        selected,
    })
}

/// One row per (cell, method, n_gauss), with median, 16th and 84th
/// percentile and mean bias columns for each of A, B and sigma_int.
pub fn write_bias_csv<W: Write>(mut w: W, cells: &[CellResult]) -> std::io::Result<()> {
    let mut header = String::from("a_true,sigma_int_true,n,sigma_x_mean,lambda_x,method,n_gauss");
    for p in ["A", "B", "sigma_int"] {
        for s in ["median", "p16", "p84", "mean"] {
            header.push_str(&format!(",{p}_{s}"));
        }
    }
    writeln!(w, "{header},n_ok,n_failed,n_skipped")?;
    for c in cells {
        let mut row = format!(
            "{},{},{},{},{},{},{}",
            c.cell.a_true,
            c.cell.sigma_int_true,
            c.cell.n,
            c.cell.sigma_x_mean,
            c.cell.lambda_x().map_or(String::new(), |v| v.to_string()),
            c.method,
            c.n_gauss
        );
        for p in ["A", "B", "sigma_int"] {
            match c.report(p) {
                Some(r) => row.push_str(&format!(",{},{},{},{}", r.median, r.p16, r.p84, r.mean)),
                None => row.push_str(",,,,"),
            }
        }
        writeln!(w, "{row},{},{},{}", c.n_ok, c.n_failed, c.n_skipped)?;
    }
    Ok(())
}
