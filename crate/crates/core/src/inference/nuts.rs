//! No-U-turn Hamiltonian Monte Carlo with multinomial trajectory sampling,
//! a dense Euclidean metric, and windowed warmup adaptation of the step
//! size and metric.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A differentiable log density on R^n.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;
    /// Log density with its gradient written into `grad`. Returns -inf (or
    /// NaN) outside the support.
    fn logp_grad(&self, q: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone)]
pub struct NutsOptions {
    pub n_warmup: usize,
    pub n_samples: usize,
    pub max_depth: usize,
    pub target_accept: f64,
    pub max_delta_h: f64,
}

impl Default for NutsOptions {
    fn default() -> Self {
        Self {
            n_warmup: 700,
            n_samples: 5000,
            max_depth: 10,
            target_accept: 0.8,
            max_delta_h: 1000.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Post-warmup positions, one row per iteration.
    pub draws: Vec<Vec<f64>>,
    pub n_divergent: usize,
    pub step_size: f64,
    pub mean_accept: f64,
    pub n_leapfrog: usize,
    pub inv_metric: DMatrix<f64>,
}

#[derive(Clone)]
struct Point {
    q: DVector<f64>,
    p: DVector<f64>,
    g: DVector<f64>,
    logp: f64,
}

struct Hamiltonian<'a> {
    target: &'a dyn LogDensity,
    inv_metric: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl Hamiltonian<'_> {
    fn set_metric(&mut self, m: DMatrix<f64>) -> Result<()> {
        let c = m.clone().cholesky().ok_or(Error::Singular {
            name: "inverse metric",
            conditioning: f64::INFINITY,
        })?;
        self.chol = c.l();
        self.inv_metric = m;
        Ok(())
    }

    fn update(&self, z: &mut Point) {
        let mut g = vec![0.0; z.q.len()];
        let lp = self.target.logp_grad(z.q.as_slice(), &mut g);
        z.logp = if lp.is_nan() { f64::NEG_INFINITY } else { lp };
        z.g = DVector::from_vec(g);
    }

    fn dtau_dp(&self, z: &Point) -> DVector<f64> {
        &self.inv_metric * &z.p
    }

    fn energy(&self, z: &Point) -> f64 {
        let h = -z.logp + 0.5 * z.p.dot(&(&self.inv_metric * &z.p));
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    fn sample_p<R: Rng>(&self, z: &mut Point, rng: &mut R) {
        let u = DVector::from_fn(z.q.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        // p ~ N(0, M) with M^-1 = L L^T, so p = L^-T u.
        z.p = self
            .chol
            .transpose()
            .solve_upper_triangular(&u)
            .expect("cholesky factor is non-singular");
    }

    fn leapfrog(&self, z: &mut Point, eps: f64) {
        z.p.axpy(0.5 * eps, &z.g, 1.0);
        let v = self.dtau_dp(z);
        z.q.axpy(eps, &v, 1.0);
        self.update(z);
        if z.logp.is_finite() {
            z.p.axpy(0.5 * eps, &z.g, 1.0);
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn no_u_turn(p_sharp_minus: &DVector<f64>, p_sharp_plus: &DVector<f64>, rho: &DVector<f64>) -> bool {
    p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0
}

struct DualAveraging {
    delta: f64,
    mu: f64,
    s_bar: f64,
    x_bar: f64,
    counter: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const KAPPA: f64 = 0.75;
    const T0: f64 = 10.0;

    fn new(delta: f64, eps: f64) -> Self {
        Self {
            delta,
            mu: (10.0 * eps).ln(),
            s_bar: 0.0,
            x_bar: 0.0,
            counter: 0.0,
        }
    }

    fn restart(&mut self, eps: f64) {
        self.mu = (10.0 * eps).ln();
        self.s_bar = 0.0;
        self.x_bar = 0.0;
        self.counter = 0.0;
    }

    fn learn(&mut self, accept: f64) -> f64 {
        self.counter += 1.0;
        let a = accept.min(1.0);
        let eta = 1.0 / (self.counter + Self::T0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - a);
        let x = self.mu - self.s_bar * self.counter.sqrt() / Self::GAMMA;
        let x_eta = self.counter.powf(-Self::KAPPA);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    fn final_step(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Schedule of metric-estimation windows inside warmup.
struct Windows {
    enabled: bool,
    n_warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    window: usize,
    next_end: usize,
    counter: usize,
}

impl Windows {
    fn new(n_warmup: usize) -> Self {
        let (mut init_buffer, mut term_buffer, mut window) = (75, 50, 25);
        let enabled = n_warmup >= 20;
        if enabled && init_buffer + window + term_buffer > n_warmup {
            init_buffer = (0.15 * n_warmup as f64) as usize;
            term_buffer = (0.1 * n_warmup as f64) as usize;
            window = n_warmup - (init_buffer + term_buffer);
        }
        Self {
            enabled,
            n_warmup,
            init_buffer,
            term_buffer,
            window,
            next_end: init_buffer + window - 1,
            counter: 0,
        }
    }

    fn in_window(&self) -> bool {
        self.enabled
            && self.counter >= self.init_buffer
            && self.counter < self.n_warmup - self.term_buffer
            && self.counter != self.n_warmup
    }

    fn at_window_end(&self) -> bool {
        self.enabled && self.counter == self.next_end && self.counter != self.n_warmup
    }

    fn advance_window(&mut self) {
        if self.next_end == self.n_warmup - self.term_buffer - 1 {
            return;
        }
        self.window *= 2;
        self.next_end = self.counter + self.window;
        if self.next_end != self.n_warmup - self.term_buffer - 1 {
            let boundary = self.next_end + 2 * self.window;
            if boundary >= self.n_warmup - self.term_buffer {
                self.next_end = self.n_warmup - self.term_buffer - 1;
            }
        }
    }
}

/// Running mean and covariance.
struct Welford {
    n: usize,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: DVector::zeros(dim),
            m2: DMatrix::zeros(dim, dim),
        }
    }

    fn add(&mut self, q: &DVector<f64>) {
        self.n += 1;
        let delta = q - &self.mean;
        self.mean.axpy(1.0 / self.n as f64, &delta, 1.0);
        let after = q - &self.mean;
        self.m2.ger(1.0, &after, &delta, 1.0);
    }

    /// Sample covariance shrunk towards a small multiple of the identity.
    fn regularised(&self) -> DMatrix<f64> {
        let dim = self.mean.len();
        let n = self.n as f64;
        let cov = &self.m2 / (n - 1.0).max(1.0);
        let cov = 0.5 * (&cov + cov.transpose());
        cov * (n / (n + 5.0)) + DMatrix::identity(dim, dim) * (1e-3 * 5.0 / (n + 5.0))
    }
}

struct Sampler<'a, R: Rng> {
    ham: Hamiltonian<'a>,
    rng: &'a mut R,
    z: Point,
    eps: f64,
    max_depth: usize,
    max_delta_h: f64,
    divergent: bool,
}

struct Transition {
    accept: f64,
    n_leapfrog: usize,
    divergent: bool,
}

impl<R: Rng> Sampler<'_, R> {
    fn init_stepsize(&mut self) -> Result<()> {
        let start = self.z.clone();
        if !(self.eps > 0.0) || self.eps > 1e7 {
            return Ok(());
        }
        let trial = |s: &mut Self| -> f64 {
            s.z = start.clone();
            s.ham.sample_p(&mut s.z, s.rng);
            let h0 = s.ham.energy(&s.z);
            s.ham.leapfrog(&mut s.z, s.eps);
            let h = s.ham.energy(&s.z);
            h0 - h
        };
        let log08 = 0.8f64.ln();
        let up = trial(self) > log08;
        loop {
            let dh = trial(self);
            if up && !(dh > log08) || !up && !(dh < log08) {
                break;
            }
            self.eps *= if up { 2.0 } else { 0.5 };
            if self.eps > 1e7 || self.eps < 1e-300 {
                self.z = start;
                return Err(Error::InvalidConfig(format!(
                    "step size search diverged (step {})",
                    self.eps
                )));
            }
        }
        self.z = start;
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn build_tree(
        &mut self,
        depth: usize,
        z_propose: &mut Point,
        p_sharp_beg: &mut DVector<f64>,
        p_sharp_end: &mut DVector<f64>,
        rho: &mut DVector<f64>,
        p_beg: &mut DVector<f64>,
        p_end: &mut DVector<f64>,
        h0: f64,
        sign: f64,
        n_leapfrog: &mut usize,
        log_sum_weight: &mut f64,
        sum_metro_prob: &mut f64,
    ) -> bool {
        if depth == 0 {
            self.ham.leapfrog(&mut self.z, sign * self.eps);
            *n_leapfrog += 1;
            let h = self.ham.energy(&self.z);
            if h - h0 > self.max_delta_h {
                self.divergent = true;
            }
            *log_sum_weight = log_add(*log_sum_weight, h0 - h);
            *sum_metro_prob += if h0 - h > 0.0 { 1.0 } else { (h0 - h).exp() };
            *z_propose = self.z.clone();
            *p_sharp_beg = self.ham.dtau_dp(&self.z);
            *p_sharp_end = p_sharp_beg.clone();
            *rho += &self.z.p;
            *p_beg = self.z.p.clone();
            *p_end = p_beg.clone();
            return !self.divergent;
        }
        let n = self.z.q.len();

        let mut lsw_init = f64::NEG_INFINITY;
        let mut p_init_end = DVector::zeros(n);
        let mut p_sharp_init_end = DVector::zeros(n);
        let mut rho_init = DVector::zeros(n);
        if !self.build_tree(
            depth - 1,
            z_propose,
            p_sharp_beg,
            &mut p_sharp_init_end,
            &mut rho_init,
            p_beg,
            &mut p_init_end,
            h0,
            sign,
            n_leapfrog,
            &mut lsw_init,
            sum_metro_prob,
        ) {
            return false;
        }

        let mut z_propose_final = self.z.clone();
        let mut lsw_final = f64::NEG_INFINITY;
        let mut p_final_beg = DVector::zeros(n);
        let mut p_sharp_final_beg = DVector::zeros(n);
        let mut rho_final = DVector::zeros(n);
        if !self.build_tree(
            depth - 1,
            &mut z_propose_final,
            &mut p_sharp_final_beg,
            p_sharp_end,
            &mut rho_final,
            &mut p_final_beg,
            p_end,
            h0,
            sign,
            n_leapfrog,
            &mut lsw_final,
            sum_metro_prob,
        ) {
            return false;
        }

        let lsw_subtree = log_add(lsw_init, lsw_final);
        *log_sum_weight = log_add(*log_sum_weight, lsw_subtree);
        if lsw_final > lsw_subtree || self.rng.random::<f64>() < (lsw_final - lsw_subtree).exp() {
            *z_propose = z_propose_final;
        }

        let rho_subtree = &rho_init + &rho_final;
        *rho += &rho_subtree;
        let mut persist = no_u_turn(p_sharp_beg, p_sharp_end, &rho_subtree);
        let rho_ext = &rho_init + &p_final_beg;
        persist &= no_u_turn(p_sharp_beg, &p_sharp_final_beg, &rho_ext);
        let rho_ext = &rho_final + &p_init_end;
        persist &= no_u_turn(&p_sharp_init_end, p_sharp_end, &rho_ext);
        persist
    }

    fn transition(&mut self) -> Transition {
        self.ham.sample_p(&mut self.z, self.rng);
        let n = self.z.q.len();
        let mut z_fwd = self.z.clone();
        let mut z_bck = self.z.clone();
        let mut z_sample = self.z.clone();
        let mut z_propose = self.z.clone();

        let p0 = self.z.p.clone();
        let ps0 = self.ham.dtau_dp(&self.z);
        let (mut p_fwd_fwd, mut p_sharp_fwd_fwd) = (p0.clone(), ps0.clone());
        let (mut p_fwd_bck, mut p_sharp_fwd_bck) = (p0.clone(), ps0.clone());
        let (mut p_bck_fwd, mut p_sharp_bck_fwd) = (p0.clone(), ps0.clone());
        let (mut p_bck_bck, mut p_sharp_bck_bck) = (p0.clone(), ps0);
        let mut rho = p0;

        let mut log_sum_weight = 0.0;
        let h0 = self.ham.energy(&self.z);
        let mut n_leapfrog = 0;
        let mut sum_metro_prob = 0.0;
        self.divergent = false;

        let mut depth = 0;
        while depth < self.max_depth {
            let mut rho_fwd = DVector::zeros(n);
            let mut rho_bck = DVector::zeros(n);
            let mut lsw_subtree = f64::NEG_INFINITY;
            let valid = if self.rng.random::<f64>() > 0.5 {
                self.z = z_fwd.clone();
                rho_bck.copy_from(&rho);
                p_bck_fwd.copy_from(&p_fwd_bck);
                p_sharp_bck_fwd.copy_from(&p_sharp_fwd_bck);
                let ok = self.build_tree(
                    depth,
                    &mut z_propose,
                    &mut p_sharp_fwd_bck,
                    &mut p_sharp_fwd_fwd,
                    &mut rho_fwd,
                    &mut p_fwd_bck,
                    &mut p_fwd_fwd,
                    h0,
                    1.0,
                    &mut n_leapfrog,
                    &mut lsw_subtree,
                    &mut sum_metro_prob,
                );
                z_fwd = self.z.clone();
                ok
            } else {
                self.z = z_bck.clone();
                rho_fwd.copy_from(&rho);
                p_fwd_bck.copy_from(&p_bck_fwd);
                p_sharp_fwd_bck.copy_from(&p_sharp_bck_fwd);
                let ok = self.build_tree(
                    depth,
                    &mut z_propose,
                    &mut p_sharp_bck_fwd,
                    &mut p_sharp_bck_bck,
                    &mut rho_bck,
                    &mut p_bck_fwd,
                    &mut p_bck_bck,
                    h0,
                    -1.0,
                    &mut n_leapfrog,
                    &mut lsw_subtree,
                    &mut sum_metro_prob,
                );
                z_bck = self.z.clone();
                ok
            };
            if !valid {
                break;
            }
            depth += 1;
            if lsw_subtree > log_sum_weight || self.rng.random::<f64>() < (lsw_subtree - log_sum_weight).exp() {
                z_sample = z_propose.clone();
            }
            log_sum_weight = log_add(log_sum_weight, lsw_subtree);

            rho = &rho_bck + &rho_fwd;
            let mut persist = no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_fwd, &rho);
            let rho_ext = &rho_bck + &p_fwd_bck;
            persist &= no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_bck, &rho_ext);
            let rho_ext = &rho_fwd + &p_bck_fwd;
            persist &= no_u_turn(&p_sharp_bck_fwd, &p_sharp_fwd_fwd, &rho_ext);
            if !persist {
                break;
            }
        }
        self.z = z_sample;
        Transition {
            accept: if n_leapfrog > 0 {
                sum_metro_prob / n_leapfrog as f64
            } else {
                0.0
            },
            n_leapfrog,
            divergent: self.divergent,
        }
    }
}

/// Run one chain from `q0`: warmup with adaptation, then `n_samples`
/// draws at fixed step size and metric.
pub fn run_chain<R: Rng>(target: &dyn LogDensity, q0: &[f64], opts: &NutsOptions, rng: &mut R) -> Result<ChainOutput> {
    let n = target.dim();
    if q0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "start has {} coordinates, target {}",
            q0.len(),
            n
        )));
    }
    if opts.n_samples == 0 || opts.max_depth == 0 || !(opts.target_accept > 0.0 && opts.target_accept < 1.0) {
        return Err(Error::InvalidConfig(
            "sampler needs positive sample count, tree depth and a target acceptance in (0, 1)".into(),
        ));
    }
    let ham = Hamiltonian {
        target,
        inv_metric: DMatrix::identity(n, n),
        chol: DMatrix::identity(n, n),
    };
    let mut z = Point {
        q: DVector::from_column_slice(q0),
        p: DVector::zeros(n),
        g: DVector::zeros(n),
        logp: 0.0,
    };
    ham.update(&mut z);
    if !z.logp.is_finite() {
        return Err(Error::NonFiniteInit);
    }
    let mut s = Sampler {
        ham,
        rng,
        z,
        eps: 1.0,
        max_depth: opts.max_depth,
        max_delta_h: opts.max_delta_h,
        divergent: false,
    };
    s.init_stepsize()?;
    let mut da = DualAveraging::new(opts.target_accept, s.eps);
    let mut windows = Windows::new(opts.n_warmup);
    let mut est = Welford::new(n);
    let mut n_divergent = 0;
    let mut n_leapfrog = 0;

    for _ in 0..opts.n_warmup {
        let t = s.transition();
        n_leapfrog += t.n_leapfrog;
        s.eps = da.learn(t.accept);
        if windows.in_window() {
            est.add(&s.z.q);
        }
        if windows.at_window_end() {
            windows.advance_window();
            s.ham.set_metric(est.regularised())?;
            est = Welford::new(n);
            windows.counter += 1;
            s.init_stepsize()?;
            da.restart(s.eps);
        } else {
            windows.counter += 1;
        }
    }
    if opts.n_warmup > 0 {
        s.eps = da.final_step();
    }

    let mut draws = Vec::with_capacity(opts.n_samples);
    let mut accept_sum = 0.0;
    for _ in 0..opts.n_samples {
        let t = s.transition();
        n_leapfrog += t.n_leapfrog;
        accept_sum += t.accept;
        if t.divergent {
            n_divergent += 1;
        }
        draws.push(s.z.q.as_slice().to_vec());
    }
    Ok(ChainOutput {
        draws,
        n_divergent,
        step_size: s.eps,
        mean_accept: accept_sum / opts.n_samples as f64,
        n_leapfrog,
        inv_metric: s.ham.inv_metric,
    })
}
