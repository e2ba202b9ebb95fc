//! Brute-force integration and maximisation used as test oracles.
use nalgebra::{DMatrix, DVector};

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn log_sum(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// log of the integral of exp(logf) over [lo, hi], composite 20-point rule.
pub fn log_integrate(logf: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(20);
    let h = (hi - lo) / panels as f64;
    let mut terms = Vec::with_capacity(panels * 20);
    for p in 0..panels {
        let c = lo + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            terms.push(logf(c + 0.5 * h * xi) + (0.5 * h * wi).ln());
        }
    }
    log_sum(&terms)
}

/// Two-dimensional version on a box, tensor rule.
pub fn log_integrate_2d(logf: impl Fn(f64, f64) -> f64, lo: [f64; 2], hi: [f64; 2], panels: usize) -> f64 {
    let (x, w) = gauss_legendre(20);
    let nodes = |lo: f64, hi: f64| {
        let h = (hi - lo) / panels as f64;
        let mut out = Vec::with_capacity(panels * 20);
        for p in 0..panels {
            let c = lo + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                out.push((c + 0.5 * h * xi, (0.5 * h * wi).ln()));
            }
        }
        out
    };
    let n0 = nodes(lo[0], hi[0]);
    let n1 = nodes(lo[1], hi[1]);
    let mut terms = Vec::with_capacity(n0.len() * n1.len());
    for &(a, wa) in &n0 {
        for &(b, wb) in &n1 {
            terms.push(logf(a, b) + wa + wb);
        }
    }
    log_sum(&terms)
}

/// Golden-section maximum of a unimodal function on [lo, hi].
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
        if hi - lo < 1e-15 * (1.0 + lo.abs()) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

pub fn norm_logpdf(x: f64, mu: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mu) * (x - mu) / var)
}

/// Log-density of a multivariate normal, by direct Cholesky.
pub fn mvn_logpdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let n = x.len() as f64;
    let ch = nalgebra::Cholesky::new(cov.clone()).expect("positive definite");
    let z = ch.l().solve_lower_triangular(&(x - mean)).unwrap();
    let logdet: f64 = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + logdet + z.norm_squared())
}

/// One observed point and a straight line with intrinsic scatter: the
/// log of the full (latent-conditional) likelihood as a function of x_t.
pub struct PointProblem {
    pub xo: f64,
    pub yo: f64,
    pub sx: f64,
    pub sy: f64,
    pub a: f64,
    pub b: f64,
    pub sig: f64,
}

impl PointProblem {
    pub fn full_loglike(&self, xt: f64) -> f64 {
        norm_logpdf(self.xo, xt, self.sx * self.sx)
            + norm_logpdf(self.yo, self.a * xt + self.b, self.sy * self.sy + self.sig * self.sig)
    }

    /// Location and width of the latent-x likelihood peak.
    pub fn peak(&self) -> (f64, f64) {
        let sy2 = self.sy * self.sy + self.sig * self.sig;
        let prec = 1.0 / (self.sx * self.sx) + self.a * self.a / sy2;
        let m = (self.xo / (self.sx * self.sx) + self.a * (self.yo - self.b) / sy2) / prec;
        (m, prec.sqrt().recip())
    }

    /// log of the integral of the full likelihood times exp(log_prior).
    pub fn marginal(&self, log_prior: impl Fn(f64) -> f64, extra: &[(f64, f64)]) -> f64 {
        let (m, s) = self.peak();
        let mut centres = vec![(m, s)];
        centres.extend_from_slice(extra);
        let lo = centres.iter().map(|(c, w)| c - 40.0 * w).fold(f64::INFINITY, f64::min);
        let hi = centres
            .iter()
            .map(|(c, w)| c + 40.0 * w)
            .fold(f64::NEG_INFINITY, f64::max);
        let finest = centres.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let panels = (((hi - lo) / (0.5 * finest)).ceil() as usize).clamp(200, 200_000);
        log_integrate(|x| self.full_loglike(x) + log_prior(x), lo, hi, panels)
    }
}
