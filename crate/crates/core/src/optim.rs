//! Derivative-free minimisation by the Nelder-Mead simplex method.

/// Options for [`minimize`].
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Evaluation budget for one simplex run.
    pub max_evals: usize,
    /// Stop when the spread of function values across the simplex is below this.
    pub ftol: f64,
    /// Additional runs restarted from the best point with a fresh simplex.
    pub restarts: usize,
    /// Per-coordinate initial step; `None` perturbs each coordinate by 5%
    /// (0.00025 for zero coordinates).
    pub initial_step: Option<Vec<f64>>,
}

impl NelderMeadOptions {
    pub fn for_dim(n: usize) -> Self {
        Self {
            max_evals: 500 * n.max(1),
            ftol: 1e-10,
            restarts: 2,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimise `f` from `x0`. Non-finite values are treated as +infinity.
///
/// Uses the dimension-dependent coefficients of Gao and Han, which keep
/// the simplex from collapsing in higher dimensions.
pub fn minimize(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> OptimResult {
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best = x0.to_vec();
    let mut best_f = eval(&best);
    let mut total = 1;
    let mut converged = false;
    for run in 0..=opts.restarts {
        let r = simplex_run(&mut eval, &best, opts);
        total += r.evals;
        let improved = best_f - r.fx;
        if r.fx <= best_f {
            best = r.x;
            best_f = r.fx;
        }
        converged = r.converged;
        if run > 0 && r.converged && improved.abs() < opts.ftol {
            break;
        }
    }
    OptimResult {
        x: best,
        fx: best_f,
        evals: total,
        converged,
    }
}

fn simplex_run(f: &mut impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> OptimResult {
    let n = x0.len();
    if n == 0 {
        return OptimResult {
            x: vec![],
            fx: f(x0),
            evals: 1,
            converged: true,
        };
    }
    let nf = n as f64;
    let alpha = 1.0;
    let beta = 1.0 + 2.0 / nf;
    let gamma = 0.75 - 1.0 / (2.0 * nf);
    let delta = 1.0 - 1.0 / nf;

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for j in 0..n {
        let mut p = x0.to_vec();
        let step = match &opts.initial_step {
            Some(s) => s[j],
            None if x0[j] != 0.0 => 0.05 * x0[j],
            None => 0.00025,
        };
        p[j] += step;
        pts.push(p);
    }
    let mut fv: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    let mut converged = false;

    let mut order: Vec<usize> = (0..=n).collect();
    while evals < opts.max_evals {
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        let (lo, hi, second) = (order[0], order[n], order[n - 1]);
        if (fv[hi] - fv[lo]).abs() <= opts.ftol || (fv[hi].is_infinite() && fv[lo].is_infinite()) {
            converged = fv[lo].is_finite();
            break;
        }
        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&pts[i]) {
                *c += v / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[hi]).map(|(c, h)| c + t * (c - h)).collect() };

        let xr = along(alpha);
        let fr = f(&xr);
        evals += 1;
        if fr < fv[lo] {
            let xe = along(alpha * beta);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[hi] = xe;
                fv[hi] = fe;
            } else {
                pts[hi] = xr;
                fv[hi] = fr;
            }
            continue;
        }
        if fr < fv[second] {
            pts[hi] = xr;
            fv[hi] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[hi] {
            let xc = along(alpha * gamma);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(-gamma);
            let fc = f(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < fv[hi].min(fr) {
            pts[hi] = xc;
            fv[hi] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let best = pts[lo].clone();
        for &i in &order[1..] {
            for (p, b) in pts[i].iter_mut().zip(&best) {
                *p = b + delta * (*p - b);
            }
            fv[i] = f(&pts[i]);
        }
        evals += n;
    }
    let lo = (0..=n).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).unwrap();
    OptimResult {
        x: pts[lo].clone(),
        fx: fv[lo],
        evals,
        converged,
    }
}
