//! One line per criterion: `criterion N ... PASS|FAIL (details)`.
//!
//! Run with `cargo test --release -p mnr-core --test acceptance`. Pass
//! criterion numbers as arguments to run a subset.

#[allow(dead_code)]
mod common;

use std::time::Instant;

use common::{golden_max, log_integrate_2d, mvn_logpdf, norm_logpdf, PointProblem};
use mnr_core::analytic::{moments, prof_stationarity_residuals, sigma_int_from_s2};
use mnr_core::cubic::{real_roots, real_roots_oracle, CubicCoeffs};
use mnr_core::likelihood::*;
use mnr_core::mock::{run_5d_grid, run_cells, run_gmm_study, CellResult, StudyConfig};
use mnr_core::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn random_point(rng: &mut ChaCha8Rng) -> PointProblem {
    PointProblem {
        xo: rng.random_range(-5.0..5.0),
        yo: rng.random_range(-5.0..5.0),
        sx: rng.random_range(0.1..2.0),
        sy: rng.random_range(0.1..2.0),
        a: rng.random_range(-3.0..3.0),
        b: rng.random_range(-2.0..2.0),
        sig: rng.random_range(0.0..1.5),
    }
}

fn prof_closed(q: &PointProblem) -> f64 {
    let sy2 = q.sy * q.sy + q.sig * q.sig;
    let xhat = (q.xo * sy2 + q.a * q.sx * q.sx * (q.yo - q.b)) / (sy2 + q.a * q.a * q.sx * q.sx);
    q.full_loglike(xhat) + 0.5 * (2.0 * std::f64::consts::PI * q.sx * q.sx).ln()
}

/// Kernels against numeric marginalisation over the latent x. A dataset
/// needs two points, so single-point problems use the point twice.
fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let lin = Linear::new();
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let p = random_point(&mut rng);
        let q = if i % 2 == 0 {
            PointProblem { ..p }
        } else {
            PointProblem {
                a: p.a,
                b: p.b,
                sig: p.sig,
                ..random_point(&mut rng)
            }
        };
        let d = Dataset::diagonal(vec![p.xo, q.xo], vec![p.yo, q.yo], vec![p.sx, q.sx], vec![p.sy, q.sy]).unwrap();
        let th = [p.a, p.b];
        let mu = rng.random_range(-5.0..5.0);
        let w = rng.random_range(0.2..4.0);
        let comps = [
            Component {
                weight: 0.4,
                mean: mu - 2.0,
                width: w,
            },
            Component {
                weight: 0.6,
                mean: mu + 3.0,
                width: 0.5 * w + 0.1,
            },
        ];
        let gmm_prior = |x: f64| {
            let t: Vec<f64> = comps
                .iter()
                .map(|c| c.weight.ln() + norm_logpdf(x, c.mean, c.width * c.width))
                .collect();
            stats::logsumexp(&t)
        };
        let extra: Vec<(f64, f64)> = comps.iter().map(|c| (c.mean, c.width)).collect();
        let both = |f: &dyn Fn(&PointProblem) -> f64| f(&p) + f(&q);
        let checks = [
            (
                loglike_unif_diag(&d, &lin, &th, p.sig).unwrap(),
                both(&|s| s.marginal(|_| 0.0, &[])),
            ),
            (
                loglike_mnr_diag(&d, &lin, &th, p.sig, mu, w).unwrap(),
                both(&|s| s.marginal(|x| norm_logpdf(x, mu, w * w), &[(mu, w)])),
            ),
            (
                loglike_gmm_diag(&d, &lin, &th, p.sig, &comps).unwrap(),
                both(&|s| s.marginal(gmm_prior, &extra)),
            ),
            (loglike_prof_diag(&d, &lin, &th, p.sig).unwrap(), both(&prof_closed)),
        ];
        for (k, o) in checks {
            worst = worst.max(rel(k, o));
        }
    }
    outcome(
        worst < 1e-8,
        format!("max relative error {worst:.2e} (tol 1e-8) over 200 problems"),
    )
}

fn homoscedastic(seed: u64) -> MockConfig {
    MockConfig {
        n: 1000,
        sigma_x_spread_frac: 0.0,
        sigma_y_spread: 0.0,
        seed,
        ..MockConfig::default()
    }
}

fn criterion_2() -> Outcome {
    let lin = Linear::new();
    let mut worst: f64 = 0.0;
    let mut worst_stat: f64 = 0.0;
    let mut boundary = 0;
    let mut errors = Vec::new();
    for r in 0..50 {
        let (d, _) = gen_mock(&homoscedastic(1000 + r)).unwrap();
        let m = moments(&d);
        let e = HomoscedasticErrors::from_dataset(&d).unwrap();
        let run = |method: Method| -> mnr_core::Result<MleFit> {
            let spec = LikelihoodSpec::new(method);
            fit_mle(&spec, &d, &lin, &default_init(&spec, &d, &lin, None)?)
        };
        let res = (|| -> mnr_core::Result<()> {
            let u = unif_mle(&m, &e)?;
            let f = run(Method::Unif)?;
            for (num, exact) in f.values.iter().zip([u.a, u.b, sigma_int_from_s2(u.s2, e.sigma_y)]) {
                worst = worst.max(rel(*num, exact));
            }
            let n = mnr_mle(&m, &e)?;
            let f = run(Method::Mnr)?;
            let exact = [n.a, n.b, sigma_int_from_s2(n.s2, e.sigma_y), n.mu, n.w2.sqrt()];
            for (num, exact) in f.values.iter().zip(exact) {
                worst = worst.max(rel(*num, exact));
            }
            let p = prof_mle(&m, &e)?;
            if p.report.boundary_won() {
                boundary += 1;
            } else {
                let (ra, rs) = prof_stationarity_residuals(&m, &e, p.a, p.s2);
                worst_stat = worst_stat.max(ra.abs()).max(rs.abs());
            }
            Ok(())
        })();
        if let Err(err) = res {
            errors.push(err.to_string());
        }
    }
    let stat = if boundary == 50 {
        "n/a".to_string()
    } else {
        format!("{worst_stat:.2e}")
    };
    outcome(
        errors.is_empty() && worst < 1e-4 && worst_stat < 1e-8,
        format!(
            "max relative deviation {worst:.2e} (tol 1e-4); prof stationarity {stat} (tol 1e-8), {boundary}/50 on the boundary; {} errors",
            errors.len()
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut bad = 0;
    for _ in 0..10_000 {
        let c = CubicCoeffs::new(
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
        );
        let mut fast = real_roots(&c).unwrap();
        fast.sort_by(f64::total_cmp);
        let slow = real_roots_oracle(&c).unwrap();
        let agree = fast.len() == slow.len()
            && fast
                .iter()
                .zip(&slow)
                .all(|(a, b)| (a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        let resid = fast
            .iter()
            .all(|&r| c.eval(r).abs() <= 1e-10 * c.max_abs() * (1.0 + r.abs()).powi(3));
        if !agree || !resid {
            bad += 1;
        }
    }
    let factored: [([f64; 4], &[f64]); 3] = [
        ([1.0, -6.0, 11.0, -6.0], &[1.0, 2.0, 3.0]),
        ([1.0, 0.0, 0.0, 1.0], &[-1.0]),
        ([1.0, 0.0, -3.0, 2.0], &[-2.0, 1.0, 1.0]),
    ];
    let mut factored_ok = 0;
    for (c, want) in factored {
        let mut got = real_roots(&CubicCoeffs::new(c[0], c[1], c[2], c[3])).unwrap();
        got.sort_by(f64::total_cmp);
        if got.len() == want.len() && got.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-12) {
            factored_ok += 1;
        }
    }
    outcome(
        bad == 0 && factored_ok == 3,
        format!("{bad}/10000 oracle or residual mismatches; {factored_ok}/3 factored cases exact"),
    )
}

fn criterion_4() -> Outcome {
    let cfg = MockConfig {
        n: 1_000_000,
        a_true: 5.0,
        sigma_x_mean: 1.0,
        sigma_y_mean: 2.0,
        sigma_int_true: 2.0,
        xt_dist: XtDist::Exponential { scale: 8.0 },
        sigma_x_spread_frac: 0.0,
        sigma_y_spread: 0.0,
        seed: 404,
        ..MockConfig::default()
    };
    let (d, truth) = gen_mock(&cfg).unwrap();
    let fit = unif_mle(&moments(&d), &HomoscedasticErrors::new(1.0, 2.0)).unwrap();
    let delta = unif_bias(5.0, stats::mean(&truth.x_t), stats::var_sample(&truth.x_t), 1.0).d_a;
    let got = fit.a - 5.0;
    let r = rel(got, delta);
    outcome(
        r < 0.1,
        format!("empirical dA {got:.5}, predicted {delta:.5}, relative difference {r:.3} (tol 0.1)"),
    )
}

fn criterion_5() -> Outcome {
    let lin = Linear::new();
    let spec = LikelihoodSpec::new(Method::Prof);
    let mut pinned = 0;
    let mut failed = 0;
    for r in 0..30 {
        let (d, _) = gen_mock(&MockConfig {
            seed: 500 + r,
            ..MockConfig::default()
        })
        .unwrap();
        match default_init(&spec, &d, &lin, None).and_then(|i| fit_mle(&spec, &d, &lin, &i)) {
            Ok(f) if f.params.sigma_int == 0.0 => pinned += 1,
            Ok(_) => {}
            Err(_) => failed += 1,
        }
    }
    outcome(
        pinned >= 27,
        format!("{pinned}/30 fits with sigma_int = 0 (need >= 27); {failed} failed"),
    )
}

fn describe(c: &CellResult) -> String {
    c.reports
        .iter()
        .map(|r| {
            format!(
                "{} median {:+.2} half-w68 {:.2} mean {:+.2}",
                r.parameter,
                r.median,
                0.5 * r.width68(),
                r.mean
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_6() -> Outcome {
    let study = StudyConfig {
        replicates: 30,
        seed: 600,
        ..StudyConfig::default()
    };
    let fid = run_cells(&[MockConfig::default()], &[LikelihoodSpec::new(Method::Mnr)], &study).remove(0);
    // The 68% interval is judged by its half-width, which is 1 for a
    // standard normal.
    let fid_ok = fid.n_ok == 30
        && fid
            .reports
            .iter()
            .all(|r| r.median.abs() < 0.5 && (0.6..=1.6).contains(&(0.5 * r.width68())));
    println!("  fiducial mnr ({} ok): {}", fid.n_ok, describe(&fid));

    // The corner grid runs 640 posteriors, so chains are shorter than the
    // defaults; two per fit keep one stuck chain from deciding a replicate.
    let grid_study = StudyConfig {
        replicates: 10,
        seed: 601,
        sampler: SamplerConfig {
            n_warmup: 300,
            n_samples: 350,
            n_chains: 2,
            ..SamplerConfig::default()
        },
        ..StudyConfig::default()
    };
    let grid = run_5d_grid(&[Method::Mnr, Method::Unif], 2, &grid_study);
    let max_abs = |m: Method| {
        grid.cells
            .iter()
            .filter(|c| c.method == m)
            .flat_map(|c| c.reports.iter().map(|r| r.mean.abs()))
            .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
    };
    let failed: usize = grid.cells.iter().map(|c| c.n_failed).sum();
    let (mnr_max, unif_max) = (max_abs(Method::Mnr), max_abs(Method::Unif));
    let worst_mnr = grid
        .cells
        .iter()
        .filter(|c| c.method == Method::Mnr)
        .max_by(|a, b| {
            let f = |c: &CellResult| c.reports.iter().map(|r| r.mean.abs()).fold(0.0, f64::max);
            f(a).total_cmp(&f(b))
        })
        .unwrap();
    println!(
        "  worst mnr cell A={} sigma_int={} N={} sigma_x={} lambda={:?}: {}",
        worst_mnr.cell.a_true,
        worst_mnr.cell.sigma_int_true,
        worst_mnr.cell.n,
        worst_mnr.cell.sigma_x_mean,
        worst_mnr.cell.lambda_x(),
        describe(worst_mnr)
    );
    let grid_ok = mnr_max < 1.5 && unif_max > 3.0 && failed == 0;
    outcome(
        fid_ok && grid_ok,
        format!(
            "fiducial {}; grid max |mean bias| mnr {mnr_max:.2} (< 1.5), unif {unif_max:.2} (> 3), {failed} failed fits",
            if fid_ok { "ok" } else { "out of tolerance" }
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let lin = Linear::new();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..20);
        let d = Dataset::diagonal(
            (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
            (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
            (0..n).map(|_| rng.random_range(0.0..2.0)).collect(),
            (0..n).map(|_| rng.random_range(0.05..2.0)).collect(),
        )
        .unwrap();
        let th = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let (s, mu, w) = (
            rng.random_range(0.0..2.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.1..4.0),
        );
        let m = loglike_mnr_diag(&d, &lin, &th, s, mu, w).unwrap();
        let g = loglike_gmm_diag(
            &d,
            &lin,
            &th,
            s,
            &[Component {
                weight: 1.0,
                mean: mu,
                width: w,
            }],
        )
        .unwrap();
        worst = worst.max(rel(g, m));
    }
    let degenerate_ok = worst <= 1e-12;

    let study = StudyConfig {
        replicates: 10,
        seed: 700,
        sampler: SamplerConfig {
            n_warmup: 500,
            n_samples: 1500,
            ..SamplerConfig::default()
        },
        ..StudyConfig::default()
    };
    let res = match run_gmm_study(&[MockConfig::default()], 1..=3, Hyperprior::Hierarchical, &study) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("study failed: {e}")),
    };
    let mut worst_z: f64 = 0.0;
    for c in &res.cells {
        println!("  n_gauss {} ({} ok): {}", c.n_gauss, c.n_ok, describe(c));
    }
    let selected: Vec<String> = res.selected[0]
        .iter()
        .map(|s| s.map_or("-".into(), |v| v.to_string()))
        .collect();
    println!("  BIC-selected n_gauss per replicate: {}", selected.join(" "));
    for name in ["A", "B", "sigma_int"] {
        let rows: Vec<&Vec<f64>> = res.cells.iter().map(|c| &c.report(name).unwrap().biases).collect();
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let (a, b) = (rows[i], rows[j]);
                let se = (stats::var_sample(a) / a.len() as f64 + stats::var_sample(b) / b.len() as f64).sqrt();
                worst_z = worst_z.max((stats::mean(a) - stats::mean(b)).abs() / se);
            }
        }
    }
    let failed: usize = res.cells.iter().map(|c| c.n_failed).sum();
    outcome(
        degenerate_ok && worst_z < 3.0 && failed == 0,
        format!(
            "N_g = 1 vs mnr max relative difference {worst:.1e} (tol 1e-12); largest pairwise mean-bias difference {worst_z:.2} standard errors (< 3); {failed} failed fits"
        ),
    )
}

/// Synthetic stand-in for the cluster catalogue, drawn from the quoted
/// mnr best fit.
fn criterion_8() -> Outcome {
    let (alpha, one_minus_b, scatter) = (0.70, 0.84, 0.08);
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let g = Normal::new(0.0, 1.0).unwrap();
    let n = 250;
    let (mut x, mut y, mut sx, mut sy) = (vec![], vec![], vec![], vec![]);
    for _ in 0..n {
        let xt = -0.1 + 0.35 * g.sample(&mut rng);
        let yt = alpha * xt + f64::log10(one_minus_b) + scatter * g.sample(&mut rng);
        let (ex, ey) = (rng.random_range(0.1..0.3), rng.random_range(0.03..0.08));
        x.push(xt + ex * g.sample(&mut rng));
        y.push(yt + ey * g.sample(&mut rng));
        sx.push(ex);
        sy.push(ey);
    }
    let d = Dataset::diagonal(x, y, sx, sy).unwrap();
    let model = Linear::with_names("alpha", "log10_1mb");
    let cfg = SamplerConfig {
        seed: 8,
        ..SamplerConfig::default()
    };
    let post = match sample_posterior(&LikelihoodSpec::new(Method::Mnr), &d, &model, &cfg) {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("sampling failed: {e}")),
    };
    let a = post.column("alpha").unwrap();
    let ob: Vec<f64> = post
        .column("log10_1mb")
        .unwrap()
        .iter()
        .map(|v| 10f64.powf(*v))
        .collect();
    let (ma, sa) = (stats::mean(&a), stats::std_sample(&a));
    let (mb, sb) = (stats::mean(&ob), stats::std_sample(&ob));
    let za = (ma - alpha) / sa;
    let zb = (mb - one_minus_b) / sb;
    outcome(
        za.abs() < 2.0 && zb.abs() < 2.0,
        format!(
            "alpha {ma:.3} +- {sa:.3} ({za:+.2} sigma), 1-b {mb:.3} +- {sb:.3} ({zb:+.2} sigma), need within 2 sigma"
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let lin = Linear::new();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..10);
        let d = Dataset::diagonal(
            (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
            (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
            (0..n).map(|_| rng.random_range(0.05..1.5)).collect(),
            (0..n).map(|_| rng.random_range(0.05..1.5)).collect(),
        )
        .unwrap();
        let full = d.to_full();
        let th = [rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0)];
        let s = rng.random_range(0.0..1.0);
        let (mu, w) = (rng.random_range(-3.0..3.0), rng.random_range(0.3..3.0));
        let lp = LatentPrior::shared(mu, w, n);
        for (m, diag) in [
            (Method::Unif, loglike_unif_diag(&d, &lin, &th, s).unwrap()),
            (Method::Prof, loglike_prof_diag(&d, &lin, &th, s).unwrap()),
            (Method::Mnr, loglike_mnr_diag(&d, &lin, &th, s, mu, w).unwrap()),
        ] {
            worst = worst.max(rel(loglike_general(m, &full, &lin, &th, s, Some(&lp)).unwrap(), diag));
        }
    }

    let l = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.4, 0.0, 0.0, 0.0, 0.1, 0.5, 0.0, 0.0, 0.15, -0.1, 0.6, 0.0, -0.05, 0.2, 0.1, 0.45,
        ],
    );
    let cov = &l * l.transpose();
    let d = Dataset::with_covariance(vec![0.3, 2.1], vec![1.2, 4.9], cov.clone()).unwrap();
    let (a, b, s, mu, w) = (1.7, 0.4, 0.3, 1.0, 1.5);
    let mut c = cov.clone();
    c[(2, 2)] += s * s;
    c[(3, 3)] += s * s;
    let obs = DVector::from_vec(vec![0.3, 2.1, 1.2, 4.9]);
    let joint = |x1: f64, x2: f64| mvn_logpdf(&obs, &DVector::from_vec(vec![x1, x2, a * x1 + b, a * x2 + b]), &c);
    let (lo, hi) = ([0.3 - 8.0, 2.1 - 8.0], [0.3 + 8.0, 2.1 + 8.0]);
    let qu = log_integrate_2d(joint, lo, hi, 40);
    let qm = log_integrate_2d(
        |x1, x2| joint(x1, x2) + norm_logpdf(x1, mu, w * w) + norm_logpdf(x2, mu, w * w),
        lo,
        hi,
        40,
    );
    let (mut x1, mut x2, mut best) = (0.3, 2.1, f64::NEG_INFINITY);
    for _ in 0..200 {
        x1 = golden_max(|t| joint(t, x2), x1 - 5.0, x1 + 5.0).0;
        let r = golden_max(|t| joint(x1, t), x2 - 5.0, x2 + 5.0);
        x2 = r.0;
        best = r.1;
    }
    let sxx = cov.view((0, 0), (2, 2)).clone_owned();
    let qp = best + 0.5 * (2.0 * (2.0 * std::f64::consts::PI).ln() + sxx.determinant().ln());
    let dense = [
        rel(loglike_general(Method::Unif, &d, &lin, &[a, b], s, None).unwrap(), qu),
        rel(
            loglike_general(Method::Mnr, &d, &lin, &[a, b], s, Some(&LatentPrior::shared(mu, w, 2))).unwrap(),
            qm,
        ),
        rel(loglike_general(Method::Prof, &d, &lin, &[a, b], s, None).unwrap(), qp),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    outcome(
        worst < 1e-10 && dense < 1e-6,
        format!(
            "diagonal reduction max relative error {worst:.1e} (tol 1e-10); dense quadrature {dense:.1e} (tol 1e-6)"
        ),
    )
}

fn criterion_10() -> Outcome {
    let (d, _) = gen_mock(&MockConfig {
        n: 250,
        seed: 1010,
        ..MockConfig::default()
    })
    .unwrap();
    let cfg = SamplerConfig {
        n_warmup: 700,
        n_samples: 5000,
        n_chains: 1,
        ..SamplerConfig::default()
    };
    let t = Instant::now();
    let res = sample_posterior(&LikelihoodSpec::new(Method::Mnr), &d, &Linear::new(), &cfg);
    let secs = t.elapsed().as_secs_f64();
    outcome(
        res.is_ok() && secs <= 60.0,
        format!("5700 steps on N = 250 in {secs:.2} s (limit 60 s)"),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome, Option<f64>);

fn main() {
    // Wall-clock limits in seconds; criterion 10 times itself.
    let criteria: [Criterion; 10] = [
        (1, "kernels match quadrature", criterion_1, Some(60.0)),
        (2, "closed-form MLE closure", criterion_2, Some(120.0)),
        (3, "cubic solver", criterion_3, Some(10.0)),
        (4, "unif asymptotic slope bias", criterion_4, Some(60.0)),
        (5, "prof pins sigma_int at zero", criterion_5, Some(120.0)),
        (6, "mnr unbiased on mocks", criterion_6, Some(900.0)),
        (7, "mixture degeneracy and N_g study", criterion_7, Some(1200.0)),
        (8, "cluster relation recovery", criterion_8, None),
        (9, "general covariance reduction", criterion_9, Some(60.0)),
        (10, "sampling performance", criterion_10, None),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, run, limit) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let secs = t.elapsed().as_secs_f64();
        let in_time = limit.is_none_or(|l| secs <= l);
        let pass = o.pass && in_time;
        let limit_note = match limit {
            Some(l) if !in_time => format!(", over the {l:.0} s limit"),
            _ => String::new(),
        };
        println!(
            "criterion {n:>2} {name}: {} ({}) [{secs:.1} s{limit_note}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
        );
        failed += usize::from(!pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
