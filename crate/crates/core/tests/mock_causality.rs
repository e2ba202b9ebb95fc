use mnr_core::causality::MARGIN;
use mnr_core::mock::{mix_seed, BiasReport, SweepParam};
use mnr_core::stats;
use mnr_core::*;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

#[test]
fn exponential_abscissae_have_the_right_moments() {
    let cfg = MockConfig {
        n: 1_000_000,
        seed: 21,
        ..MockConfig::default()
    };
    let (d, truth) = gen_mock(&cfg).unwrap();
    assert_eq!(d.len(), cfg.n);
    let m = stats::mean(&truth.x_t);
    let v = stats::var_sample(&truth.x_t);
    // Exponential with mean 8: sd of the mean is 8e-3, of the variance ~ 64 * sqrt(8 / n).
    assert!((m - 8.0).abs() < 0.03, "mean {m}");
    let se_var = 64.0 * (8.0 / cfg.n as f64).sqrt();
    assert!((v - 64.0).abs() < 3.0 * se_var, "var {v} (se {se_var})");
    assert!(truth.x_t.iter().all(|x| *x >= 0.0));
    assert!(d.x_err().unwrap().iter().all(|s| *s >= 0.0));
    for (yt, xt) in truth.y_t.iter().zip(&truth.x_t).take(5) {
        // y_t carries intrinsic scatter about the line.
        assert!((yt - (5.0 * xt + 1.0)).abs() < 20.0);
    }
}

#[test]
fn mocks_are_deterministic_per_seed() {
    let cfg = MockConfig {
        n: 50,
        seed: 3,
        ..MockConfig::default()
    };
    let (a, _) = gen_mock(&cfg).unwrap();
    let (b, _) = gen_mock(&cfg).unwrap();
    assert_eq!(a, b);
    let (c, _) = gen_mock(&MockConfig { seed: 4, ..cfg }).unwrap();
    assert_ne!(a, c);
    assert_ne!(mix_seed(&[1, 2, 3]), mix_seed(&[1, 3, 2]));
}

#[test]
fn invalid_mock_configs_are_rejected() {
    for cfg in [
        MockConfig {
            n: 0,
            ..MockConfig::default()
        },
        MockConfig {
            sigma_int_true: -1.0,
            ..MockConfig::default()
        },
        MockConfig {
            xt_dist: XtDist::Uniform { lo: 2.0, hi: 1.0 },
            ..MockConfig::default()
        },
        MockConfig {
            xt_dist: XtDist::Exponential { scale: 0.0 },
            ..MockConfig::default()
        },
    ] {
        assert!(gen_mock(&cfg).is_err(), "{cfg:?}");
    }
}

#[test]
fn sweep_grids_cover_their_ranges() {
    for p in SweepParam::ALL {
        let (lo, hi) = p.range();
        let g = p.grid(5, true);
        assert_eq!(g.len(), 5);
        assert!((g[0] - lo).abs() < 1e-9 && (g[4] - hi).abs() < 1e-9, "{p:?} {g:?}");
        let mut cfg = MockConfig::default();
        p.apply(&mut cfg, g[2]);
        let back = p.get(&cfg);
        let tol = if p == SweepParam::N { 1.0 } else { 1e-12 };
        assert!((back - g[2]).abs() <= tol, "{p:?}");
    }
}

#[test]
fn bias_report_percentiles() {
    let r = BiasReport::from_biases("A", (0..101).map(|i| i as f64 / 100.0).collect());
    assert!((r.median - 0.5).abs() < 1e-12);
    assert!((r.p16 - 0.16).abs() < 1e-12 && (r.p84 - 0.84).abs() < 1e-12);
    assert!((r.width68() - 0.68).abs() < 1e-12);
}

#[test]
fn bias_is_standardised_offset() {
    let (d, _) = gen_mock(&MockConfig {
        n: 200,
        seed: 5,
        ..MockConfig::default()
    })
    .unwrap();
    let cfg = SamplerConfig {
        n_warmup: 200,
        n_samples: 300,
        ..SamplerConfig::default()
    };
    let post = sample_posterior(&LikelihoodSpec::new(Method::Mnr), &d, &Linear::new(), &cfg).unwrap();
    let (ma, sa) = (post.mean("A").unwrap(), post.std("A").unwrap());
    let (mb, sb) = (post.mean("B").unwrap(), post.std("B").unwrap());
    let (mode, width) = inference::sigma_int_summary(&post.column("sigma_int").unwrap());
    let centred = bias_of_fit(
        &post,
        &TrueLine {
            a: ma,
            b: mb,
            sigma_int: mode,
        },
    )
    .unwrap();
    assert!(centred.a.abs() < 1e-9 && centred.b.abs() < 1e-9 && centred.sigma_int.abs() < 1e-9);
    let shifted = bias_of_fit(
        &post,
        &TrueLine {
            a: ma - sa,
            b: mb + sb,
            sigma_int: mode - width,
        },
    )
    .unwrap();
    assert!((shifted.a - 1.0).abs() < 1e-9);
    assert!((shifted.b + 1.0).abs() < 1e-9);
    assert!((shifted.sigma_int - 1.0).abs() < 1e-9);
}

fn line_data(n: usize, sx: f64, sy: f64, seed: u64) -> Dataset {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let xt = Normal::new(10.0, 3.0).unwrap();
    let g = Normal::new(0.0, 1.0).unwrap();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let t = xt.sample(&mut rng);
        x.push(t + sx * g.sample(&mut rng));
        y.push(2.0 * t + 1.0 + sy * g.sample(&mut rng));
    }
    Dataset::diagonal(x, y, vec![sx; n], vec![sy; n]).unwrap()
}

// unif with free scatter is least squares, whose residuals are orthogonal to
// the regressor by construction; mnr removes the dilution and keeps the signal.
fn assess(d: &Dataset) -> CausalityReport {
    assess_causality(d, &Linear::new(), &Linear::new(), &LikelihoodSpec::new(Method::Mnr))
}

#[test]
fn noisy_ordinate_means_x_is_independent() {
    let r = assess(&line_data(1000, 0.05, 3.0, 1));
    assert!(!r.partial());
    assert!(r.advisory);
    assert_eq!(r.margin, MARGIN);
    assert_eq!(r.recommendation, Recommendation::XIndependent);
}

#[test]
fn noisy_abscissa_means_y_is_independent() {
    let r = assess(&line_data(1000, 2.0, 0.05, 2));
    assert_eq!(r.recommendation, Recommendation::YIndependent);
}

#[test]
fn balanced_noise_is_inconclusive() {
    // Equal noise in units of the line: sigma_y = slope * sigma_x.
    let r = assess(&line_data(5000, 1.0, 2.0, 3));
    assert_eq!(r.recommendation, Recommendation::Inconclusive);
}

#[test]
fn swapping_axes_swaps_the_answer() {
    let d = line_data(800, 0.1, 2.5, 4);
    let r = assess(&d);
    let s = assess(&d.swapped());
    let (f, i) = (r.forward.unwrap(), r.inverse.unwrap());
    let (sf, si) = (s.forward.unwrap(), s.inverse.unwrap());
    assert!((f.pearson - si.pearson).abs() < 1e-6);
    assert!((i.spearman - sf.spearman).abs() < 1e-6);
    assert_eq!(r.recommendation, Recommendation::XIndependent);
    assert_eq!(s.recommendation, Recommendation::YIndependent);
}

#[test]
fn recommendation_is_affine_invariant() {
    let d = line_data(800, 0.1, 2.5, 5);
    let scaled = Dataset::diagonal(
        d.x_obs().iter().map(|x| 3.0 * x - 7.0).collect(),
        d.y_obs().iter().map(|y| 0.5 * y + 100.0).collect(),
        d.x_err().unwrap().iter().map(|s| 3.0 * s).collect(),
        d.y_err().unwrap().iter().map(|s| 0.5 * s).collect(),
    )
    .unwrap();
    let (a, b) = (assess(&d), assess(&scaled));
    assert_eq!(a.recommendation, b.recommendation);
    let (fa, fb) = (a.forward.unwrap(), b.forward.unwrap());
    assert!((fa.pearson - fb.pearson).abs() < 1e-4, "{} {}", fa.pearson, fb.pearson);
}

#[test]
fn anticorrelated_residuals() {
    let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
    let r: Vec<f64> = x.iter().map(|v| -v).collect();
    assert!((stats::pearson(&r, &x) + 1.0).abs() < 1e-12);
    assert!((stats::spearman(&r, &x) + 1.0).abs() < 1e-12);
}

#[test]
fn failed_direction_gives_a_partial_report() {
    let d = Dataset::diagonal(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![0.1; 3], vec![0.1; 3]).unwrap();
    // A mixture prior has no general-covariance kernel.
    let r = assess_causality(
        &d.to_full(),
        &Linear::new(),
        &Linear::new(),
        &LikelihoodSpec::gmm(2, Hyperprior::UniformOrdered),
    );
    assert!(r.partial());
    assert!(r.forward_error.is_some() && r.inverse_error.is_some());
    assert_eq!(r.recommendation, Recommendation::Inconclusive);
}

#[test]
fn bias_table_has_one_row_per_cell() {
    use mnr_core::mock::{write_bias_csv, CellResult};
    let cell = |seed: u64| CellResult {
        cell: MockConfig {
            seed,
            ..MockConfig::default()
        },
        method: Method::Mnr,
        n_gauss: 1,
        reports: ["A", "B", "sigma_int"]
            .iter()
            .map(|p| BiasReport::from_biases(p, vec![-1.0, 0.0, 1.0]))
            .collect(),
        n_ok: 3,
        n_failed: 0,
        n_skipped: 0,
        failures: vec![],
    };
    let mut buf = Vec::new();
    write_bias_csv(&mut buf, &[cell(1), cell(2)]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header.len(), 22);
    assert_eq!(header[7], "A_median");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 22));
    assert!(lines[1].starts_with("5,2,1000,1,8,mnr,1,0,"), "{}", lines[1]);
}
