//! Convergence diagnostics, information criteria and summaries.

use crate::optim::{minimize, NelderMeadOptions};
use crate::spec::{LikelihoodSpec, Method};
use crate::stats::{self, log_norm_cdf, LN_2PI};

/// Split each chain in half, dropping the middle draw of odd-length chains.
fn split(chains: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let h = c.len() / 2;
        out.push(c[..h].to_vec());
        out.push(c[c.len() - h..].to_vec());
    }
    out
}

/// Split potential scale reduction factor, never below 1.
pub fn split_rhat(chains: &[&[f64]]) -> f64 {
    let s = split(chains);
    let n = s.first().map_or(0, |c| c.len());
    if n < 2 || s.len() < 2 {
        return 1.0;
    }
    let means: Vec<f64> = s.iter().map(|c| stats::mean(c)).collect();
    let w = stats::mean(&s.iter().map(|c| stats::var_sample(c)).collect::<Vec<_>>());
    let b = n as f64 * stats::var_sample(&means);
    if !(w > 0.0) {
        return 1.0;
    }
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    (var_plus / w).sqrt().max(1.0)
}

/// Effective sample size over split chains using Geyer's initial monotone
/// sequence, capped at the number of draws.
pub fn effective_sample_size(chains: &[&[f64]]) -> f64 {
    let total: usize = chains.iter().map(|c| c.len()).sum();
    let s = split(chains);
    let n = s.first().map_or(0, |c| c.len());
    if n < 4 {
        return total as f64;
    }
    let m = s.len();
    let means: Vec<f64> = s.iter().map(|c| stats::mean(c)).collect();
    let acov = |lag: usize| -> f64 {
        let mut acc = 0.0;
        for (c, mu) in s.iter().zip(&means) {
            let mut a = 0.0;
            for t in 0..n - lag {
                a += (c[t] - mu) * (c[t + lag] - mu);
            }
            acc += a / n as f64;
        }
        acc / m as f64
    };
    let acov0: Vec<f64> = s
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64)
        .collect();
    let mean_var = stats::mean(&acov0) * n as f64 / (n as f64 - 1.0);
    let mut var_plus = mean_var * (n as f64 - 1.0) / n as f64;
    if m > 1 {
        var_plus += stats::var_sample(&means);
    }
    if !(var_plus > 0.0) {
        return total as f64;
    }
    let mut rho = vec![0.0; n + 2];
    let mut even = 1.0;
    rho[0] = even;
    let mut odd = 1.0 - (mean_var - acov(1)) / var_plus;
    rho[1] = odd;
    let mut t = 1;
    while t < n - 4 && even + odd > 0.0 {
        even = 1.0 - (mean_var - acov(t + 1)) / var_plus;
        odd = 1.0 - (mean_var - acov(t + 2)) / var_plus;
        if even + odd >= 0.0 {
            rho[t + 1] = even;
            rho[t + 2] = odd;
        }
        t += 2;
    }
    let max_t = t;
    if even > 0.0 {
        rho[max_t + 1] = even;
    }
    let mut k = 1;
    while k + 3 <= max_t {
        if rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k] {
            rho[k + 1] = 0.5 * (rho[k - 1] + rho[k]);
            rho[k + 2] = rho[k + 1];
        }
        k += 2;
    }
    let tau = -1.0 + 2.0 * rho[..max_t].iter().sum::<f64>() + rho[max_t + 1];
    let ess = (m * n) as f64 / tau;
    if ess.is_finite() && ess > 0.0 {
        ess.min(total as f64)
    } else {
        total as f64
    }
}

/// k ln N - 2 ln L.
pub fn bic(log_like_hat: f64, k: usize, n: usize) -> f64 {
    k as f64 * (n as f64).ln() - 2.0 * log_like_hat
}

/// Free parameters counted for the information criterion: the model
/// parameters, sigma_int, and 2 (mnr) or 3 N_g - 1 (mixture) latent-prior
/// parameters, plus 3 shared hyperparameters when hierarchical.
pub fn n_free_params(spec: &LikelihoodSpec, n_theta: usize) -> usize {
    let mut k = n_theta + usize::from(spec.include_intrinsic_scatter);
    k += match spec.method {
        Method::Mnr => 2,
        Method::Gmm => 3 * spec.n_gauss - 1,
        _ => 0,
    };
    if spec.is_hierarchical() {
        k += 3;
    }
    k
}

/// Mode and width of a normal truncated at zero, fitted to non-negative
/// draws by maximum likelihood. The mode is the fitted location clamped
/// at zero.
pub fn sigma_int_summary(samples: &[f64]) -> (f64, f64) {
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    // Sorted so the result does not depend on draw order.
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let samples = &sorted[..];
    let first = samples[0];
    if samples.iter().all(|&v| v == first) {
        return (first.max(0.0), 0.0);
    }
    let n = samples.len() as f64;
    let m = stats::mean(samples);
    let sd = stats::var_pop(samples).sqrt();
    let nll = |p: &[f64]| -> f64 {
        let (mu, sigma) = (p[0], p[1].exp());
        let mut s = 0.0;
        for &x in samples {
            let u = (x - mu) / sigma;
            s += 0.5 * u * u;
        }
        s + n * (0.5 * LN_2PI + p[1]) + n * log_norm_cdf(mu / sigma)
    };
    let mut opts = NelderMeadOptions::for_dim(2);
    opts.initial_step = Some(vec![0.1 * sd, 0.1]);
    let r = minimize(nll, &[m, sd.ln()], &opts);
    (r.x[0].max(0.0), r.x[1].exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn bic_arithmetic() {
        assert_eq!(bic(-3.0, 0, 10), 6.0);
        assert!((bic(0.0, 5, 1000) - 34.538_776_394_910_684).abs() < 1e-12);
        assert!(bic(-1.0, 3, 50) < bic(-1.0, 4, 50));
    }

    #[test]
    fn free_parameter_counts() {
        use crate::spec::Hyperprior;
        assert_eq!(n_free_params(&LikelihoodSpec::new(Method::Mnr), 2), 5);
        assert_eq!(n_free_params(&LikelihoodSpec::gmm(1, Hyperprior::UniformOrdered), 2), 5);
        assert_eq!(
            n_free_params(&LikelihoodSpec::gmm(3, Hyperprior::UniformOrdered), 2),
            11
        );
        assert_eq!(n_free_params(&LikelihoodSpec::gmm(3, Hyperprior::Hierarchical), 2), 14);
        assert_eq!(n_free_params(&LikelihoodSpec::new(Method::Unif), 2), 3);
    }

    #[test]
    fn rhat_and_ess_for_iid_chains() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let g = Normal::new(0.0, 1.0).unwrap();
        let a: Vec<f64> = (0..4000).map(|_| g.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..4000).map(|_| g.sample(&mut rng)).collect();
        let r = split_rhat(&[&a, &b]);
        assert!((1.0..1.01).contains(&r), "{r}");
        let e = effective_sample_size(&[&a, &b]);
        assert!(e > 6000.0 && e <= 8000.0, "{e}");
        let shifted: Vec<f64> = b.iter().map(|v| v + 3.0).collect();
        assert!(split_rhat(&[&a, &shifted]) > 1.5);
    }

    #[test]
    fn ess_of_autocorrelated_chain() {
        // AR(1) with phi = 0.9 has ESS about n (1 - phi) / (1 + phi).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let g = Normal::new(0.0, 1.0).unwrap();
        let mut c = vec![0.0; 20000];
        for t in 1..c.len() {
            c[t] = 0.9 * c[t - 1] + g.sample(&mut rng);
        }
        let e = effective_sample_size(&[&c]);
        let expect = 20000.0 * 0.1 / 1.9;
        assert!((e / expect - 1.0).abs() < 0.25, "{e} vs {expect}");
    }

    #[test]
    fn constant_chains() {
        let a = vec![2.0; 10];
        assert_eq!(split_rhat(&[&a, &a]), 1.0);
        assert_eq!(effective_sample_size(&[&a, &a]), 20.0);
        assert_eq!(sigma_int_summary(&a), (2.0, 0.0));
        assert_eq!(sigma_int_summary(&[0.0; 5]), (0.0, 0.0));
    }

    #[test]
    fn truncated_normal_fits() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = Normal::new(5.0, 1.0).unwrap();
        let s: Vec<f64> = (0..5000).map(|_| g.sample(&mut rng)).collect();
        let (mode, sd) = sigma_int_summary(&s);
        assert!(
            (mode / 5.0 - 1.0).abs() < 0.05 && (sd - 1.0).abs() < 0.05,
            "{mode} {sd}"
        );
        let h: Normal<f64> = Normal::new(0.0, 1.0).unwrap();
        let half: Vec<f64> = (0..5000).map(|_| h.sample(&mut rng).abs()).collect();
        let (mode, sd) = sigma_int_summary(&half);
        // The fitted location scatters around zero by about 0.05 at n = 5000.
        assert!(mode < 0.15, "{mode}");
        assert!((sd - 1.0).abs() < 0.1, "{sd}");
        let mut rev = half.clone();
        rev.reverse();
        assert_eq!(sigma_int_summary(&rev).0, sigma_int_summary(&half).0);
    }
}
