//! Statistical properties of the arrival and attribute samplers, checked
//! against independent oracles (quadrature, direct homogeneous sampling,
//! reference CDFs).

mod common;

use backlogsim_core::engine::{stream_rng, StreamKind};
use backlogsim_core::stochastic::{
    sample_arrival_times, sample_attribute_pair, AttributeModel, IntensityFunction,
};
use common::{ks_one_sample, ks_two_sample, mean, pearson, simpson};
use statrs::distribution::{ContinuousCDF, Exp, LogNormal};

fn interarrivals(times: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in times {
        out.push(t - prev);
        prev = t;
    }
    out
}

#[test]
fn sinusoid_mean_rate_matches_quadrature() {
    let intensity = IntensityFunction::sinusoid(3.0, 3.3, 3600.0).unwrap();
    let horizon = 1e6;
    let mut rng = stream_rng(101, StreamKind::Arrivals);
    let times = sample_arrival_times(&intensity, horizon, &mut rng);

    // Expected count is the integral of the rate over the horizon.
    let expected = simpson(|t| intensity.evaluate(t), 0.0, horizon, 200_000);
    let ratio = times.len() as f64 / expected;
    assert!(
        (ratio - 1.0).abs() < 0.01,
        "count {} vs integral {expected}",
        times.len()
    );
    // Empirical mean rate lands within 1% of the sinusoid midpoint.
    let mean_rate = times.len() as f64 / horizon;
    assert!(
        (mean_rate - 3.15).abs() / 3.15 < 0.01,
        "mean rate {mean_rate}"
    );
}

#[test]
fn constant_rate_interarrivals_are_exponential() {
    let lambda = 3.0;
    let intensity = IntensityFunction::constant(lambda).unwrap();
    let mut rng = stream_rng(7, StreamKind::Arrivals);
    let times = sample_arrival_times(&intensity, 4000.0, &mut rng);
    let gaps = interarrivals(&times);
    assert!(gaps.len() >= 10_000);

    let exp = Exp::new(lambda).unwrap();
    let (d, p) = ks_one_sample(&gaps[..10_000], |x| exp.cdf(x));
    assert!(p > 0.01, "KS d={d}, p={p}");
}

#[test]
fn thinning_distribution_is_invariant_to_the_bound() {
    // Same target rate sampled under a loose bound must match a direct
    // homogeneous Poisson oracle of that rate.
    let lambda = 3.0;
    let horizon = 4000.0;
    let loose = IntensityFunction::constant(lambda)
        .unwrap()
        .with_lambda_max(6.0)
        .unwrap();
    let mut rng = stream_rng(23, StreamKind::Arrivals);
    let thinned = sample_arrival_times(&loose, horizon, &mut rng);

    let mut oracle_rng = stream_rng(24, StreamKind::Arrivals);
    let mut oracle = Vec::new();
    let mut t = 0.0f64;
    loop {
        let u: f64 = rand::Rng::sample(&mut oracle_rng, rand::distr::Open01);
        t -= u.ln() / lambda;
        if t > horizon {
            break;
        }
        oracle.push(t);
    }

    let a = interarrivals(&thinned);
    let b = interarrivals(&oracle);
    let n = a.len().min(b.len()).min(10_000);
    let (d, p) = ks_two_sample(&a[..n], &b[..n]);
    assert!(p > 0.01, "KS d={d}, p={p} (n={n})");

    // Acceptance ratio under the loose bound is lambda / bound = 0.5; the
    // accepted count must sit near lambda * horizon either way.
    let expected = lambda * horizon;
    assert!((thinned.len() as f64 - expected).abs() / expected < 0.05);
}

#[test]
fn doubling_the_intensity_doubles_the_count() {
    let horizon = 3e5;
    let base = IntensityFunction::sinusoid(3.0, 3.3, 3600.0).unwrap();
    let doubled = IntensityFunction::sinusoid(6.0, 6.6, 3600.0).unwrap();
    let n_base =
        sample_arrival_times(&base, horizon, &mut stream_rng(31, StreamKind::Arrivals)).len();
    let n_doubled =
        sample_arrival_times(&doubled, horizon, &mut stream_rng(32, StreamKind::Arrivals)).len();
    let ratio = n_doubled as f64 / n_base as f64;
    assert!((ratio - 2.0).abs() / 2.0 < 0.02, "ratio {ratio}");
}

#[test]
fn copula_correlation_matches_rho_in_log_space() {
    for (seed, rho) in [(41u64, 0.0f64), (42u64, 0.2)] {
        let model = AttributeModel {
            copula_rho: rho,
            ..AttributeModel::default()
        };
        let mut rng = stream_rng(seed, StreamKind::Attributes);
        let n = 100_000;
        let mut log_fees = Vec::with_capacity(n);
        let mut log_sizes = Vec::with_capacity(n);
        for _ in 0..n {
            let (fee, size) = sample_attribute_pair(&model, &mut rng);
            log_fees.push(fee.ln());
            log_sizes.push((size as f64).ln());
        }
        let r = pearson(&log_fees, &log_sizes);
        assert!((r - rho).abs() < 0.02, "rho {rho}: sample correlation {r}");
    }
}

#[test]
fn size_marginal_mean_matches_lognormal_formula() {
    // E[S] = exp(mu + sigma^2 / 2) = exp(5.95 + 0.18) ~ 460 bytes.
    let model = AttributeModel::<f64>::default();
    let mut rng = stream_rng(43, StreamKind::Attributes);
    let sizes: Vec<f64> = (0..100_000)
        .map(|_| sample_attribute_pair(&model, &mut rng).1 as f64)
        .collect();
    let expected = (5.95f64 + 0.18).exp();
    let m = mean(&sizes);
    assert!(
        (m - expected).abs() / expected < 0.02,
        "mean size {m}, expected {expected}"
    );
}

#[test]
fn copula_preserves_both_marginals_for_any_rho() {
    // The size floor is dropped to one byte so the reference lognormal is
    // the exact marginal (the default 150-byte floor intentionally clamps
    // the left tail).
    let fee_ref = LogNormal::new(9.0, 1.0).unwrap();
    let size_ref = LogNormal::new(5.95, 0.6).unwrap();
    for (seed, rho) in [(51u64, -0.5), (52u64, 0.0), (53u64, 0.7)] {
        let model = AttributeModel {
            copula_rho: rho,
            min_size: 1,
            ..AttributeModel::default()
        };
        let mut rng = stream_rng(seed, StreamKind::Attributes);
        let n = 10_000;
        let mut fees = Vec::with_capacity(n);
        let mut sizes = Vec::with_capacity(n);
        for _ in 0..n {
            let (fee, size) = sample_attribute_pair(&model, &mut rng);
            fees.push(fee);
            sizes.push(size as f64);
        }
        let (d, p) = ks_one_sample(&fees, |x| fee_ref.cdf(x));
        assert!(p > 0.01, "fee marginal rho={rho}: d={d} p={p}");
        // Sizes are rounded up to whole bytes; compare against the shifted
        // CDF at integer points to keep the discretization bias one-sided.
        let (d, p) = ks_one_sample(&sizes, |x| size_ref.cdf(x - 0.5));
        assert!(p > 0.01, "size marginal rho={rho}: d={d} p={p}");
    }
}

#[test]
fn identical_seeds_give_bit_identical_streams() {
    let intensity = IntensityFunction::sinusoid(3.0, 3.3, 3600.0).unwrap();
    let a = sample_arrival_times(&intensity, 1e5, &mut stream_rng(9, StreamKind::Arrivals));
    let b = sample_arrival_times(&intensity, 1e5, &mut stream_rng(9, StreamKind::Arrivals));
    assert_eq!(a, b);

    let model = AttributeModel::<f64>::default();
    let mut ra = stream_rng(9, StreamKind::Attributes);
    let mut rb = stream_rng(9, StreamKind::Attributes);
    for _ in 0..1000 {
        assert_eq!(
            sample_attribute_pair(&model, &mut ra),
            sample_attribute_pair(&model, &mut rb)
        );
    }
}
