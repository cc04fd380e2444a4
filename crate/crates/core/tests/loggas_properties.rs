use bsg_core::cumulants::Quadrature;
use bsg_core::field::{FieldSampler, Grid, Interval, KernelFamily};
use bsg_core::loggas::{
    charge_fourier, correlation_ratio_sampled, neutral_fractions, sg_ratio_sampled, summarize, truncated_partition,
    ChainSettings, GasChain, Insertions, TestFunction,
};
use num_complex::Complex64;

fn chain_samples(alpha_gas: f64, beta2: f64, t: f64, samples: usize, seed: u64) -> Vec<bsg_core::onsager::ChargeConfig> {
    let f = KernelFamily::default();
    let mut chain = GasChain::new(&f, alpha_gas, beta2.sqrt(), t, ChainSettings::default(), seed, 0).unwrap();
    chain.collect(samples).unwrap()
}

#[test]
fn mean_count_matches_log_derivative_of_the_series() {
    let f = KernelFamily::default();
    let (alpha, beta) = (0.5, 0.5f64.sqrt());
    let h = 1e-3;
    let ln_z = |a: f64| truncated_partition(&f, a, beta, 2.0, 8, &Quadrature::default()).unwrap().value.ln();
    let want = alpha * (ln_z(alpha + h) - ln_z(alpha - h)) / (2.0 * h);
    let mut chain = GasChain::new(&f, alpha, beta, 2.0, ChainSettings::default(), 31, 0).unwrap();
    let counts: Vec<f64> = chain.collect(60_000).unwrap().iter().map(|c| c.len() as f64).collect();
    let s = summarize(&counts, &chain.counters());
    assert!((s.mean_n - want).abs() < 3.0 * s.mean_n_stderr, "{} +- {} vs {want}", s.mean_n, s.mean_n_stderr);
}

#[test]
fn vanishing_activity_empties_the_chain() {
    let samples = chain_samples(1e-4, 0.5, 2.0, 5_000, 2);
    let mean = samples.iter().map(|c| c.len()).sum::<usize>() as f64 / samples.len() as f64;
    assert!(mean < 5e-3, "{mean}");
}

#[test]
fn free_gas_fourier_transform_of_a_constant() {
    let c = 0.7;
    let alpha = 0.6;
    let samples = chain_samples(alpha, 0.0, 2.0, 40_000, 3);
    let theta = TestFunction::from_fn(Interval::unit(), 2, |_| c).unwrap();
    let est = charge_fourier(&samples, &theta).unwrap();
    let want = (2.0 * alpha * (c.cos() - 1.0)).exp();
    assert!((est.value.re - want).abs() < 3.0 * est.stderr_re + 1e-12, "{est:?} vs {want}");
    assert!(est.value.norm() <= 1.0 + 3.0 * est.stderr);
}

#[test]
fn neutral_clustering_grows_with_beta() {
    let t = 2.0;
    let stats: Vec<_> = [0.5, 1.0, 1.5]
        .iter()
        .map(|&b2| neutral_fractions(&chain_samples(0.5, b2, t, 30_000, 4), t))
        .collect();
    for w in stats.windows(2) {
        assert!(w[1].particles > w[0].particles, "{:?}", stats.iter().map(|s| s.particles).collect::<Vec<_>>());
        assert!(w[1].by_count[&2].0 > w[0].by_count[&2].0);
    }
}

#[test]
#[ignore = "all-neutral configuration fraction falls with beta^2 (0.39, 0.35, 0.28) because the particle count grows; the per-particle and fixed-count trends are tested above"]
fn all_neutral_fraction_grows_with_beta() {
    let t = 2.0;
    let f: Vec<f64> = [0.5, 1.0, 1.5]
        .iter()
        .map(|&b2| neutral_fractions(&chain_samples(0.5, b2, t, 30_000, 4), t).configurations)
        .collect();
    assert!(f.windows(2).all(|w| w[1] > w[0]), "{f:?}");
}

#[test]
fn duality_at_weak_coupling() {
    let f = KernelFamily::default();
    let theta = TestFunction::from_fn(Interval::unit(), 129, |x| 0.8 * (std::f64::consts::PI * x).cos()).unwrap();
    let (alpha_gas, b2, t) = (0.3, 0.8, 1.5);
    let samples = chain_samples(alpha_gas, b2, t, 60_000, 5);
    let gas = charge_fourier(&samples, &theta).unwrap();
    let grid = Grid::midpoint(&f, 64).unwrap();
    let sampler = FieldSampler::new(&f, &grid, &[0.0, t], 6).unwrap();
    let field = sg_ratio_sampled(&sampler, 40_000, 2.0 * alpha_gas, b2.sqrt(), &[1], &theta).unwrap()[0];
    assert!(gas.z_score(&field) < 3.0, "{gas:?} vs {field:?}");
    assert!(gas.value.norm() <= 1.0 + 3.0 * gas.stderr);
}

#[test]
fn opposite_insertions_are_conjugate() {
    let f = KernelFamily::default();
    let grid = Grid::midpoint(&f, 64).unwrap();
    let sampler = FieldSampler::new(&f, &grid, &[0.0, 1.0, 2.0], 7).unwrap();
    let iv = Interval::unit();
    let a = Insertions::new(vec![0.3, 0.7], vec![0.25, 0.4], &iv).unwrap();
    let b = Insertions::new(vec![0.3, 0.7], vec![-0.25, -0.4], &iv).unwrap();
    let ra = correlation_ratio_sampled(&f, &sampler, 4_000, 0.5, 0.8, &a, &[1, 2]).unwrap();
    let rb = correlation_ratio_sampled(&f, &sampler, 4_000, 0.5, 0.8, &b, &[1, 2]).unwrap();
    for (x, y) in ra.iter().zip(&rb) {
        let d: Complex64 = x.estimate.value - y.estimate.value.conj();
        assert!(d.norm() <= 3.0 * x.estimate.stderr.hypot(y.estimate.stderr) + 1e-12);
    }
}
