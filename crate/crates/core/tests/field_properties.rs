use bsg_core::field::{evaluate_martingale, sample_ensemble, FieldSampler, Grid, KernelFamily};
use bsg_core::stats::mean_stderr;
use proptest::prelude::*;

#[test]
fn covariance_law() {
    let f = KernelFamily::default();
    let grid = Grid::midpoint(&f, 16).unwrap();
    let times = [0.0, 1.0, 2.5];
    let e = sample_ensemble(&f, &grid, &times, 20_000, 11).unwrap();
    let x = grid.nodes();
    for &(i, j) in &[(0usize, 0usize), (3, 4), (2, 9), (0, 15)] {
        for (a, b) in [(1usize, 1usize), (1, 2), (2, 2)] {
            let prods: Vec<f64> = (0..e.replicas())
                .map(|r| e.field(r, a)[i] * e.field(r, b)[j])
                .collect();
            let est = mean_stderr(&prods);
            let want = f.k_of_distance(times[a.min(b)], (x[i] - x[j]).abs());
            assert!(
                (est.value - want).abs() < 4.0 * est.stderr,
                "({i},{j}) slabs ({a},{b}): {est:?} vs {want}"
            );
        }
    }
}

#[test]
fn martingale_has_constant_mean() {
    let f = KernelFamily::default();
    let grid = Grid::midpoint(&f, 64).unwrap();
    let times = [0.0, 1.0, 2.0, 3.0];
    let beta = 0.5f64.sqrt();
    let e = sample_ensemble(&f, &grid, &times, 20_000, 12).unwrap();
    let m: Vec<Vec<f64>> = (0..times.len())
        .map(|k| {
            evaluate_martingale(&e, beta, k, None, None)
                .unwrap()
                .iter()
                .map(|z| z.re)
                .collect()
        })
        .collect();
    for k in 1..times.len() {
        let est = mean_stderr(&m[k]);
        assert!((est.value - grid.mass()).abs() < 4.0 * est.stderr, "slab {k}: {est:?}");
        let diff: Vec<f64> = m[k].iter().zip(&m[k - 1]).map(|(a, b)| a - b).collect();
        let d = mean_stderr(&diff);
        assert!(d.value.abs() < 4.0 * d.stderr, "increment {k}: {d:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn replicas_do_not_depend_on_the_range(start in 0usize..200, count in 1usize..80, seed in any::<u64>()) {
        let f = KernelFamily::default();
        let grid = Grid::midpoint(&f, 8).unwrap();
        let s = FieldSampler::new(&f, &grid, &[0.0, 0.5, 1.5], seed).unwrap();
        let whole = s.sample_range(0, start + count);
        let part = s.sample_range(start, count);
        for r in 0..count {
            for k in 0..3 {
                prop_assert_eq!(part.field(r, k), whole.field(start + r, k));
            }
        }
    }
}
