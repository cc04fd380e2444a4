use serde::Serialize;

use crate::error::{Error, Result};

/// `β_n = sqrt(2(1 − 1/(2n)))` in dimension one; `β_n ↑ √2`.
pub fn beta_threshold(n: usize) -> f64 {
    assert!(n >= 1, "thresholds are indexed from 1");
    (2.0 - 1.0 / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ThresholdIndex {
    /// Smallest `n` with `β < β_n`.
    pub n: usize,
    /// `n − 1`: even cumulants `C_2 … C_{2(n−1)}` must be subtracted.
    pub counterterms: usize,
}

/// Locates `β` among the thresholds. Comparisons are made on `β²` against
/// `2 − 1/n`, so the boundary values are exact.
pub fn threshold_index(beta: f64) -> Result<ThresholdIndex> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive and finite, got {beta}")));
    }
    let b2 = beta * beta;
    if b2 >= 2.0 {
        return Err(Error::Domain(format!(
            "beta = {beta} is at or beyond the Kosterlitz-Thouless point sqrt(2); \
             renormalization is impossible there"
        )));
    }
    let mut n = 1usize;
    while b2 >= 2.0 - 1.0 / n as f64 {
        n += 1;
    }
    Ok(ThresholdIndex {
        n,
        counterterms: n - 1,
    })
}

/// The first `count` thresholds.
pub fn threshold_table(count: usize) -> Vec<(usize, f64)> {
    (1..=count).map(|n| (n, beta_threshold(n))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_thresholds() {
        assert_eq!(beta_threshold(1), 1.0);
        assert!((beta_threshold(2).powi(2) - 1.5).abs() < 1e-15);
        assert!((beta_threshold(3).powi(2) - 5.0 / 3.0).abs() < 1e-15);
        assert!((beta_threshold(4).powi(2) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn index_examples() {
        assert_eq!(threshold_index(0.5).unwrap(), ThresholdIndex { n: 1, counterterms: 0 });
        assert_eq!(threshold_index(1.2).unwrap(), ThresholdIndex { n: 2, counterterms: 1 });
        assert_eq!(threshold_index(1.3).unwrap(), ThresholdIndex { n: 4, counterterms: 3 });
        assert_eq!(threshold_index(1.0).unwrap().n, 2);
        assert!(matches!(threshold_index(2f64.sqrt()), Err(Error::Domain(_))));
        assert!(threshold_index(1.6).is_err());
        assert!(threshold_index(0.0).is_err());
    }

    proptest! {
        #[test]
        fn thresholds_increase_to_sqrt2(n in 1usize..10_000) {
            prop_assert!(beta_threshold(n) < beta_threshold(n + 1));
            prop_assert!(beta_threshold(n) < 2f64.sqrt());
        }

        #[test]
        fn index_brackets_beta(beta in 0.01f64..1.41) {
            let idx = threshold_index(beta).unwrap();
            prop_assert!(beta < beta_threshold(idx.n));
            if idx.n > 1 {
                prop_assert!(beta >= beta_threshold(idx.n - 1) * (1.0 - 1e-15));
            }
        }
    }
}
