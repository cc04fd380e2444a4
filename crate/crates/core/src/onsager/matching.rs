use serde::Serialize;

use super::config::ChargeConfig;
use crate::error::{Error, Result};
use crate::field::KernelFamily;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matching {
    /// `m = Σ_k |pos_k − neg_{σ(k)}|`.
    pub value: f64,
    /// `sigma[k]` is the index in `neg` matched to `pos[k]`.
    pub sigma: Vec<usize>,
}

fn rank_order(xs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
    idx
}

/// One-dimensional optimal matching: sort each class and pair by rank.
///
/// The value is summed in the index order of `pos`.
pub fn wasserstein_matching(pos: &[f64], neg: &[f64]) -> Result<Matching> {
    if pos.len() != neg.len() || pos.is_empty() {
        return Err(Error::Precondition(format!(
            "matching needs equally many + and - charges (got {} and {})",
            pos.len(),
            neg.len()
        )));
    }
    let rp = rank_order(pos);
    let rn = rank_order(neg);
    let mut sigma = vec![0usize; pos.len()];
    for (a, b) in rp.iter().zip(&rn) {
        sigma[*a] = *b;
    }
    let value = pos
        .iter()
        .enumerate()
        .map(|(k, &x)| (x - neg[sigma[k]]).abs())
        .sum();
    Ok(Matching { value, sigma })
}

/// `U(x, s, u) = 2 Σ_{k<l} λ_k λ_l ∫_s^u Q_r(x_k, x_l) dr`, summed over
/// pairs of the canonical ordering so relabeling cannot change the result.
pub fn potential_increment(family: &KernelFamily, config: &ChargeConfig, s: f64, u: f64) -> Result<f64> {
    if !(s.is_finite() && u.is_finite() && 0.0 <= s && s <= u) {
        return Err(Error::Domain(format!("need 0 <= s <= u, got s={s}, u={u}")));
    }
    config.check_in(&family.interval())?;
    let c = config.canonical();
    Ok(2.0 * c.energy(|r| family.k_increment(s, u, r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    fn brute(pos: &[f64], neg: &[f64]) -> f64 {
        (0..neg.len())
            .permutations(neg.len())
            .map(|p| pos.iter().enumerate().map(|(k, &x)| (x - neg[p[k]]).abs()).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn examples() {
        let m = wasserstein_matching(&[0.1, 0.5], &[0.2, 0.6]).unwrap();
        assert!((m.value - 0.2).abs() < 1e-15);
        assert_eq!(m.sigma, vec![0, 1]);
        assert!((brute(&[0.1, 0.5], &[0.2, 0.6]) - 0.2).abs() < 1e-15);
        assert_eq!(wasserstein_matching(&[0.3, 0.1, 0.3], &[0.1, 0.3, 0.3]).unwrap().value, 0.0);
        assert_eq!(wasserstein_matching(&[0.25], &[0.75]).unwrap().value, 0.5);
        assert!(matches!(wasserstein_matching(&[0.1], &[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn ties_follow_input_order() {
        let m = wasserstein_matching(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(m.sigma, vec![0, 1]);
    }

    #[test]
    fn pair_potentials() {
        let f = KernelFamily::default();
        let dipole = ChargeConfig::new(vec![0.2, 0.45], vec![1, -1]).unwrap();
        let k = f.k_kernel(3.0, 0.2, 0.45).unwrap();
        assert!((potential_increment(&f, &dipole, 0.0, 3.0).unwrap() + 2.0 * k).abs() < 1e-14);
        let same = ChargeConfig::new(vec![0.2, 0.45], vec![-1, -1]).unwrap();
        assert!((potential_increment(&f, &same, 0.0, 3.0).unwrap() - 2.0 * k).abs() < 1e-14);
        assert!(potential_increment(&f, &dipole, 2.0, 1.0).is_err());
    }
}
