use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Interval;

/// A point of `Ξ_I`: `n` charges with positions and signs `±1`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChargeConfig {
    positions: Vec<f64>,
    signs: Vec<i8>,
}

impl ChargeConfig {
    pub fn new(positions: Vec<f64>, signs: Vec<i8>) -> Result<Self> {
        if positions.len() != signs.len() {
            return Err(Error::Domain(format!(
                "{} positions but {} signs",
                positions.len(),
                signs.len()
            )));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("charge positions must be finite".into()));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Domain("charge signs must be +1 or -1".into()));
        }
        Ok(ChargeConfig { positions, signs })
    }

    pub fn empty() -> Self {
        ChargeConfig::default()
    }

    /// `p` negative charges followed by `q` positive ones.
    pub fn from_classes(negative: &[f64], positive: &[f64]) -> Result<Self> {
        let mut positions = negative.to_vec();
        positions.extend_from_slice(positive);
        let mut signs = vec![-1i8; negative.len()];
        signs.extend(std::iter::repeat(1i8).take(positive.len()));
        ChargeConfig::new(positions, signs)
    }

    pub fn check_in(&self, interval: &Interval) -> Result<()> {
        match self.positions.iter().find(|&&x| !interval.contains(x)) {
            Some(x) => Err(Error::Domain(format!(
                "charge at {x} lies outside [{}, {}]",
                interval.lo, interval.hi
            ))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn charge(&self) -> i64 {
        self.signs.iter().map(|&s| s as i64).sum()
    }

    pub fn is_neutral(&self) -> bool {
        self.charge() == 0
    }

    pub fn positive(&self) -> Vec<f64> {
        self.class(1)
    }

    pub fn negative(&self) -> Vec<f64> {
        self.class(-1)
    }

    fn class(&self, sign: i8) -> Vec<f64> {
        self.positions
            .iter()
            .zip(&self.signs)
            .filter(|(_, &s)| s == sign)
            .map(|(&x, _)| x)
            .collect()
    }

    /// Negative charges first, each sign class sorted by position
    /// (stable, so equal positions keep their input order).
    pub fn canonical(&self) -> ChargeConfig {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.signs[a]
                .cmp(&self.signs[b])
                .then(self.positions[a].total_cmp(&self.positions[b]))
        });
        ChargeConfig {
            positions: order.iter().map(|&i| self.positions[i]).collect(),
            signs: order.iter().map(|&i| self.signs[i]).collect(),
        }
    }

    pub fn push(&mut self, x: f64, sign: i8) {
        debug_assert!(sign == 1 || sign == -1);
        self.positions.push(x);
        self.signs.push(sign);
    }

    /// Removes charge `k` by swapping in the last one.
    pub fn swap_remove(&mut self, k: usize) -> (f64, i8) {
        (self.positions.swap_remove(k), self.signs.swap_remove(k))
    }

    pub fn set_position(&mut self, k: usize, x: f64) {
        self.positions[k] = x;
    }

    /// `Σ_{i<j} λ_i λ_j kernel(|x_i − x_j|)`.
    pub fn energy<K: Fn(f64) -> f64>(&self, kernel: K) -> f64 {
        let mut e = 0.0;
        for j in 1..self.len() {
            for i in 0..j {
                let s = (self.signs[i] * self.signs[j]) as f64;
                e += s * kernel((self.positions[i] - self.positions[j]).abs());
            }
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neutrality_and_classes() {
        let c = ChargeConfig::new(vec![0.3, 0.1, 0.7], vec![1, -1, 1]).unwrap();
        assert!(!c.is_neutral());
        assert_eq!(c.charge(), 1);
        assert_eq!(c.negative(), vec![0.1]);
        assert_eq!(c.positive(), vec![0.3, 0.7]);
        assert!(ChargeConfig::empty().is_neutral());
        assert!(ChargeConfig::new(vec![0.1], vec![0]).is_err());
    }

    #[test]
    fn canonical_order() {
        let c = ChargeConfig::new(vec![0.9, 0.2, 0.5, 0.1], vec![1, 1, -1, -1]).unwrap();
        let k = c.canonical();
        assert_eq!(k.signs(), &[-1, -1, 1, 1]);
        assert_eq!(k.positions(), &[0.1, 0.5, 0.2, 0.9]);
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent_and_preserves_pairs(
            pts in proptest::collection::vec((0.0f64..1.0, proptest::bool::ANY), 0..12)
        ) {
            let positions: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let signs: Vec<i8> = pts.iter().map(|p| if p.1 { 1 } else { -1 }).collect();
            let c = ChargeConfig::new(positions, signs).unwrap();
            let k = c.canonical();
            prop_assert_eq!(&k.canonical(), &k);
            let key = |c: &ChargeConfig| {
                let mut v: Vec<(i8, u64)> = c.signs().iter().zip(c.positions()).map(|(&s, &x)| (s, x.to_bits())).collect();
                v.sort();
                v
            };
            prop_assert_eq!(key(&c), key(&k));
        }
    }
}
