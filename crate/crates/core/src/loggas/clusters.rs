use std::collections::BTreeMap;

use serde::Serialize;

use crate::onsager::{cluster_partition, ChargeConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeutralFractions {
    pub scale: f64,
    /// Samples whose partition exists and has only neutral groups.
    pub configurations: f64,
    /// Particles sitting in neutral groups, over samples with a partition.
    pub particles: f64,
    /// `configurations` restricted to each particle count: `(fraction, samples)`.
    pub by_count: BTreeMap<usize, (f64, usize)>,
    /// Samples for which no partition exists at this scale.
    pub unpartitioned: usize,
}

/// Cluster statistics of a sample stream at scale `e^{-r}`.
pub fn neutral_fractions(samples: &[ChargeConfig], r: f64) -> NeutralFractions {
    let mut neutral_configs = 0usize;
    let mut in_neutral = 0usize;
    let mut partitioned_particles = 0usize;
    let mut unpartitioned = 0usize;
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for c in samples {
        let entry = counts.entry(c.len()).or_default();
        entry.1 += 1;
        match cluster_partition(c, r) {
            Some(p) => {
                if p.all_neutral() {
                    neutral_configs += 1;
                    entry.0 += 1;
                }
                for (g, q) in p.groups.iter().zip(&p.charges) {
                    partitioned_particles += g.len();
                    if *q == 0 {
                        in_neutral += g.len();
                    }
                }
            }
            None => unpartitioned += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { f64::NAN } else { a as f64 / b as f64 };
    NeutralFractions {
        scale: r,
        configurations: ratio(neutral_configs, samples.len()),
        particles: ratio(in_neutral, partitioned_particles),
        by_count: counts
            .into_iter()
            .map(|(n, (k, m))| (n, (ratio(k, m), m)))
            .collect(),
        unpartitioned,
    }
}
