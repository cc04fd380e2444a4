use serde::Serialize;

use super::config::ChargeConfig;

/// Groups of charge indices with every intra-group distance `< e^{-r}` and
/// every inter-group distance `≥ e^{-r}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterPartition {
    pub scale: f64,
    /// Indices into the configuration, each group sorted by position.
    pub groups: Vec<Vec<usize>>,
    /// `Σ λ` per group.
    pub charges: Vec<i64>,
}

impl ClusterPartition {
    pub fn all_neutral(&self) -> bool {
        self.charges.iter().all(|&c| c == 0)
    }
}

/// Checks both distance conditions for an arbitrary grouping.
pub fn verify_partition(config: &ChargeConfig, groups: &[Vec<usize>], threshold: f64) -> bool {
    let x = config.positions();
    for (a, ga) in groups.iter().enumerate() {
        for (i, &p) in ga.iter().enumerate() {
            for &q in &ga[i + 1..] {
                if (x[p] - x[q]).abs() >= threshold {
                    return false;
                }
            }
            for gb in &groups[a + 1..] {
                for &q in gb {
                    if (x[p] - x[q]).abs() < threshold {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Single-linkage clustering at `e^{-r}` followed by verification; `None`
/// when no partition satisfies both conditions.
pub fn cluster_partition(config: &ChargeConfig, r: f64) -> Option<ClusterPartition> {
    let threshold = (-r).exp();
    let x = config.positions();
    let mut order: Vec<usize> = (0..config.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        if k > 0 && x[i] - x[order[k - 1]] < threshold {
            groups.last_mut().expect("group exists").push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    if !verify_partition(config, &groups, threshold) {
        return None;
    }
    let charges = groups
        .iter()
        .map(|g| g.iter().map(|&i| config.signs()[i] as i64).sum())
        .collect();
    Some(ClusterPartition {
        scale: r,
        groups,
        charges,
    })
}
