//! Unbiased k-statistics up to order six with a block jackknife.
//!
//! `k_n = Σ_π μ(π) [r_1 … r_k]` over set partitions `π` of `{1..n}` with
//! block sizes `r_j`, where `[r_1 … r_k]` is the augmented symmetric mean
//! `Σ_{distinct i} Π x_{i_j}^{r_j} / N(N−1)…(N−k+1)`. The augmented sums
//! are expanded into power sums by Möbius inversion on set partitions.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::stats::{BlockSums, Estimate, DEFAULT_BLOCKS};

pub const MAX_KSTAT_ORDER: usize = 6;

/// `coef · Π s_p / N^{(k)}`.
#[derive(Debug, Clone)]
struct Term {
    k: usize,
    coef: f64,
    powers: Vec<usize>,
}

fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    // restricted growth strings: element i goes to block labels[i]
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut labels = vec![0usize; n];
    loop {
        out.push(labels.clone());
        let mut i = n - 1;
        loop {
            let max_prev = labels[..i].iter().cloned().max().unwrap_or(0);
            if i > 0 && labels[i] <= max_prev {
                labels[i] += 1;
                for l in labels.iter_mut().skip(i + 1) {
                    *l = 0;
                }
                break;
            }
            if i == 0 {
                return out;
            }
            i -= 1;
        }
    }
}

fn block_sizes(labels: &[usize]) -> Vec<usize> {
    let k = labels.iter().cloned().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; k];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

fn mobius(blocks: usize) -> f64 {
    let sign = if blocks % 2 == 1 { 1.0 } else { -1.0 };
    sign * (1..blocks).map(|v| v as f64).product::<f64>()
}

fn expansion(n: usize) -> Vec<Term> {
    let mut merged: BTreeMap<(usize, Vec<usize>), f64> = BTreeMap::new();
    for pi in set_partitions(n) {
        let r = block_sizes(&pi);
        let k = r.len();
        let mu_pi = mobius(k);
        for sigma in set_partitions(k) {
            let groups = block_sizes(&sigma);
            let mut coef = mu_pi;
            for &g in &groups {
                coef *= mobius(g);
            }
            let mut powers = vec![0usize; groups.len()];
            for (j, &label) in sigma.iter().enumerate() {
                powers[label] += r[j];
            }
            powers.sort_unstable();
            *merged.entry((k, powers)).or_insert(0.0) += coef;
        }
    }
    merged
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|((k, powers), coef)| Term { k, coef, powers })
        .collect()
}

fn expansions() -> &'static Vec<Vec<Term>> {
    static CELL: OnceLock<Vec<Vec<Term>>> = OnceLock::new();
    CELL.get_or_init(|| (0..=MAX_KSTAT_ORDER).map(expansion).collect())
}

/// `k_n` from power sums `s[p-1] = Σ x^p` (data already centred) and size `count`.
fn k_from_power_sums(n: usize, s: &[f64], count: usize) -> f64 {
    let nf = count as f64;
    expansions()[n]
        .iter()
        .map(|term| {
            let falling: f64 = (0..term.k).map(|j| nf - j as f64).product();
            let prod: f64 = term.powers.iter().map(|&p| s[p - 1]).product();
            term.coef * prod / falling
        })
        .sum()
}

fn centring(data: &[f64]) -> (f64, f64) {
    let x0 = data[0];
    let m = data.iter().map(|x| x - x0).sum::<f64>() / data.len() as f64;
    (x0, m)
}

fn check(data: &[f64], order_max: usize) -> Result<()> {
    if order_max == 0 || order_max > MAX_KSTAT_ORDER {
        return Err(Error::Precondition(format!(
            "k-statistics are provided for orders 1..={MAX_KSTAT_ORDER}, requested {order_max}"
        )));
    }
    if data.len() <= order_max {
        return Err(Error::Precondition(format!(
            "{} samples are too few for order {order_max}",
            data.len()
        )));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("k-statistic input is not finite".into()));
    }
    Ok(())
}

/// Unbiased estimates of `κ_1..κ_order_max`.
pub fn k_statistics(data: &[f64], order_max: usize) -> Result<Vec<f64>> {
    check(data, order_max)?;
    let (x0, m) = centring(data);
    let mut s = vec![0.0; order_max];
    for &x in data {
        let c = (x - x0) - m;
        let mut p = 1.0;
        for v in s.iter_mut() {
            p *= c;
            *v += p;
        }
    }
    Ok(assemble(&s, data.len(), order_max, x0 + m))
}

fn assemble(s: &[f64], count: usize, order_max: usize, shift: f64) -> Vec<f64> {
    (1..=order_max)
        .map(|n| {
            if n == 1 {
                shift + s[0] / count as f64
            } else {
                k_from_power_sums(n, s, count)
            }
        })
        .collect()
}

/// k-statistics with delete-one-block jackknife errors over `blocks` blocks.
pub fn sample_cumulants(data: &[f64], order_max: usize, blocks: usize) -> Result<Vec<Estimate>> {
    check(data, order_max)?;
    let (x0, m) = centring(data);
    let sums = BlockSums::new(data.len(), blocks, order_max, |i, acc| {
        let c = (data[i] - x0) - m;
        let mut p = 1.0;
        for v in acc.iter_mut() {
            p *= c;
            *v += p;
        }
    });
    let smallest_left = data.len() - data.len().div_ceil(sums.blocks().max(1));
    Ok((1..=order_max)
        .map(|n| {
            let est = sums.jackknife(|s, count| assemble(s, count, n, x0 + m)[n - 1]);
            if sums.blocks() < 2 || smallest_left <= n {
                Estimate { value: est.value, stderr: f64::NAN }
            } else {
                est
            }
        })
        .collect())
}

/// [`sample_cumulants`] with the default 50 blocks.
pub fn sample_cumulants_default(data: &[f64], order_max: usize) -> Result<Vec<Estimate>> {
    sample_cumulants(data, order_max, DEFAULT_BLOCKS)
}
