use serde::{Deserialize, Serialize};

use super::engine::Quadrature;
use super::kstat::MAX_KSTAT_ORDER;
use super::moments::cumulant_quadrature;
use super::threshold::threshold_index;
use crate::error::{Error, Result};
use crate::field::{martingale_value, FieldSampler, Grid, KernelFamily};
use crate::stats::{BlockSums, Estimate, DEFAULT_BLOCKS};

/// Field-side Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    /// Midpoint grid size on `I`.
    pub grid_points: usize,
    pub replicas: usize,
    pub master_seed: u64,
}

/// `Σ_{i=1}^{n−1} α^{2i}/(2i)! · C_{2i}(t)` with `n` from the threshold
/// table, and the number of subtracted terms.
pub fn counterterm(
    family: &KernelFamily,
    alpha: f64,
    beta: f64,
    t: f64,
    quadrature: &Quadrature,
) -> Result<(f64, usize)> {
    let idx = threshold_index(beta)?;
    let top = 2 * idx.counterterms;
    if top > MAX_KSTAT_ORDER {
        return Err(Error::Resource(format!(
            "beta = {beta} needs counterterms up to C_{top}, beyond the supported order {MAX_KSTAT_ORDER}"
        )));
    }
    for i in 1..=idx.counterterms {
        quadrature.check_budget(family, t, 2 * i)?;
    }
    if alpha == 0.0 {
        return Ok((0.0, idx.counterterms));
    }
    let mut total = 0.0;
    let mut fact = 1.0;
    for i in 1..=idx.counterterms {
        let k = 2 * i;
        fact *= ((k - 1) * k) as f64;
        let c = cumulant_quadrature(family, beta, t, k, quadrature)?;
        total += alpha.powi(k as i32) / fact * c;
    }
    Ok((total, idx.counterterms))
}

/// `(1/N) Σ e^{α M_i} · e^{-counterterm}` with a block jackknife error.
pub fn renormalize_samples(samples: &[f64], alpha: f64, counterterm: f64) -> Result<Estimate> {
    if samples.is_empty() {
        return Err(Error::Precondition("no samples".into()));
    }
    let shift = samples
        .iter()
        .map(|m| alpha * m)
        .fold(f64::NEG_INFINITY, f64::max);
    let sums = BlockSums::new(samples.len(), DEFAULT_BLOCKS, 1, |i, acc| {
        acc[0] += (alpha * samples[i] - shift).exp()
    });
    let est = sums.jackknife(|s, n| (shift + (s[0] / n as f64).ln() - counterterm).exp());
    crate::error::ensure_finite(est.value, "renormalized partition function")?;
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenormPoint {
    pub t: f64,
    pub alpha: f64,
    pub value: f64,
    pub stderr: f64,
    /// `Σ α^{2i}/(2i)! C_{2i}(t)`.
    pub counterterm: f64,
    pub counterterms: usize,
}

/// `Z̄` at each `(t, α)`, all cutoffs sharing the same field replicas.
pub fn renormalized_flow(
    family: &KernelFamily,
    alphas: &[f64],
    beta: f64,
    t_list: &[f64],
    quadrature: &Quadrature,
    mc: &MonteCarloConfig,
) -> Result<Vec<RenormPoint>> {
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::Domain("activities must be finite".into()));
    }
    if mc.replicas < 2 {
        return Err(Error::Precondition("need at least two replicas".into()));
    }
    let mut cts = Vec::with_capacity(t_list.len() * alphas.len());
    for &t in t_list {
        for &a in alphas {
            cts.push(counterterm(family, a, beta, t, quadrature)?);
        }
    }
    let mut slabs = vec![0.0];
    slabs.extend_from_slice(t_list);
    let grid = Grid::midpoint(family, mc.grid_points)?;
    let sampler = FieldSampler::new(family, &grid, &slabs, mc.master_seed)?;
    let weights = grid.weights();
    let per_replica: Vec<Vec<f64>> = sampler.map_replicas(0, mc.replicas, |view| {
        t_list
            .iter()
            .enumerate()
            .map(|(k, &t)| martingale_value(view.field(k + 1), weights, beta, t, None, None).re)
            .collect()
    });
    let mut out = Vec::with_capacity(cts.len());
    for (k, &t) in t_list.iter().enumerate() {
        let samples: Vec<f64> = per_replica.iter().map(|v| v[k]).collect();
        for (j, &alpha) in alphas.iter().enumerate() {
            let (ct, count) = cts[k * alphas.len() + j];
            let est = renormalize_samples(&samples, alpha, ct)?;
            out.push(RenormPoint {
                t,
                alpha,
                value: est.value,
                stderr: est.stderr,
                counterterm: ct,
                counterterms: count,
            });
        }
    }
    Ok(out)
}

pub fn renormalized_partition(
    family: &KernelFamily,
    alpha: f64,
    beta: f64,
    t: f64,
    quadrature: &Quadrature,
    mc: &MonteCarloConfig,
) -> Result<RenormPoint> {
    Ok(renormalized_flow(family, &[alpha], beta, &[t], quadrature, mc)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mc() -> MonteCarloConfig {
        MonteCarloConfig {
            grid_points: 32,
            replicas: 4000,
            master_seed: 21,
        }
    }

    #[test]
    fn zero_activity_is_exactly_one() {
        let f = KernelFamily::default();
        let p = renormalized_partition(&f, 0.0, 1.1, 2.0, &Quadrature::default(), &mc()).unwrap();
        assert_eq!(p.value, 1.0);
        assert_eq!(p.counterterms, 1);
    }

    #[test]
    fn log_derivative_at_zero_is_mass() {
        let f = KernelFamily::default();
        let h = 1e-3;
        let pts = renormalized_flow(&f, &[-h, h], 0.8, &[2.0], &Quadrature::default(), &mc()).unwrap();
        let slope = (pts[1].value.ln() - pts[0].value.ln()) / (2.0 * h);
        let se = (pts[0].stderr.hypot(pts[1].stderr)) / (2.0 * h);
        assert!((slope - 1.0).abs() < 4.0 * se.max(0.02), "{slope} ± {se}");
    }

    #[test]
    fn counterterm_budget_and_domain() {
        let f = KernelFamily::default();
        let q = Quadrature::default();
        // beta^2 = 1.9: n = 10 counterterms need C_18
        assert!(matches!(counterterm(&f, 0.5, 1.9f64.sqrt(), 3.0, &q), Err(Error::Resource(_))));
        assert!(matches!(counterterm(&f, 0.5, 1.6, 3.0, &q), Err(Error::Domain(_))));
        let (ct, n) = counterterm(&f, 0.5, 0.5, 3.0, &q).unwrap();
        assert_eq!((ct, n), (0.0, 0));
    }

    #[test]
    fn renormalized_samples_of_constants() {
        let est = renormalize_samples(&[2.0; 100], 0.5, 1.0).unwrap();
        assert!((est.value - 1.0).abs() < 1e-15);
        assert!(est.stderr < 1e-15);
    }
}
