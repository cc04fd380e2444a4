use serde::Serialize;

use super::engine::Quadrature;
use super::kstat::{sample_cumulants, MAX_KSTAT_ORDER};
use super::moments::cumulant_quadrature;
use crate::error::{Error, Result};
use crate::field::{evaluate_martingale, FieldEnsemble, KernelFamily};
use crate::report::Table;
use crate::stats::{ols, DEFAULT_BLOCKS};

pub const MIN_MC_REPLICAS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulantEntry {
    pub t: f64,
    pub order: usize,
    pub value: f64,
    /// Quadrature: change against a rule with two fewer nodes per panel
    /// (zero for tensor grids, which carry no embedded estimate).
    /// Monte Carlo: jackknife standard error.
    pub stderr: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub order: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct CumulantReport {
    pub beta: f64,
    pub alpha: Option<f64>,
    pub cutoffs: Vec<f64>,
    pub entries: Vec<CumulantEntry>,
    pub growth: Vec<GrowthFit>,
}

impl CumulantReport {
    pub fn get(&self, t: f64, order: usize, method: Method) -> Option<&CumulantEntry> {
        self.entries
            .iter()
            .find(|e| e.t == t && e.order == order && e.method == method)
    }

    pub fn series(&self, order: usize, method: Method) -> Vec<&CumulantEntry> {
        self.entries
            .iter()
            .filter(|e| e.order == order && e.method == method)
            .collect()
    }

    /// Least-squares slope of `ln|C_order(t)|` for `t ∈ [t_lo, t_hi]`.
    pub fn fit_growth(&self, order: usize, method: Method, t_lo: f64, t_hi: f64) -> Result<GrowthFit> {
        let points: Vec<(f64, f64)> = self
            .series(order, method)
            .into_iter()
            .filter(|e| e.t >= t_lo && e.t <= t_hi)
            .map(|e| (e.t, e.value.abs().ln()))
            .collect();
        let (x, y): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        let fit = ols(&x, &y)?;
        Ok(GrowthFit {
            order,
            t_lo,
            t_hi,
            slope: fit.slope,
            intercept: fit.intercept,
        })
    }

    pub fn to_table(&self) -> Table {
        let mut table = Table::new(&["t", "order", "value", "stderr", "method"]);
        for e in &self.entries {
            table.push(vec![
                e.t.into(),
                e.order.into(),
                e.value.into(),
                e.stderr.into(),
                e.method.as_str().into(),
            ]);
        }
        table.set_meta("beta", self.beta);
        if let Some(a) = self.alpha {
            table.set_meta("alpha", a);
        }
        for g in &self.growth {
            table.set_meta(
                &format!("growth_slope_order_{}", g.order),
                format!("{:.16e} (t in [{}, {}])", g.slope, g.t_lo, g.t_hi),
            );
        }
        table
    }
}

/// Quadrature cumulants `C_1..C_order_max` at each cutoff, with growth
/// exponents fitted over the upper half of the cutoff range.
pub fn cumulant_curve(
    family: &KernelFamily,
    beta: f64,
    t_list: &[f64],
    order_max: usize,
    quadrature: &Quadrature,
) -> Result<CumulantReport> {
    if order_max == 0 || order_max > MAX_KSTAT_ORDER {
        return Err(Error::Precondition(format!(
            "cumulant orders 1..={MAX_KSTAT_ORDER} are supported, requested {order_max}"
        )));
    }
    if t_list.is_empty() {
        return Err(Error::Precondition("empty cutoff list".into()));
    }
    let t_max = t_list.iter().cloned().fold(0.0, f64::max);
    quadrature.check_budget(family, t_max, order_max)?;
    let coarse = match quadrature {
        Quadrature::Graded(rule) => Some(Quadrature::Graded(rule.coarser())),
        Quadrature::Tensor(_) => None,
    };
    let mut entries = Vec::new();
    for &t in t_list {
        for order in 1..=order_max {
            let value = cumulant_quadrature(family, beta, t, order, quadrature)?;
            let stderr = match &coarse {
                Some(q) => (value - cumulant_quadrature(family, beta, t, order, q)?).abs(),
                None => 0.0,
            };
            log::debug!("C_{order}({t}) = {value:.10e} ± {stderr:.2e}");
            entries.push(CumulantEntry {
                t,
                order,
                value,
                stderr,
                method: Method::Quadrature,
            });
        }
    }
    let mut report = CumulantReport {
        beta,
        alpha: None,
        cutoffs: t_list.to_vec(),
        entries,
        growth: Vec::new(),
    };
    let t_min = t_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let mid = 0.5 * (t_min + t_max);
    let upper = t_list.iter().filter(|&&t| t >= mid).count();
    if upper >= 2 {
        for order in 2..=order_max {
            if let Ok(fit) = report.fit_growth(order, Method::Quadrature, mid, t_max) {
                if fit.slope.is_finite() {
                    report.growth.push(fit);
                }
            }
        }
    }
    Ok(report)
}

/// k-statistic cumulants of per-replica samples.
pub fn sample_report(samples: &[f64], beta: f64, t: f64, order_max: usize) -> Result<CumulantReport> {
    let est = sample_cumulants(samples, order_max, DEFAULT_BLOCKS)?;
    Ok(CumulantReport {
        beta,
        alpha: None,
        cutoffs: vec![t],
        entries: est
            .iter()
            .enumerate()
            .map(|(i, e)| CumulantEntry {
                t,
                order: i + 1,
                value: e.value,
                stderr: e.stderr,
                method: Method::MonteCarlo,
            })
            .collect(),
        growth: Vec::new(),
    })
}

/// Monte Carlo cumulants of `M_t` over the replicas of an ensemble.
pub fn mc_cumulants(
    ensemble: &FieldEnsemble,
    beta: f64,
    slab_index: usize,
    order_max: usize,
) -> Result<CumulantReport> {
    if ensemble.replicas() < MIN_MC_REPLICAS {
        return Err(Error::Precondition(format!(
            "Monte Carlo cumulants need at least {MIN_MC_REPLICAS} replicas, got {}",
            ensemble.replicas()
        )));
    }
    if order_max == 0 || order_max > MAX_KSTAT_ORDER {
        return Err(Error::Precondition(format!(
            "k-statistics are provided for orders 1..={MAX_KSTAT_ORDER}, requested {order_max}"
        )));
    }
    let t = ensemble.cutoff(slab_index)?;
    let samples: Vec<f64> = evaluate_martingale(ensemble, beta, slab_index, None, None)?
        .into_iter()
        .map(|v| v.re)
        .collect();
    sample_report(&samples, beta, t, order_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_ensemble, Grid};

    #[test]
    fn first_cumulant_is_mass() {
        let f = KernelFamily::default();
        let r = cumulant_curve(&f, 0.8, &[1.0, 2.0, 3.0], 2, &Quadrature::default()).unwrap();
        for t in [1.0, 2.0, 3.0] {
            let c1 = r.get(t, 1, Method::Quadrature).unwrap();
            assert!((c1.value - 1.0).abs() < 1e-8);
        }
        assert_eq!(r.growth.len(), 1);
        let table = r.to_table();
        assert_eq!(table.columns, vec!["t", "order", "value", "stderr", "method"]);
        assert_eq!(table.rows.len(), 6);
    }

    #[test]
    fn refuses_high_orders_and_small_ensembles() {
        let f = KernelFamily::default();
        assert!(matches!(
            cumulant_curve(&f, 0.8, &[1.0], 7, &Quadrature::default()),
            Err(Error::Precondition(_))
        ));
        let g = Grid::midpoint(&f, 8).unwrap();
        let e = sample_ensemble(&f, &g, &[0.0, 1.0], 100, 1).unwrap();
        assert!(matches!(mc_cumulants(&e, 0.8, 1, 2), Err(Error::Precondition(_))));
    }
}
