use serde::Serialize;

use crate::activity::Activity;
use crate::cumulants::{moment_quadrature, Quadrature, EVALUATION_BUDGET, MAX_POINTS};
use crate::error::{Error, Result};
use crate::field::{Grid, KernelFamily};

use crate::report::Table;

const MAX_TENSOR_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionTerm {
    pub n: usize,
    /// `α_gas^n/n! Σ_λ ∫ e^{−β² E}`.
    pub value: f64,
    pub quadrature: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedPartition {
    pub alpha_gas: f64,
    pub beta: f64,
    pub t: f64,
    pub value: f64,
    pub terms: Vec<PartitionTerm>,
}

impl TruncatedPartition {
    /// Magnitude of the highest retained term.
    pub fn truncation_indicator(&self) -> f64 {
        self.terms.last().map(|t| t.value.abs()).unwrap_or(0.0)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["n", "term", "quadrature"]);
        for term in &self.terms {
            t.push(vec![term.n.into(), term.value.into(), term.quadrature.clone().into()]);
        }
        t.set_meta("alpha_gas", self.alpha_gas);
        t.set_meta("beta", self.beta);
        t.set_meta("t", self.t);
        t.set_meta("value", crate::report::format_float(self.value));
        t.set_meta("truncation_indicator", crate::report::format_float(self.truncation_indicator()));
        t
    }
}

/// Rule used for the `n`-point term: `preferred` when its node tuples times
/// sign patterns fit the evaluation budget, otherwise a single-panel
/// Gauss-Legendre tensor grid with `G^n` within the budget.
pub fn order_quadrature(family: &KernelFamily, t: f64, n: usize, preferred: &Quadrature) -> Result<Quadrature> {
    if n > MAX_POINTS {
        return Err(Error::Resource(format!(
            "partition terms beyond n={MAX_POINTS} are not supported (requested {n})"
        )));
    }
    let patterns = 2f64.powi(n.saturating_sub(1) as i32);
    if preferred.check_budget(family, t, n).is_ok()
        && preferred.evaluations(family, t, n) * patterns <= EVALUATION_BUDGET
    {
        return Ok(preferred.clone());
    }
    let nodes = (EVALUATION_BUDGET.powf(1.0 / n as f64).floor() as usize).min(MAX_TENSOR_NODES);
    let q = Quadrature::Tensor(Grid::gauss_legendre(family, 1, nodes)?);
    q.check_budget(family, t, n)?;
    log::info!("{n}-point term uses {} to stay within the evaluation budget", q.label());
    Ok(q)
}

/// `Σ_{n≤n_max} α_gas^n/n! Σ_λ ∫_{I^n} e^{−β² Σ_{i<j} λ_iλ_j K_t} μ^{⊗n}`.
///
/// The `n`-th term is `(2α_gas)^n/n! · E[M_t^n]`.
pub fn truncated_partition(
    family: &KernelFamily,
    alpha_gas: f64,
    beta: f64,
    t: f64,
    n_max: usize,
    quadrature: &Quadrature,
) -> Result<TruncatedPartition> {
    let alpha = Activity::Gas(alpha_gas);
    alpha.validate()?;
    if !(beta.is_finite() && beta >= 0.0 && t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("invalid (beta, t) = ({beta}, {t})")));
    }
    let rules = (0..=n_max)
        .map(|n| order_quadrature(family, t, n, quadrature))
        .collect::<Result<Vec<_>>>()?;
    let two_alpha = alpha.library();
    let mut terms = Vec::with_capacity(n_max + 1);
    let mut coefficient = 1.0;
    for (n, rule) in rules.iter().enumerate() {
        if n > 0 {
            coefficient *= two_alpha / n as f64;
        }
        let value = if coefficient == 0.0 {
            0.0
        } else {
            coefficient * moment_quadrature(family, beta, t, n, rule)?
        };
        terms.push(PartitionTerm {
            n,
            value,
            quadrature: rule.label(),
        });
    }
    let value = terms.iter().map(|t| t.value).sum();
    Ok(TruncatedPartition {
        alpha_gas,
        beta,
        t,
        value,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_orders() {
        let f = KernelFamily::default();
        let q = Quadrature::default();
        assert_eq!(truncated_partition(&f, 0.0, 0.7, 2.0, 4, &q).unwrap().value, 1.0);
        let z = truncated_partition(&f, 0.3, 0.7, 2.0, 1, &q).unwrap();
        assert!((z.value - 1.6).abs() < 1e-13);
        assert!((z.truncation_indicator() - 0.6).abs() < 1e-13);
    }

    #[test]
    fn free_gas_is_exponential() {
        let f = KernelFamily::default();
        let z = truncated_partition(&f, 0.2, 0.0, 2.0, 8, &Quadrature::default()).unwrap();
        assert!((z.value - (0.4f64).exp()).abs() < 1e-8, "{}", z.value);
    }

    #[test]
    fn high_orders_fit_the_budget() {
        let f = KernelFamily::default();
        for n in 0..=8 {
            let q = order_quadrature(&f, 2.0, n, &Quadrature::default()).unwrap();
            assert!(q.check_budget(&f, 2.0, n).is_ok());
        }
        assert!(matches!(
            order_quadrature(&f, 2.0, 9, &Quadrature::default()),
            Err(Error::Resource(_))
        ));
    }
}
