use serde::Serialize;

use super::engine::{integrate_pairwise, Quadrature};
use crate::error::{Error, Result};
use crate::field::KernelFamily;
use crate::stats::{ols, LineFit};

/// `B(s) = (β²/4) ∭ e^{(β²/2)(K_s(x_1,x_1)+K_s(x_2,x_2)+K_s(x_3,x_3))} (Q_s(x_1,x_2) + Q_s(x_1,x_3))`.
///
/// `K_s(x,x) = s` for every supported seed, and the integrand is
/// symmetrized to `(2/3)(Q_12 + Q_13 + Q_23)` before integration.
pub fn bracket12_bound(family: &KernelFamily, beta: f64, s: f64, quadrature: &Quadrature) -> Result<f64> {
    if !(beta.is_finite() && beta >= 0.0 && s.is_finite() && s >= 0.0) {
        return Err(Error::Domain(format!("invalid (beta, s) = ({beta}, {s})")));
    }
    let beta2 = beta * beta;
    let integral = integrate_pairwise(
        family,
        quadrature,
        s,
        3,
        |r| family.q_of_distance(s, r),
        |p| (2.0 / 3.0) * (p[0] + p[1] + p[2]),
    )?;
    Ok(0.25 * beta2 * (1.5 * beta2 * s).exp() * integral)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketScan {
    pub beta: f64,
    pub s: Vec<f64>,
    pub bound: Vec<f64>,
    pub fit: LineFit,
}

impl BracketScan {
    pub fn to_table(&self) -> crate::report::Table {
        let mut t = crate::report::Table::new(&["s", "bound", "log_bound"]);
        for (&s, &b) in self.s.iter().zip(&self.bound) {
            t.push(vec![s.into(), b.into(), b.ln().into()]);
        }
        t.set_meta("beta", self.beta);
        t.set_meta("slope", crate::report::format_float(self.fit.slope));
        t.set_meta("expected_slope", crate::report::format_float(1.5 * self.beta * self.beta - 1.0));
        t
    }
}

/// `B(s)` on `s_list` and the least-squares slope of `ln B(s)`.
pub fn bracket12_bound_scan(
    family: &KernelFamily,
    beta: f64,
    s_list: &[f64],
    quadrature: &Quadrature,
) -> Result<BracketScan> {
    let bound = s_list
        .iter()
        .map(|&s| bracket12_bound(family, beta, s, quadrature))
        .collect::<Result<Vec<f64>>>()?;
    if bound.iter().any(|b| *b <= 0.0) {
        return Err(Error::Numerical("bound vanished; cannot fit a log slope".into()));
    }
    let logs: Vec<f64> = bound.iter().map(|b| b.ln()).collect();
    let fit = ols(s_list, &logs)?;
    Ok(BracketScan {
        beta,
        s: s_list.to_vec(),
        bound,
        fit,
    })
}
