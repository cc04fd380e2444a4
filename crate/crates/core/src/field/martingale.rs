use num_complex::Complex64;

use super::ensemble::FieldEnsemble;
use crate::error::{Error, Result};

/// `Σ_i w_i cos(β X(x_i) + φ(x_i) + i ψ(x_i)) · e^{β² t / 2}` for one replica.
///
/// `cos(a + ib) = cos a cosh b − i sin a sinh b`. Every supported seed has
/// `Q(0) = 1`, so the Wick factor is `e^{β² K_t(x,x)/2} = e^{β² t/2}`.
pub fn martingale_value(
    field: &[f64],
    weights: &[f64],
    beta: f64,
    t: f64,
    phase: Option<&[f64]>,
    shift: Option<&[f64]>,
) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..field.len() {
        let a = beta * field[i] + phase.map_or(0.0, |p| p[i]);
        match shift {
            Some(s) if s[i] != 0.0 => {
                let b = s[i];
                re += weights[i] * a.cos() * b.cosh();
                im -= weights[i] * a.sin() * b.sinh();
            }
            _ => re += weights[i] * a.cos(),
        }
    }
    let wick = (0.5 * beta * beta * t).exp();
    Complex64::new(re * wick, im * wick)
}

fn check_profile(name: &str, values: Option<&[f64]>, len: usize) -> Result<()> {
    if let Some(v) = values {
        if v.len() != len {
            return Err(Error::Domain(format!(
                "{name} has {} samples but the grid has {len} nodes",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("{name} contains non-finite values")));
        }
    }
    Ok(())
}

/// Per-replica value of the martingale at `t_k`, optionally with a real
/// phase `φ` and an imaginary shift `ψ` on the grid.
pub fn evaluate_martingale(
    ensemble: &FieldEnsemble,
    beta: f64,
    slab_index: usize,
    phase: Option<&[f64]>,
    shift: Option<&[f64]>,
) -> Result<Vec<Complex64>> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be finite and nonnegative, got {beta}")));
    }
    let t = ensemble.cutoff(slab_index)?;
    let g = ensemble.grid().len();
    check_profile("phase", phase, g)?;
    check_profile("imaginary shift", shift, g)?;
    let weights = ensemble.grid().weights();
    (0..ensemble.replicas())
        .map(|r| {
            let field = ensemble.field(r, slab_index);
            if field.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite field value in replica {} at slab {slab_index}",
                    ensemble.first_replica() + r
                )));
            }
            let v = martingale_value(field, weights, beta, t, phase, shift);
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                Err(Error::Numerical(format!(
                    "martingale value overflowed in replica {}",
                    ensemble.first_replica() + r
                )))
            }
        })
        .collect()
}
