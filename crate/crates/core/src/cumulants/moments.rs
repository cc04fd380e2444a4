//! Moments and cumulants of `M_t` as log-gas configuration integrals.
//!
//! `E[M_t^n] = 2^{-n} Σ_λ ∫ exp(-β² E_λ) μ^{⊗n}` with
//! `E_λ = Σ_{i<j} λ_i λ_j K_t(x_i, x_j)`, and `C_n` is the same sum with the
//! Boltzmann weight replaced by its Ursell (connected) function, so
//! diverging products of lower orders never have to cancel numerically.

use super::engine::{integrate_pairwise, pair_index, Quadrature, MAX_POINTS};
use crate::error::{Error, Result};
use crate::field::{KernelFamily, KernelTable};

const MAX_SUBSETS: usize = 1 << MAX_POINTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignSum {
    /// Sum only over `λ_1 = +1` and double; exact because `E_λ = E_{-λ}`.
    pub use_flip_symmetry: bool,
}

impl Default for SignSum {
    fn default() -> Self {
        SignSum {
            use_flip_symmetry: true,
        }
    }
}

impl SignSum {
    fn masks(&self, n: usize) -> (impl Iterator<Item = usize>, f64) {
        let all = 1usize << n;
        let (step, start, factor) = if self.use_flip_symmetry && n > 0 {
            (2, 1, 2.0)
        } else {
            (1, 0, 1.0)
        };
        ((start..all).step_by(step), factor)
    }
}

#[inline]
fn sign(mask: usize, i: usize) -> f64 {
    if mask >> i & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `Σ_{i<j} λ_i λ_j K_ij` for the full configuration.
#[inline]
fn energy(n: usize, mask: usize, k: &[f64]) -> f64 {
    let mut e = 0.0;
    for j in 1..n {
        let sj = sign(mask, j);
        for i in 0..j {
            e += sign(mask, i) * sj * k[pair_index(i, j)];
        }
    }
    e
}

/// Ursell function of `W(S) = exp(-β² E_λ(S))` on the full index set.
fn ursell(n: usize, mask: usize, k: &[f64], beta2: f64) -> f64 {
    let full = (1usize << n) - 1;
    let mut e = [0.0f64; MAX_SUBSETS];
    let mut w = [0.0f64; MAX_SUBSETS];
    let mut u = [0.0f64; MAX_SUBSETS];
    w[0] = 1.0;
    for s in 1..=full {
        let top = usize::BITS as usize - 1 - s.leading_zeros() as usize;
        let rest = s & !(1 << top);
        let mut inc = 0.0;
        let st = sign(mask, top);
        let mut r = rest;
        while r != 0 {
            let j = r.trailing_zeros() as usize;
            inc += sign(mask, j) * st * k[pair_index(j, top)];
            r &= r - 1;
        }
        e[s] = e[rest] + inc;
        w[s] = (-beta2 * e[s]).exp();
        let low = s & s.wrapping_neg();
        if s == low {
            u[s] = w[s];
            continue;
        }
        // u(S) = W(S) − Σ_{T ⊊ S, min S ∈ T} u(T) W(S∖T)
        let others = s & !low;
        let mut acc = w[s];
        let mut sub = (others - 1) & others;
        loop {
            let t = low | sub;
            acc -= u[t] * w[s & !t];
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
        u[s] = acc;
    }
    u[full]
}

fn check_inputs(beta: f64, t: f64, n: usize) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be finite and >= 0, got {beta}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("cutoff must be finite and >= 0, got {t}")));
    }
    if n > MAX_POINTS {
        return Err(Error::Resource(format!(
            "order {n} exceeds the supported maximum {MAX_POINTS}"
        )));
    }
    Ok(())
}

fn integrate_kernel_pairs<F>(
    family: &KernelFamily,
    quadrature: &Quadrature,
    t: f64,
    n: usize,
    f: F,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    quadrature.check_budget(family, t, n)?;
    match quadrature {
        Quadrature::Tensor(_) => {
            integrate_pairwise(family, quadrature, t, n, |r| family.k_of_distance(t, r), f)
        }
        Quadrature::Graded(_) => {
            let table = KernelTable::new(family, t);
            integrate_pairwise(family, quadrature, t, n, |r| table.eval(r), f)
        }
    }
}

/// `E[M_t^n]` by quadrature of the log-gas identity.
pub fn moment_quadrature(
    family: &KernelFamily,
    beta: f64,
    t: f64,
    n: usize,
    quadrature: &Quadrature,
) -> Result<f64> {
    moment_quadrature_with(family, beta, t, n, quadrature, SignSum::default())
}

pub fn moment_quadrature_with(
    family: &KernelFamily,
    beta: f64,
    t: f64,
    n: usize,
    quadrature: &Quadrature,
    signs: SignSum,
) -> Result<f64> {
    check_inputs(beta, t, n)?;
    if n == 0 {
        return Ok(1.0);
    }
    let beta2 = beta * beta;
    let integral = integrate_kernel_pairs(family, quadrature, t, n, |k| {
        let (masks, factor) = signs.masks(n);
        factor * masks.map(|m| (-beta2 * energy(n, m, k)).exp()).sum::<f64>()
    })?;
    Ok(integral * 0.5f64.powi(n as i32))
}

/// `C_n(t)` by quadrature of the connected integrand.
pub fn cumulant_quadrature(
    family: &KernelFamily,
    beta: f64,
    t: f64,
    n: usize,
    quadrature: &Quadrature,
) -> Result<f64> {
    cumulant_quadrature_with(family, beta, t, n, quadrature, SignSum::default())
}

pub fn cumulant_quadrature_with(
    family: &KernelFamily,
    beta: f64,
    t: f64,
    n: usize,
    quadrature: &Quadrature,
    signs: SignSum,
) -> Result<f64> {
    check_inputs(beta, t, n)?;
    if n == 0 {
        return Err(Error::Domain("cumulants start at order 1".into()));
    }
    let beta2 = beta * beta;
    let integral = integrate_kernel_pairs(family, quadrature, t, n, |k| {
        let (masks, factor) = signs.masks(n);
        factor * masks.map(|m| ursell(n, m, k, beta2)).sum::<f64>()
    })?;
    Ok(integral * 0.5f64.powi(n as i32))
}
