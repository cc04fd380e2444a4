use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{martingale_value, FieldEnsemble, FieldSampler, Grid, Interval, KernelFamily};
use crate::onsager::ChargeConfig;
use crate::stats::{BlockSums, DEFAULT_BLOCKS};

/// Largest grid on which the half-norm estimator visits all pairs.
pub const MAX_THETA_POINTS: usize = 512;

/// Test function sampled on equally spaced points spanning the interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    interval: Interval,
    values: Vec<f64>,
}

impl TestFunction {
    pub fn new(interval: Interval, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || values.len() > MAX_THETA_POINTS {
            return Err(Error::Domain(format!(
                "test function needs 2..={MAX_THETA_POINTS} samples, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("test function samples must be finite".into()));
        }
        Ok(TestFunction { interval, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(interval: Interval, points: usize, f: F) -> Result<Self> {
        let h = interval.length() / (points.max(2) - 1) as f64;
        let values = (0..points).map(|i| f(interval.lo + i as f64 * h)).collect();
        TestFunction::new(interval, values)
    }

    pub fn zero(interval: Interval) -> Self {
        TestFunction {
            interval,
            values: vec![0.0; 2],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn node(&self, i: usize) -> f64 {
        self.interval.lo + i as f64 * self.interval.length() / (self.values.len() - 1) as f64
    }

    /// Piecewise-linear interpolation; constant extension outside the interval.
    pub fn eval(&self, x: f64) -> f64 {
        let cells = (self.values.len() - 1) as f64;
        let s = ((x - self.interval.lo) / self.interval.length() * cells).clamp(0.0, cells);
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn on_grid(&self, grid: &Grid) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.eval(x)).collect()
    }

    /// `max|θ| + max_{i≠j} |θ(x_i) − θ(x_j)| / √|x_i − x_j|` over the samples.
    pub fn holder_halfnorm(&self) -> f64 {
        let sup = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut h = 0.0f64;
        for i in 0..self.values.len() {
            for j in i + 1..self.values.len() {
                let d = (self.node(j) - self.node(i)).sqrt();
                h = h.max((self.values[j] - self.values[i]).abs() / d);
            }
        }
        sup + h
    }

    /// `self + c·other`, sampled on the finer of the two grids.
    pub fn add_scaled(&self, c: f64, other: &TestFunction) -> Result<TestFunction> {
        let points = self.values.len().max(other.values.len());
        TestFunction::from_fn(self.interval, points, |x| self.eval(x) + c * other.eval(x))
    }

    pub fn scaled(&self, c: f64) -> TestFunction {
        TestFunction {
            interval: self.interval,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub value: Complex64,
    /// `√(SE_re² + SE_im²)`.
    pub stderr: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

impl ComplexEstimate {
    pub fn exact(value: Complex64) -> Self {
        ComplexEstimate {
            value,
            stderr: 0.0,
            stderr_re: 0.0,
            stderr_im: 0.0,
        }
    }

    /// `|a − b|` in units of the combined standard error.
    pub fn z_score(&self, other: &ComplexEstimate) -> f64 {
        let se = (self.stderr * self.stderr + other.stderr * other.stderr).sqrt();
        let d = (self.value - other.value).norm();
        if se == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / se
        }
    }
}

/// `E[e^{i Σ λ_k θ(x_k)}]` over a sample stream, with a block jackknife error.
pub fn charge_fourier(samples: &[ChargeConfig], theta: &TestFunction) -> Result<ComplexEstimate> {
    if samples.is_empty() {
        return Err(Error::Precondition("charge_fourier needs at least one sample".into()));
    }
    let blocks = DEFAULT_BLOCKS.min(samples.len());
    let sums = BlockSums::new(samples.len(), blocks, 2, |i, acc| {
        let c = &samples[i];
        let phase: f64 = c
            .positions()
            .iter()
            .zip(c.signs())
            .map(|(&x, &s)| s as f64 * theta.eval(x))
            .sum();
        acc[0] += phase.cos();
        acc[1] += phase.sin();
    });
    finish(&sums, |s, n| s[0] / n as f64, |s, n| s[1] / n as f64)
}

fn finish<R, I>(sums: &BlockSums, re: R, im: I) -> Result<ComplexEstimate>
where
    R: Fn(&[f64], usize) -> f64,
    I: Fn(&[f64], usize) -> f64,
{
    let er = sums.jackknife(re);
    let ei = sums.jackknife(im);
    let (value, stderr_re, stderr_im) = (Complex64::new(er.value, ei.value), er.stderr, ei.stderr);
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Numerical("estimate is not finite".into()));
    }
    Ok(ComplexEstimate {
        value,
        stderr: stderr_re.hypot(stderr_im),
        stderr_re,
        stderr_im,
    })
}

/// `mean(e^{α m̂_r}) / mean(e^{α m_r})` over paired replicas, jackknifed.
pub fn ratio_estimate(alpha: f64, numerator: &[Complex64], denominator: &[f64]) -> Result<ComplexEstimate> {
    if numerator.len() != denominator.len() || numerator.is_empty() {
        return Err(Error::Precondition("ratio needs equally many paired replicas".into()));
    }
    let shift = numerator
        .iter()
        .map(|m| alpha * m.re)
        .chain(denominator.iter().map(|m| alpha * m))
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Numerical("non-finite martingale values".into()));
    }
    let blocks = DEFAULT_BLOCKS.min(numerator.len());
    let sums = BlockSums::new(numerator.len(), blocks, 3, |i, acc| {
        let a = alpha * numerator[i];
        let e = (a.re - shift).exp();
        acc[0] += e * a.im.cos();
        acc[1] += e * a.im.sin();
        acc[2] += (alpha * denominator[i] - shift).exp();
    });
    let (total, _) = sums.total();
    if !(total[2] > 0.0) {
        return Err(Error::Numerical("denominator estimate vanished".into()));
    }
    finish(&sums, |s, _| s[0] / s[2], |s, _| s[1] / s[2])
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta must be finite and >= 0, got {beta}")))
    }
}

/// `E[e^{α M^{(β,θ)}_t}] / E[e^{α M_t}]` on a shared ensemble.
pub fn sg_ratio(
    ensemble: &FieldEnsemble,
    alpha_library: f64,
    beta: f64,
    slab_index: usize,
    theta: &TestFunction,
) -> Result<ComplexEstimate> {
    check_beta(beta)?;
    let t = ensemble.cutoff(slab_index)?;
    let phase = theta.on_grid(ensemble.grid());
    let w = ensemble.grid().weights();
    let mut num = Vec::with_capacity(ensemble.replicas());
    let mut den = Vec::with_capacity(ensemble.replicas());
    for r in 0..ensemble.replicas() {
        let x = ensemble.field(r, slab_index);
        num.push(martingale_value(x, w, beta, t, Some(&phase), None));
        den.push(martingale_value(x, w, beta, t, None, None).re);
    }
    ratio_estimate(alpha_library, &num, &den)
}

/// `sg_ratio` at several slabs, streaming replicas from `sampler`.
pub fn sg_ratio_sampled(
    sampler: &FieldSampler,
    replicas: usize,
    alpha_library: f64,
    beta: f64,
    slabs: &[usize],
    theta: &TestFunction,
) -> Result<Vec<ComplexEstimate>> {
    check_beta(beta)?;
    let times = slab_cutoffs(sampler, slabs)?;
    let phase = theta.on_grid(sampler.grid());
    let w = sampler.grid().weights();
    let values = sampler.map_replicas(0, replicas, |view| {
        slabs
            .iter()
            .zip(&times)
            .map(|(&k, &t)| {
                let x = view.field(k);
                (
                    martingale_value(x, w, beta, t, Some(&phase), None),
                    martingale_value(x, w, beta, t, None, None).re,
                )
            })
            .collect::<Vec<_>>()
    });
    per_slab_ratios(alpha_library, slabs.len(), &values)
}

/// `sg_ratio(θ + δφ) − sg_ratio(θ)` for each `δ`, all on the same replicas,
/// with a paired jackknife error.
#[allow(clippy::too_many_arguments)]
pub fn sg_ratio_response(
    sampler: &FieldSampler,
    replicas: usize,
    alpha_library: f64,
    beta: f64,
    slab: usize,
    theta: &TestFunction,
    direction: &TestFunction,
    deltas: &[f64],
) -> Result<Vec<ComplexEstimate>> {
    check_beta(beta)?;
    if replicas == 0 || deltas.is_empty() {
        return Err(Error::Precondition("response needs replicas and at least one delta".into()));
    }
    let t = slab_cutoffs(sampler, &[slab])?[0];
    let grid = sampler.grid();
    let mut phases = vec![theta.on_grid(grid)];
    for &d in deltas {
        phases.push(theta.add_scaled(d, direction)?.on_grid(grid));
    }
    let w = grid.weights();
    let values = sampler.map_replicas(0, replicas, |view| {
        let x = view.field(slab);
        let mut m: Vec<f64> = phases
            .iter()
            .map(|p| martingale_value(x, w, beta, t, Some(p), None).re)
            .collect();
        m.push(martingale_value(x, w, beta, t, None, None).re);
        m
    });
    let shift = values
        .iter()
        .flatten()
        .map(|m| alpha_library * m)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Numerical("non-finite martingale values".into()));
    }
    let k = phases.len();
    let blocks = DEFAULT_BLOCKS.min(replicas);
    let sums = BlockSums::new(replicas, blocks, k + 1, |i, acc| {
        for (a, m) in acc.iter_mut().zip(&values[i]) {
            *a += (alpha_library * m - shift).exp();
        }
    });
    (1..k)
        .map(|j| finish(&sums, |s, _| (s[j] - s[0]) / s[k], |_, _| 0.0))
        .collect()
}

fn slab_cutoffs(sampler: &FieldSampler, slabs: &[usize]) -> Result<Vec<f64>> {
    slabs
        .iter()
        .map(|&k| {
            sampler
                .slab_times()
                .get(k)
                .copied()
                .ok_or_else(|| Error::Domain(format!("slab index {k} out of range")))
        })
        .collect()
}

fn per_slab_ratios(alpha: f64, slabs: usize, values: &[Vec<(Complex64, f64)>]) -> Result<Vec<ComplexEstimate>> {
    (0..slabs)
        .map(|j| {
            let num: Vec<Complex64> = values.iter().map(|v| v[j].0).collect();
            let den: Vec<f64> = values.iter().map(|v| v[j].1).collect();
            ratio_estimate(alpha, &num, &den)
        })
        .collect()
}

/// Fractional charges `η_l` at points `z_l`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Insertions {
    pub z: Vec<f64>,
    pub eta: Vec<f64>,
}

impl Insertions {
    pub fn new(z: Vec<f64>, eta: Vec<f64>, interval: &Interval) -> Result<Self> {
        if z.len() != eta.len() || z.is_empty() {
            return Err(Error::Domain("need one charge per insertion point".into()));
        }
        if z.iter().chain(&eta).any(|v| !v.is_finite()) {
            return Err(Error::Domain("insertion points and charges must be finite".into()));
        }
        if let Some(x) = z.iter().find(|&&x| !interval.contains(x)) {
            return Err(Error::Domain(format!("insertion point {x} lies outside the interval")));
        }
        for i in 0..z.len() {
            for j in i + 1..z.len() {
                if z[i] == z[j] {
                    return Err(Error::Domain(format!("coincident insertion points at {}", z[i])));
                }
            }
        }
        Ok(Insertions { z, eta })
    }

    /// `(1 + 2 max|η|) β² ≥ 2`.
    pub fn condition_violated(&self, beta: f64) -> bool {
        let m = self.eta.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        (1.0 + 2.0 * m) * beta * beta >= 2.0
    }

    /// `ψ_t(x) = β² Σ_l η_l K_t(x, z_l)` on the grid.
    pub fn shift(&self, family: &KernelFamily, grid: &Grid, beta: f64, t: f64) -> Result<Vec<f64>> {
        let b2 = beta * beta;
        grid.nodes()
            .iter()
            .map(|&x| {
                let mut s = 0.0;
                for (&z, &e) in self.z.iter().zip(&self.eta) {
                    s += e * family.k_kernel(t, x, z)?;
                }
                Ok(b2 * s)
            })
            .collect()
    }

    /// `e^{−β² Σ_{l<l'} η_l η_{l'} K_t(z_l, z_{l'})}`.
    pub fn prefactor(&self, family: &KernelFamily, beta: f64, t: f64) -> Result<f64> {
        let mut e = 0.0;
        for i in 0..self.z.len() {
            for j in i + 1..self.z.len() {
                e += self.eta[i] * self.eta[j] * family.k_kernel(t, self.z[i], self.z[j])?;
            }
        }
        Ok((-beta * beta * e).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRatio {
    pub t: f64,
    pub estimate: ComplexEstimate,
    pub prefactor: f64,
    /// Raised when `(1 + 2 max|η|) β² ≥ 2`.
    pub condition_violated: bool,
}

/// `Ẑ/Z = e^{−β² Σ_{l<l'} η_lη_{l'} K_t(z_l,z_{l'})} E[e^{α M̂_t}] / E[e^{α M_t}]`.
pub fn correlation_ratio(
    family: &KernelFamily,
    ensemble: &FieldEnsemble,
    alpha_library: f64,
    beta: f64,
    insertions: &Insertions,
    slab_index: usize,
) -> Result<CorrelationRatio> {
    check_beta(beta)?;
    let t = ensemble.cutoff(slab_index)?;
    let psi = insertions.shift(family, ensemble.grid(), beta, t)?;
    let w = ensemble.grid().weights();
    let mut num = Vec::with_capacity(ensemble.replicas());
    let mut den = Vec::with_capacity(ensemble.replicas());
    for r in 0..ensemble.replicas() {
        let x = ensemble.field(r, slab_index);
        num.push(martingale_value(x, w, beta, t, None, Some(&psi)));
        den.push(martingale_value(x, w, beta, t, None, None).re);
    }
    finish_correlation(family, alpha_library, beta, insertions, t, &num, &den)
}

fn finish_correlation(
    family: &KernelFamily,
    alpha: f64,
    beta: f64,
    insertions: &Insertions,
    t: f64,
    num: &[Complex64],
    den: &[f64],
) -> Result<CorrelationRatio> {
    let prefactor = insertions.prefactor(family, beta, t)?;
    let mut estimate = ratio_estimate(alpha, num, den)?;
    estimate.value *= prefactor;
    estimate.stderr *= prefactor;
    estimate.stderr_re *= prefactor;
    estimate.stderr_im *= prefactor;
    Ok(CorrelationRatio {
        t,
        estimate,
        prefactor,
        condition_violated: insertions.condition_violated(beta),
    })
}

/// `correlation_ratio` at several slabs, streaming replicas from `sampler`.
pub fn correlation_ratio_sampled(
    family: &KernelFamily,
    sampler: &FieldSampler,
    replicas: usize,
    alpha_library: f64,
    beta: f64,
    insertions: &Insertions,
    slabs: &[usize],
) -> Result<Vec<CorrelationRatio>> {
    check_beta(beta)?;
    let times = slab_cutoffs(sampler, slabs)?;
    let shifts = times
        .iter()
        .map(|&t| insertions.shift(family, sampler.grid(), beta, t))
        .collect::<Result<Vec<_>>>()?;
    let w = sampler.grid().weights();
    let values = sampler.map_replicas(0, replicas, |view| {
        slabs
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let x = view.field(k);
                (
                    martingale_value(x, w, beta, times[j], None, Some(&shifts[j])),
                    martingale_value(x, w, beta, times[j], None, None).re,
                )
            })
            .collect::<Vec<_>>()
    });
    (0..slabs.len())
        .map(|j| {
            let num: Vec<Complex64> = values.iter().map(|v| v[j].0).collect();
            let den: Vec<f64> = values.iter().map(|v| v[j].1).collect();
            finish_correlation(family, alpha_library, beta, insertions, times[j], &num, &den)
        })
        .collect()
}
