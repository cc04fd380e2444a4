//! Small estimators shared by the Monte Carlo paths: block jackknife,
//! log-mean-exp, least squares and autocorrelation diagnostics.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_BLOCKS: usize = 50;

/// A point estimate with a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    /// `|a - b| / sqrt(se_a² + se_b²)`; infinite when both errors vanish
    /// and the values differ.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let diff = (self.value - other.value).abs();
        let se = self.stderr.hypot(other.stderr);
        if diff == 0.0 {
            0.0
        } else {
            diff / se
        }
    }
}

/// Contiguous, nearly equal blocks covering `0..n`.
pub fn block_ranges(n: usize, blocks: usize) -> Vec<Range<usize>> {
    let blocks = blocks.min(n).max(1);
    (0..blocks)
        .map(|b| (b * n / blocks)..((b + 1) * n / blocks))
        .collect()
}

/// Per-block sums of a vector-valued per-sample statistic.
#[derive(Debug, Clone)]
pub struct BlockSums {
    sums: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

impl BlockSums {
    /// `fill(i, out)` adds the statistics of sample `i` into `out`.
    pub fn new<F: FnMut(usize, &mut [f64])>(n: usize, blocks: usize, dims: usize, mut fill: F) -> Self {
        let ranges = block_ranges(n, blocks);
        let mut sums = Vec::with_capacity(ranges.len());
        let mut counts = Vec::with_capacity(ranges.len());
        for r in ranges {
            let mut acc = vec![0.0; dims];
            counts.push(r.len());
            for i in r {
                fill(i, &mut acc);
            }
            sums.push(acc);
        }
        BlockSums { sums, counts }
    }

    pub fn blocks(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> (Vec<f64>, usize) {
        let dims = self.sums.first().map_or(0, |s| s.len());
        let mut acc = vec![0.0; dims];
        for s in &self.sums {
            for (a, v) in acc.iter_mut().zip(s) {
                *a += v;
            }
        }
        (acc, self.counts.iter().sum())
    }

    /// Delete-one-block jackknife of `estimator(sums, count)`.
    pub fn jackknife<F: Fn(&[f64], usize) -> f64>(&self, estimator: F) -> Estimate {
        let (total, n) = self.total();
        let value = estimator(&total, n);
        let b = self.blocks();
        if b < 2 {
            return Estimate { value, stderr: f64::NAN };
        }
        let mut leave = vec![0.0; total.len()];
        let partial: Vec<f64> = (0..b)
            .map(|k| {
                for (l, (t, s)) in leave.iter_mut().zip(total.iter().zip(&self.sums[k])) {
                    *l = t - s;
                }
                estimator(&leave, n - self.counts[k])
            })
            .collect();
        let mean = partial.iter().sum::<f64>() / b as f64;
        let var = partial.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>();
        Estimate {
            value,
            stderr: ((b as f64 - 1.0) / b as f64 * var).sqrt(),
        }
    }
}

/// Sample mean with the naive standard error.
pub fn mean_stderr(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

/// `ln( (1/n) Σ e^{x_i} )` without overflow.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + (s / xs.len() as f64).ln()
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(Error::Precondition(format!(
            "least squares needs at least two paired points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("least squares input is not finite".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("least squares abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_stderr = if n > 2 {
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Integrated autocorrelation time with Sokal's self-consistent window (c = 5).
pub fn integrated_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let c0: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for lag in 1..n / 2 {
        let c: f64 = (0..n - lag)
            .map(|i| (xs[i] - mean) * (xs[i + lag] - mean))
            .sum::<f64>()
            / n as f64;
        tau += 2.0 * c / c0;
        if lag as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

/// Standard error of the mean from `batches` non-overlapping batch means.
pub fn batch_means(xs: &[f64], batches: usize) -> Estimate {
    let ranges = block_ranges(xs.len(), batches);
    let means: Vec<f64> = ranges
        .iter()
        .map(|r| xs[r.clone()].iter().sum::<f64>() / r.len() as f64)
        .collect();
    let overall = xs.iter().sum::<f64>() / xs.len() as f64;
    let b = means.len() as f64;
    let var = means.iter().map(|m| (m - overall) * (m - overall)).sum::<f64>() / (b - 1.0);
    Estimate {
        value: overall,
        stderr: (var / b).sqrt(),
    }
}
