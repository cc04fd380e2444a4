//! Quadrature over `I^n` of integrands that depend only on pair distances.
//!
//! Two routes:
//! * `Tensor`: a product grid, summed over multisets `i_1 ≤ … ≤ i_n`
//!   with multinomial weights (diagonal nodes included).
//! * `Graded`: ordered points `x_1 < … < x_n` parametrized by their gaps,
//!   each gap integrated with Gauss-Legendre panels graded geometrically
//!   down to `e^{-t-depth}`, so the scale `e^{-t}` is resolved at any `t`.
//!   For a uniform density the base point is integrated exactly; otherwise
//!   it gets its own composite rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Density, Grid, KernelFamily};
use crate::quadrature::{composite, gauss_legendre, graded_edges, graded_with, pairwise_sum, Rule};

/// Cap on node tuples per integral.
pub const EVALUATION_BUDGET: f64 = 2e8;
pub const MAX_POINTS: usize = 8;
const MAX_PAIRS: usize = MAX_POINTS * (MAX_POINTS - 1) / 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradedRule {
    /// Gauss-Legendre nodes per panel.
    pub order: usize,
    pub panels_per_efold: f64,
    /// E-folds resolved below the cutoff scale `e^{-t}`.
    pub depth: f64,
}

impl Default for GradedRule {
    fn default() -> Self {
        GradedRule {
            order: 8,
            panels_per_efold: 1.0,
            depth: 4.0,
        }
    }
}

impl GradedRule {
    pub fn floor(&self, t: f64) -> f64 {
        (-t - self.depth).exp()
    }

    /// Same panels, two fewer nodes each; used for error estimates.
    pub fn coarser(&self) -> Self {
        GradedRule {
            order: self.order.saturating_sub(2).max(2),
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        if self.order == 0 || !(self.panels_per_efold > 0.0) || !(self.depth >= 0.0) {
            return Err(Error::Domain(format!("invalid graded rule {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Quadrature {
    Tensor(Grid),
    Graded(GradedRule),
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Graded(GradedRule::default())
    }
}

impl Quadrature {
    pub fn label(&self) -> String {
        match self {
            Quadrature::Tensor(g) => format!("tensor({})", g.len()),
            Quadrature::Graded(r) => format!(
                "graded(order={},ppe={},depth={})",
                r.order, r.panels_per_efold, r.depth
            ),
        }
    }

    /// Node tuples an `n`-point integral at cutoff `t` would visit.
    pub fn evaluations(&self, family: &KernelFamily, t: f64, n: usize) -> f64 {
        match self {
            Quadrature::Tensor(g) => (g.len() as f64).powi(n as i32),
            Quadrature::Graded(rule) => {
                if n == 0 {
                    return 1.0;
                }
                let length = family.interval().length();
                let per_gap = ((graded_edges(length, rule.floor(t), rule.panels_per_efold).len() - 1)
                    * rule.order) as f64;
                let base = match family.density() {
                    Density::Uniform => 1.0,
                    Density::Table(v) => ((v.len() - 1) * rule.order) as f64,
                };
                base * per_gap.powi(n as i32 - 1)
            }
        }
    }

    pub fn check_budget(&self, family: &KernelFamily, t: f64, n: usize) -> Result<()> {
        if n > MAX_POINTS {
            return Err(Error::Resource(format!(
                "{n}-point quadrature exceeds the supported maximum of {MAX_POINTS} points"
            )));
        }
        let cost = self.evaluations(family, t, n);
        if cost > EVALUATION_BUDGET {
            return Err(Error::Resource(format!(
                "{n}-point quadrature with {} at t={t} needs {cost:.3e} evaluations \
                 (budget {EVALUATION_BUDGET:.0e})",
                self.label()
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// `∫_{I^n} f(p) μ^{⊗n}(dx)` where `p[pair_index(i, j)] = pair(|x_i - x_j|)`.
pub(crate) fn integrate_pairwise<P, F>(
    family: &KernelFamily,
    quadrature: &Quadrature,
    t: f64,
    n: usize,
    pair: P,
    f: F,
) -> Result<f64>
where
    P: Fn(f64) -> f64 + Sync,
    F: Fn(&[f64]) -> f64 + Sync,
{
    quadrature.check_budget(family, t, n)?;
    if n == 0 {
        return Ok(f(&[]));
    }
    let value = match quadrature {
        Quadrature::Tensor(grid) => tensor(grid, n, &pair, &f),
        Quadrature::Graded(rule) => {
            rule.validate()?;
            graded(family, rule, t, n, &pair, &f)
        }
    };
    crate::error::ensure_finite(value, "quadrature result")
}

fn tensor<P, F>(grid: &Grid, n: usize, pair: &P, f: &F) -> f64
where
    P: Fn(f64) -> f64 + Sync,
    F: Fn(&[f64]) -> f64 + Sync,
{
    let g = grid.len();
    let x = grid.nodes();
    let w = grid.weights();
    let table: Vec<f64> = (0..g * g)
        .into_par_iter()
        .map(|k| pair((x[k / g] - x[k % g]).abs()))
        .collect();
    let nfact = factorial(n);
    let partials: Vec<f64> = (0..g)
        .into_par_iter()
        .map(|i0| {
            let mut idx = [0usize; MAX_POINTS];
            let mut pairs = [0.0; MAX_PAIRS];
            idx[0] = i0;
            tensor_descend(1, n, g, &table, w, &mut idx, &mut pairs, w[i0], nfact, f)
        })
        .collect();
    pairwise_sum(&partials)
}

#[allow(clippy::too_many_arguments)]
fn tensor_descend<F: Fn(&[f64]) -> f64>(
    level: usize,
    n: usize,
    g: usize,
    table: &[f64],
    w: &[f64],
    idx: &mut [usize; MAX_POINTS],
    pairs: &mut [f64; MAX_PAIRS],
    weight: f64,
    nfact: f64,
    f: &F,
) -> f64 {
    if level == n {
        let mut mult = 1.0;
        let mut run = 1usize;
        for k in 1..n {
            if idx[k] == idx[k - 1] {
                run += 1;
                mult *= run as f64;
            } else {
                run = 1;
            }
        }
        return weight * (nfact / mult) * f(&pairs[..n * (n - 1) / 2]);
    }
    let mut acc = 0.0;
    for i in idx[level - 1]..g {
        idx[level] = i;
        for j in 0..level {
            pairs[pair_index(j, level)] = table[idx[j] * g + i];
        }
        acc += tensor_descend(level + 1, n, g, table, w, idx, pairs, weight * w[i], nfact, f);
    }
    acc
}

struct GradedCtx<'a, P, F> {
    n: usize,
    reference: Rule,
    floor: f64,
    ppe: f64,
    hi: f64,
    uniform: bool,
    family: &'a KernelFamily,
    pair: &'a P,
    f: &'a F,
}

impl<P, F> GradedCtx<'_, P, F>
where
    P: Fn(f64) -> f64 + Sync,
    F: Fn(&[f64]) -> f64 + Sync,
{
    /// Places point `level` after point `level - 1`; `dist` holds exact
    /// gap sums so small separations keep full relative precision.
    fn descend(
        &self,
        level: usize,
        pos: &mut [f64; MAX_POINTS],
        dist: &mut [f64; MAX_PAIRS],
        pairs: &mut [f64; MAX_PAIRS],
        weight: f64,
    ) -> f64 {
        let n = self.n;
        if level == n {
            let translate = if self.uniform {
                self.family.interval().length() - dist_span(dist, n)
            } else {
                1.0
            };
            return weight * translate * (self.f)(&pairs[..n * (n - 1) / 2]);
        }
        let limit = self.hi - pos[level - 1];
        if limit <= 0.0 {
            return 0.0;
        }
        let rule = graded_with(&self.reference, limit, self.floor, self.ppe);
        let mut acc = 0.0;
        for (&d, &w) in rule.nodes.iter().zip(&rule.weights) {
            self.place(level, d, pos, dist, pairs);
            let g = if self.uniform { 1.0 } else { self.family.density_at(pos[level]) };
            if g == 0.0 {
                continue;
            }
            acc += self.descend(level + 1, pos, dist, pairs, weight * w * g);
        }
        acc
    }

    fn place(
        &self,
        level: usize,
        d: f64,
        pos: &mut [f64; MAX_POINTS],
        dist: &mut [f64; MAX_PAIRS],
        pairs: &mut [f64; MAX_PAIRS],
    ) {
        pos[level] = pos[level - 1] + d;
        for i in 0..level {
            let r = if i + 1 == level {
                d
            } else {
                dist[pair_index(i, level - 1)] + d
            };
            let k = pair_index(i, level);
            dist[k] = r;
            pairs[k] = (self.pair)(r);
        }
    }
}

fn dist_span(dist: &[f64; MAX_PAIRS], n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        dist[pair_index(0, n - 1)]
    }
}

fn graded<P, F>(family: &KernelFamily, rule: &GradedRule, t: f64, n: usize, pair: &P, f: &F) -> f64
where
    P: Fn(f64) -> f64 + Sync,
    F: Fn(&[f64]) -> f64 + Sync,
{
    let iv = family.interval();
    let ctx = GradedCtx {
        n,
        reference: gauss_legendre(rule.order),
        floor: rule.floor(t),
        ppe: rule.panels_per_efold,
        hi: iv.hi,
        uniform: family.is_uniform(),
        family,
        pair,
        f,
    };
    let nfact = factorial(n);
    let fresh = || ([0.0; MAX_POINTS], [0.0; MAX_PAIRS], [0.0; MAX_PAIRS]);
    if ctx.uniform {
        if n == 1 {
            let (mut pos, mut dist, mut pairs) = fresh();
            pos[0] = iv.lo;
            return ctx.descend(1, &mut pos, &mut dist, &mut pairs, 1.0);
        }
        let first = graded_with(&ctx.reference, iv.length(), ctx.floor, ctx.ppe);
        let partials: Vec<f64> = (0..first.len())
            .into_par_iter()
            .map(|k| {
                let (mut pos, mut dist, mut pairs) = fresh();
                pos[0] = iv.lo;
                ctx.place(1, first.nodes[k], &mut pos, &mut dist, &mut pairs);
                ctx.descend(2, &mut pos, &mut dist, &mut pairs, first.weights[k])
            })
            .collect();
        nfact * pairwise_sum(&partials)
    } else {
        let cells = match family.density() {
            Density::Table(v) => v.len() - 1,
            Density::Uniform => unreachable!("uniform handled above"),
        };
        let base = composite(iv.lo, iv.hi, cells, rule.order);
        let partials: Vec<f64> = (0..base.len())
            .into_par_iter()
            .map(|k| {
                let x = base.nodes[k];
                let g = family.density_at(x);
                if g == 0.0 {
                    return 0.0;
                }
                let (mut pos, mut dist, mut pairs) = fresh();
                pos[0] = x;
                ctx.descend(1, &mut pos, &mut dist, &mut pairs, base.weights[k] * g)
            })
            .collect();
        nfact * pairwise_sum(&partials)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Interval, SeedProfile};

    fn family() -> KernelFamily {
        KernelFamily::default()
    }

    #[test]
    fn volume_of_cube() {
        let f = family();
        for n in 0..=4 {
            let v = integrate_pairwise(&f, &Quadrature::default(), 3.0, n, |_| 0.0, |_| 1.0).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "n={n}: {v}");
            let grid = Grid::midpoint(&f, 9).unwrap();
            let v = integrate_pairwise(&f, &Quadrature::Tensor(grid), 3.0, n, |_| 0.0, |_| 1.0).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "n={n}: {v}");
        }
    }

    #[test]
    fn mean_pair_distance() {
        // E|x - y| = 1/3 on the unit square; E of the sum of the three distances of 3 points = 1
        let f = family();
        let q = Quadrature::default();
        let v = integrate_pairwise(&f, &q, 2.0, 2, |r| r, |p| p[0]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-13);
        let v = integrate_pairwise(&f, &q, 2.0, 3, |r| r, |p| p.iter().sum()).unwrap();
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn tensor_multiset_weights_match_full_product() {
        let f = family();
        let grid = Grid::gauss_legendre(&f, 2, 3).unwrap();
        let pair = |r: f64| (-3.0 * r).exp();
        let integrand = |p: &[f64]| p[0] * p[1] * p[2] + p.iter().map(|v| v * v + 0.3 * v).sum::<f64>();
        let got = integrate_pairwise(&f, &Quadrature::Tensor(grid.clone()), 0.0, 3, pair, integrand).unwrap();
        let (x, w) = (grid.nodes(), grid.weights());
        let mut full = 0.0;
        for a in 0..x.len() {
            for b in 0..x.len() {
                for c in 0..x.len() {
                    let p = [
                        pair((x[a] - x[b]).abs()),
                        pair((x[a] - x[c]).abs()),
                        pair((x[b] - x[c]).abs()),
                    ];
                    full += w[a] * w[b] * w[c] * integrand(&p);
                }
            }
        }
        assert!((got - full).abs() < 1e-13 * full.abs(), "{got} vs {full}");
    }

    #[test]
    fn density_table_route() {
        let f = KernelFamily::new(
            SeedProfile::default(),
            Interval::new(0.0, 2.0).unwrap(),
            Density::Table(vec![1.0, 0.0, 2.0, 1.0]),
            20,
        )
        .unwrap();
        let q = Quadrature::default();
        let mass = f.total_mass();
        let v = integrate_pairwise(&f, &q, 1.0, 2, |_| 0.0, |_| 1.0).unwrap();
        assert!((v - mass * mass).abs() < 1e-3 * mass * mass, "{v} vs {}", mass * mass);
        let v = integrate_pairwise(&f, &q, 1.0, 1, |_| 0.0, |_| 1.0).unwrap();
        assert!((v - mass).abs() < 1e-12);
    }

    #[test]
    fn budget_refusal() {
        let f = family();
        let grid = Grid::midpoint(&f, 100).unwrap();
        let err = integrate_pairwise(&f, &Quadrature::Tensor(grid), 1.0, 5, |_| 0.0, |_| 1.0).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
        let err = integrate_pairwise(&f, &Quadrature::default(), 8.0, 6, |_| 0.0, |_| 1.0).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }
}
