//! One-dimensional quadrature rules: Gauss-Legendre nodes, composite rules
//! on uniform panels, and geometrically graded rules that resolve the
//! ultraviolet scale `e^{-t}` near the origin.

use std::f64::consts::PI;

/// Nodes and weights of a 1D rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    fn extend_mapped(&mut self, reference: &Rule, a: f64, b: f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&x, &w) in reference.nodes.iter().zip(&reference.weights) {
            self.nodes.push(mid + half * x);
            self.weights.push(half * w);
        }
    }
}

/// Gauss-Legendre rule of the given order on `[-1, 1]`.
///
/// Nodes come from Newton iteration on the three-term Legendre recurrence,
/// started from the Tricomi asymptotic guess.
pub fn gauss_legendre(order: usize) -> Rule {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(order: usize, a: f64, b: f64) -> Rule {
    let reference = gauss_legendre(order);
    let mut rule = Rule {
        nodes: Vec::with_capacity(order),
        weights: Vec::with_capacity(order),
    };
    rule.extend_mapped(&reference, a, b);
    rule
}

/// Composite Gauss-Legendre on `panels` equal panels of `[a, b]`.
pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Rule {
    let reference = gauss_legendre(order);
    let mut rule = Rule {
        nodes: Vec::with_capacity(panels * order),
        weights: Vec::with_capacity(panels * order),
    };
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == panels { b } else { lo + h };
        rule.extend_mapped(&reference, lo, hi);
    }
    rule
}

/// Panel edges for a rule on `[0, r_max]` graded geometrically towards 0.
///
/// The first panel is `[0, floor]`; subsequent edges grow by the factor
/// `e^{1/panels_per_efold}` until `r_max` is reached.
pub fn graded_edges(r_max: f64, floor: f64, panels_per_efold: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    if r_max <= floor {
        edges.push(r_max);
        return edges;
    }
    let ratio = (1.0 / panels_per_efold).exp();
    let mut e = floor;
    while e < r_max / ratio.sqrt() {
        edges.push(e);
        e *= ratio;
    }
    edges.push(r_max);
    edges
}

/// Gauss-Legendre on the panels returned by [`graded_edges`].
pub fn graded(r_max: f64, floor: f64, panels_per_efold: f64, order: usize) -> Rule {
    let reference = gauss_legendre(order);
    graded_with(&reference, r_max, floor, panels_per_efold)
}

pub(crate) fn graded_with(reference: &Rule, r_max: f64, floor: f64, panels_per_efold: f64) -> Rule {
    let edges = graded_edges(r_max, floor, panels_per_efold);
    let mut rule = Rule {
        nodes: Vec::with_capacity(edges.len() * reference.len()),
        weights: Vec::with_capacity(edges.len() * reference.len()),
    };
    for pair in edges.windows(2) {
        rule.extend_mapped(reference, pair[0], pair[1]);
    }
    rule
}

/// Pairwise summation; the result depends only on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
