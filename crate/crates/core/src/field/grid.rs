use serde::Serialize;

use super::kernel::KernelFamily;
use crate::error::{Error, Result};
use crate::quadrature::{composite, Rule};

/// Quadrature grid for `∫ · μ(dx)`: strictly increasing nodes in `I` and
/// weights that already include the density `g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::Domain(format!(
                "grid needs matching non-empty nodes and weights ({} vs {})",
                nodes.len(),
                weights.len()
            )));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Domain("grid nodes must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("grid weights must be finite and nonnegative".into()));
        }
        Ok(Grid { nodes, weights })
    }

    /// Composite midpoint rule with `points` equal cells.
    pub fn midpoint(family: &KernelFamily, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::Domain("grid needs at least one point".into()));
        }
        let iv = family.interval();
        let h = iv.length() / points as f64;
        let nodes: Vec<f64> = (0..points).map(|i| iv.lo + (i as f64 + 0.5) * h).collect();
        let weights = nodes.iter().map(|&x| h * family.density_at(x)).collect();
        Grid::from_parts(nodes, weights)
    }

    /// Composite Gauss-Legendre with `panels` equal panels of `order` nodes.
    pub fn gauss_legendre(family: &KernelFamily, panels: usize, order: usize) -> Result<Self> {
        if panels == 0 || order == 0 {
            return Err(Error::Domain("grid needs at least one panel and one node".into()));
        }
        let iv = family.interval();
        let Rule { nodes, weights } = composite(iv.lo, iv.hi, panels, order);
        let weights = nodes
            .iter()
            .zip(weights)
            .map(|(&x, w)| w * family.density_at(x))
            .collect();
        Grid::from_parts(nodes, weights)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i`, the grid value of `μ(I)`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest gap between neighbouring nodes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Whether the grid resolves the finest layer of `X_t`
    /// (spacing at most `e^{-t}/2`). Logs a warning when it does not.
    pub fn check_resolution(&self, t_max: f64) -> bool {
        let limit = 0.5 * (-t_max).exp();
        let spacing = self.max_spacing();
        let ok = spacing <= limit;
        if !ok {
            log::warn!(
                "grid spacing {spacing:.3e} exceeds e^-t/2 = {limit:.3e} at t = {t_max}; \
                 the finest field layer is under-resolved"
            );
        }
        ok
    }
}
