//! Gauss–Hermite expectations under Gaussian densities, and composite
//! Gauss–Legendre integration on finite intervals.

use crate::error::{Error, Result};
use gauss_quad::{GaussHermite, GaussLegendre};
use std::f64::consts::{PI, SQRT_2};
use std::num::NonZeroUsize;

/// Default number of nodes.
pub const DEFAULT_ORDER: usize = 64;

/// Probabilists' form of a Gauss–Hermite rule: `E[f(X)]` for `X ~ N(m, v)`
/// is `Σ w_i f(m + sqrt(v) x_i)`.
#[derive(Debug, Clone)]
pub struct GaussianRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussianRule {
    pub fn new(order: usize) -> Result<Self> {
        let deg = NonZeroUsize::new(order)
            .ok_or_else(|| Error::InvalidArgument("quadrature order must be positive".into()))?;
        let rule = GaussHermite::new(deg);
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (SQRT_2 * x, w / PI.sqrt()))
            .unzip();
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `E[f(X)]` for `X ~ N(mean, var)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mean: f64, var: f64, mut f: F) -> f64 {
        let sd = var.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mean + sd * x))
            .sum()
    }
}

/// Composite Gauss–Legendre rule: `[a, b]` is cut into equal panels, each
/// integrated with the same fixed-order rule.
#[derive(Debug, Clone)]
pub struct PanelRule {
    rule: GaussLegendre,
}

impl PanelRule {
    pub fn new(order: usize) -> Result<Self> {
        let deg = NonZeroUsize::new(order)
            .ok_or_else(|| Error::InvalidArgument("quadrature order must be positive".into()))?;
        Ok(Self {
            rule: GaussLegendre::new(deg),
        })
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * width;
                let hi = if k + 1 == panels { b } else { lo + width };
                self.rule.integrate(lo, hi, &mut f)
            })
            .sum()
    }
}
