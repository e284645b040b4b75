//! Logarithmic radial grids.
//!
//! Nodes are uniform in s = ln r. Integrals ∫ f(r) r dr = ∫ f r² ds use the
//! trapezoid rule in s, which converges exponentially fast for integrands
//! that are smooth in s and decay at both ends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
}

/// JSON descriptor `{r_min, r_max, n_nodes, spacing: "log"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n_nodes: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    spec: GridSpec,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    step: f64,
}

impl RadialGrid {
    pub fn log(r_min: f64, r_max: f64, n_nodes: usize) -> Result<Self> {
        Self::from_spec(GridSpec { r_min, r_max, n_nodes, spacing: Spacing::Log })
    }

    pub fn from_spec(spec: GridSpec) -> Result<Self> {
        let GridSpec { r_min, r_max, n_nodes, .. } = spec;
        if !(r_min > 0.0) || !(r_max > r_min) || !r_max.is_finite() {
            return Err(Error::Input(format!("grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if n_nodes < 2 {
            return Err(Error::Input("grid needs at least 2 nodes".into()));
        }
        let (s0, s1) = (r_min.ln(), r_max.ln());
        let step = (s1 - s0) / (n_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_nodes).map(|k| (s0 + step * k as f64).exp()).collect();
        nodes[0] = r_min;
        nodes[n_nodes - 1] = r_max;
        let mut weights: Vec<f64> = nodes.iter().map(|r| step * r * r).collect();
        weights[0] *= 0.5;
        weights[n_nodes - 1] *= 0.5;
        Ok(Self { spec, nodes, weights, step })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for ∫ f(r) r dr.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights for ∫ f(r) dr.
    pub fn line_weights(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.nodes).map(|(w, r)| w / r).collect()
    }

    /// Spacing in s = ln r.
    pub fn log_step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.spec.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.spec.r_max
    }

    /// |∫ r e^{−r²} dr − ½(1 − e^{−r_max²})|, ignoring the (negligible) piece
    /// below r_min.
    pub fn calibration_residual(&self) -> f64 {
        let q: f64 = self.nodes.iter().zip(&self.weights).map(|(r, w)| w * (-r * r).exp()).sum();
        let exact = 0.5 * ((-self.r_min().powi(2)).exp() - (-self.r_max().powi(2)).exp());
        (q - exact).abs()
    }

    pub(crate) fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other) || self.spec == other.spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_identity() {
        let g = RadialGrid::log(1e-6, 8.0, 2000).unwrap();
        assert!(g.calibration_residual() < 1e-10);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(RadialGrid::log(0.0, 1.0, 10).is_err());
        assert!(RadialGrid::log(1.0, 0.5, 10).is_err());
        assert!(RadialGrid::log(0.1, 1.0, 1).is_err());
        let json = r#"{"r_min": 1e-6, "r_max": 10, "n_nodes": 100, "spacing": "linear"}"#;
        assert!(serde_json::from_str::<GridSpec>(json).is_err());
    }
}
