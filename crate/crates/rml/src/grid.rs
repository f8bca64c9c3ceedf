//! Composite Gauss-Legendre grids on `[0, R]`.

use crate::error::{Error, Result};
use crate::quadrature::{barycentric_eval, barycentric_weights, GaussRule};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Nodes per panel on the default grids.
pub const DEFAULT_ORDER: usize = 16;

/// Description of a grid, kept in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridConfig {
    Uniform { lo: f64, hi: f64, panels: usize, order: usize },
    Hybrid { radius: f64, points: usize, order: usize },
}

impl GridConfig {
    pub fn build(&self) -> Result<RadialGrid> {
        match *self {
            GridConfig::Uniform { lo, hi, panels, order } => RadialGrid::uniform(lo, hi, panels, order),
            GridConfig::Hybrid { radius, points, order } => RadialGrid::hybrid(radius, points, order),
        }
    }
}

/// Panels `[e_k, e_{k+1}]` each carrying the same Gauss-Legendre node set.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    edges: Vec<f64>,
    order: usize,
    rule: GaussRule,
    bary: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub fn from_edges(edges: Vec<f64>, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::Domain("grid order must be at least 2".into()));
        }
        if edges.len() < 2 || edges[0] < 0.0 || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Domain("grid edges must be finite, nonnegative and at least two".into()));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("grid edges must be strictly increasing".into()));
        }
        let rule = GaussRule::legendre(order);
        let bary = barycentric_weights(&rule.nodes);
        let mut nodes = Vec::with_capacity(order * (edges.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in edges.windows(2) {
            for (x, wt) in rule.mapped(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt);
            }
        }
        Ok(Self { edges, order, rule, bary, nodes, weights })
    }

    pub fn uniform(lo: f64, hi: f64, panels: usize, order: usize) -> Result<Self> {
        if panels == 0 || !(hi > lo) {
            return Err(Error::Domain("uniform grid needs hi > lo and at least one panel".into()));
        }
        let edges = (0..=panels).map(|k| lo + (hi - lo) * k as f64 / panels as f64).collect();
        Self::from_edges(edges, order)
    }

    /// Linear panels on `[0, 4]` followed by geometric panels on `(4, R]`.
    pub fn hybrid(radius: f64, points: usize, order: usize) -> Result<Self> {
        if !(radius > 4.0) {
            return Err(Error::Domain(format!("hybrid grid needs R > 4, got {radius}")));
        }
        let panels = points / order;
        if panels < 4 || panels * order != points {
            return Err(Error::Domain(format!("hybrid grid needs a multiple of {order} points, at least {}", 4 * order)));
        }
        let linear = (panels / 32).max(1);
        let geometric = panels - linear;
        let mut edges: Vec<f64> = (0..=linear).map(|k| 4.0 * k as f64 / linear as f64).collect();
        let ratio = (radius / 4.0).powf(1.0 / geometric as f64);
        for k in 1..=geometric {
            edges.push(if k == geometric { radius } else { 4.0 * ratio.powi(k as i32) });
        }
        Self::from_edges(edges, order)
    }

    /// Default kernel grid: 4096 hybrid points on `(0, 200]`.
    pub fn default_kernel() -> Self {
        Self::hybrid(200.0, 4096, DEFAULT_ORDER).expect("default grid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Lebesgue quadrature weights `dx`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quadrature weights for `mu_d`: `w_i r_i^{d-1}`.
    pub fn measure_weights(&self, d: f64) -> Vec<f64> {
        self.nodes.iter().zip(&self.weights).map(|(r, w)| w * r.powf(d - 1.0)).collect()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panels(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    pub(crate) fn bary(&self) -> &[f64] {
        &self.bary
    }

    /// Largest panel width divided by the panel order.
    pub fn effective_step(&self) -> f64 {
        let w = self.edges.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        w / self.order as f64
    }

    /// Largest frequency resolved under `step <= pi / (4 rho)`.
    pub fn max_resolved(&self) -> f64 {
        PI / (4.0 * self.effective_step())
    }

    /// Panel containing `x` (the last panel owns the right end).
    pub fn panel_of(&self, x: f64) -> Option<usize> {
        if x < self.lo() || x > self.hi() {
            return None;
        }
        let k = self.edges.partition_point(|&e| e <= x);
        Some(k.saturating_sub(1).min(self.panels() - 1))
    }

    /// Unit-interval nodes of panel `k` mapped to its extent.
    pub fn panel_nodes(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.order..(k + 1) * self.order]
    }

    /// Polynomial interpolation of node `values` at `x`; zero outside the grid range.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        match self.panel_of(x) {
            None => 0.0,
            Some(k) => {
                let (a, b) = (self.edges[k], self.edges[k + 1]);
                let u = (2.0 * x - a - b) / (b - a);
                let v = &values[k * self.order..(k + 1) * self.order];
                barycentric_eval(&self.rule.nodes, &self.bary, v, u)
            }
        }
    }

    /// Integral of node `values` against `dx`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        crate::quadrature::compensated_sum(values.iter().zip(&self.weights).map(|(v, w)| v * w))
    }
}
