//! The modified Hankel transform `H_d f(rho) = int B_d(rho r) f(r) r^{d-1} dr`.
//!
//! Samples live on composite Gauss-Legendre grids and are interpolated by the
//! panel polynomial. For each target the integral is split at the panel edges
//! and at the phase points `k pi / rho`, with the 15-point rule on every piece.

use crate::error::{check_dimension, Error, Result};
use crate::grid::RadialGrid;
use crate::lorentz::{lorentz_norm_atoms, lp_norm_atoms, LorentzExponents, SampledFunction};
use crate::quadrature::{lagrange_basis, panel_edges, panel_rule, Breakpoint, Neumaier, Singularity};
use crate::special::KernelB;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// Plans whose row matrix has at most this many entries are cached.
pub const CACHE_LIMIT: usize = 100_000_000;

/// A factor multiplying the integrand (for instance a dilated multiplier).
pub trait RadialWeight: Send + Sync {
    fn value(&self, x: f64) -> f64;
    /// Closed interval outside which the weight vanishes.
    fn support(&self) -> (f64, f64);
    fn breakpoints(&self) -> Vec<Breakpoint>;
    /// Widest quadrature piece allowed inside the support.
    fn max_panel(&self) -> f64 {
        f64::INFINITY
    }
}

/// Samples of a radial function at the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    d: f64,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, d: f64) -> Result<Self> {
        check_dimension(d)?;
        if values.len() != grid.len() {
            return Err(Error::Domain(format!("profile has {} values for {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("profile samples must be finite".into()));
        }
        Ok(Self { grid, values, d })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, d: f64, f: F) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, d)
    }

    pub fn zeros(grid: Arc<RadialGrid>, d: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![0.0; n], d)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.grid.interpolate(&self.values, r)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.d)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect(), d: self.d }
    }

    /// `mu_d` masses at the nodes.
    pub fn masses(&self) -> Vec<f64> {
        self.grid.measure_weights(self.d)
    }

    pub fn to_sampled(&self) -> Result<SampledFunction> {
        SampledFunction::on_radial_grid(&self.grid, self.values.clone(), self.d)
    }

    /// `L^{p,q}(mu_d)` quasi-norm of the node values.
    pub fn lorentz_norm(&self, e: LorentzExponents) -> f64 {
        lorentz_norm_atoms(&self.values, &self.masses(), e)
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_atoms(&self.values, &self.masses(), p)
    }

    /// `int f g dmu_d` over the shared grid.
    pub fn inner(&self, other: &RadialProfile) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Domain("inner product needs a shared grid".into()));
        }
        let w = self.masses();
        let mut s = Neumaier::default();
        for ((a, b), m) in self.values.iter().zip(&other.values).zip(&w) {
            s.add(a * b * m);
        }
        Ok(s.value())
    }
}

enum Rows {
    Cached(Vec<f64>),
    Streamed,
}

/// Quadrature rows mapping node values on `source` to transform values at `targets`.
pub struct HankelPlan {
    d: f64,
    kernel: KernelB,
    source: Arc<RadialGrid>,
    targets: Vec<f64>,
    weight: Option<Arc<dyn RadialWeight>>,
    rows: Rows,
}

impl std::fmt::Debug for HankelPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HankelPlan")
            .field("d", &self.d)
            .field("source_points", &self.source.len())
            .field("targets", &self.targets.len())
            .field("cached", &matches!(self.rows, Rows::Cached(_)))
            .finish()
    }
}

impl HankelPlan {
    pub fn new(d: f64, source: Arc<RadialGrid>, targets: &[f64]) -> Result<Self> {
        Self::build(d, source, targets, None, CACHE_LIMIT)
    }

    /// Plan for `rho -> int B_d(rho r) w(r) f(r) r^{d-1} dr`.
    pub fn with_weight(d: f64, source: Arc<RadialGrid>, targets: &[f64], weight: Arc<dyn RadialWeight>) -> Result<Self> {
        Self::build(d, source, targets, Some(weight), CACHE_LIMIT)
    }

    /// Plan that never caches its rows.
    pub fn streamed(d: f64, source: Arc<RadialGrid>, targets: &[f64]) -> Result<Self> {
        Self::build(d, source, targets, None, 0)
    }

    fn build(d: f64, source: Arc<RadialGrid>, targets: &[f64], weight: Option<Arc<dyn RadialWeight>>, cache_limit: usize) -> Result<Self> {
        let kernel = KernelB::new(d)?;
        if let Some(bad) = targets.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::Domain(format!("targets must be finite and nonnegative, got {bad}")));
        }
        let max_target = targets.iter().fold(0.0f64, |m, &t| m.max(t));
        let admissible = source.max_resolved();
        if max_target > admissible {
            return Err(Error::Resolution { requested: max_target, max_admissible: admissible });
        }
        let mut plan = Self { d, kernel, source, targets: targets.to_vec(), weight, rows: Rows::Streamed };
        let n = plan.source.len();
        if plan.targets.len().saturating_mul(n) <= cache_limit {
            let mut rows = vec![0.0; plan.targets.len() * n];
            rows.par_chunks_mut(n.max(1)).zip(plan.targets.par_iter()).for_each(|(row, &t)| plan.fill_row(t, row));
            plan.rows = Rows::Cached(rows);
        }
        Ok(plan)
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn source(&self) -> &Arc<RadialGrid> {
        &self.source
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn is_cached(&self) -> bool {
        matches!(self.rows, Rows::Cached(_))
    }

    fn fill_row(&self, rho: f64, row: &mut [f64]) {
        row.iter_mut().for_each(|v| *v = 0.0);
        let grid = &*self.source;
        let (mut lo, mut hi) = (grid.lo(), grid.hi());
        let mut breaks = Vec::new();
        let mut max_panel = f64::INFINITY;
        if let Some(w) = &self.weight {
            max_panel = w.max_panel();
            let (a, b) = w.support();
            lo = lo.max(a);
            hi = hi.min(b);
            breaks = w.breakpoints();
        }
        if hi <= lo {
            return;
        }
        let order = grid.order();
        let nodes = &grid.rule().nodes;
        let bary = grid.bary();
        let rule = panel_rule();
        let phase = if rho > 0.0 { Some(PI / rho) } else { None };
        let power = self.d - 1.0;
        let mut basis = vec![0.0; order];
        let edges = grid.edges();
        let first = edges.partition_point(|&e| e <= lo).saturating_sub(1);
        for k in first..grid.panels() {
            let (a, b) = (edges[k], edges[k + 1]);
            if a >= hi {
                break;
            }
            let (pa, pb) = (a.max(lo), b.min(hi));
            if pb <= pa {
                continue;
            }
            let mut local: Vec<Breakpoint> = breaks.iter().copied().filter(|bp| bp.at > pa && bp.at < pb).collect();
            if pa == 0.0 && power.fract() != 0.0 {
                local.push(Breakpoint { at: 0.0, kind: Singularity::Power(power) });
            }
            let sub = panel_edges(pa, pb, phase, &local, max_panel);
            let slot = &mut row[k * order..(k + 1) * order];
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            for w in sub.windows(2) {
                for (y, wt) in rule.mapped(w[0], w[1]) {
                    let mut g = wt * self.kernel.eval(rho * y) * pow_int(y, power);
                    if let Some(wf) = &self.weight {
                        g *= wf.value(y);
                    }
                    if g == 0.0 {
                        continue;
                    }
                    lagrange_basis(nodes, bary, (y - c) / h, &mut basis);
                    for (s, l) in slot.iter_mut().zip(&basis) {
                        *s += g * l;
                    }
                }
            }
        }
    }

    /// Transform of node values on the source grid.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        let n = self.source.len();
        if values.len() != n {
            return Err(Error::Domain(format!("plan expects {n} values, got {}", values.len())));
        }
        Ok(match &self.rows {
            Rows::Cached(rows) => rows.par_chunks(n).map(|row| dot(row, values)).collect(),
            Rows::Streamed => self
                .targets
                .par_iter()
                .map_init(
                    || vec![0.0; n],
                    |row, &t| {
                        self.fill_row(t, row);
                        dot(row, values)
                    },
                )
                .collect(),
        })
    }

    /// Transforms of several value vectors sharing the source grid.
    pub fn apply_many(&self, inputs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let n = self.source.len();
        if inputs.iter().any(|v| v.len() != n) {
            return Err(Error::Domain(format!("plan expects {n} values per input")));
        }
        let per_target: Vec<Vec<f64>> = match &self.rows {
            Rows::Cached(rows) => rows.par_chunks(n).map(|row| inputs.iter().map(|v| dot(row, v)).collect()).collect(),
            Rows::Streamed => self
                .targets
                .par_iter()
                .map_init(
                    || vec![0.0; n],
                    |row, &t| {
                        self.fill_row(t, row);
                        inputs.iter().map(|v| dot(row, v)).collect()
                    },
                )
                .collect(),
        };
        Ok((0..inputs.len()).map(|i| per_target.iter().map(|r| r[i]).collect()).collect())
    }
}

#[inline]
fn pow_int(y: f64, power: f64) -> f64 {
    if power == 1.0 {
        y
    } else if power == 2.0 {
        y * y
    } else if power == 0.0 {
        1.0
    } else if power == 3.0 {
        y * y * y
    } else {
        y.powf(power)
    }
}

#[inline]
fn dot(row: &[f64], values: &[f64]) -> f64 {
    let mut s = Neumaier::default();
    for (a, b) in row.iter().zip(values) {
        s.add(a * b);
    }
    s.value()
}

/// `H_d f` at the given targets (values beyond the grid are treated as zero).
pub fn hankel_transform(f: &RadialProfile, targets: &[f64]) -> Result<Vec<f64>> {
    HankelPlan::new(f.d(), f.grid().clone(), targets)?.apply(f.values())
}

/// `H_d f` sampled on another grid.
pub fn hankel_transform_to(f: &RadialProfile, target_grid: Arc<RadialGrid>) -> Result<RadialProfile> {
    let values = hankel_transform(f, target_grid.nodes())?;
    RadialProfile::new(target_grid, values, f.d())
}

/// `||H_d H_d f - f||_inf / ||f||_inf` on the grid of `f`, transforming through the same grid.
pub fn hankel_roundtrip_error(f: &RadialProfile) -> Result<f64> {
    let plan = HankelPlan::new(f.d(), f.grid().clone(), f.grid().nodes())?;
    let spectrum = plan.apply(f.values())?;
    let back = plan.apply(&spectrum)?;
    Ok(relative_sup_error(&back, f.values()))
}

/// Roundtrip through a separate frequency grid.
pub fn hankel_roundtrip_error_via(f: &RadialProfile, frequency: Arc<RadialGrid>) -> Result<f64> {
    let forward = HankelPlan::new(f.d(), f.grid().clone(), frequency.nodes())?;
    let spectrum = forward.apply(f.values())?;
    let inverse = HankelPlan::new(f.d(), frequency, f.grid().nodes())?;
    let back = inverse.apply(&spectrum)?;
    Ok(relative_sup_error(&back, f.values()))
}

fn relative_sup_error(approx: &[f64], exact: &[f64]) -> f64 {
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = approx.iter().zip(exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}
