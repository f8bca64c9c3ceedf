//! Multiplier operators `T_m f = H_d[m H_d f]`, the maximal operator over
//! `t in [1, 2]`, the averaged dual operator on time families, and the
//! random test families used by the probes.
//!
//! Every scale shares one frequency-side rule: with `rho = t sigma`,
//! `T_{m(./t)} f(r) = t^d int m(sigma) F(t sigma) B_d(r t sigma) sigma^{d-1} dsigma`,
//! so the nodes in `sigma` (graded toward the singular points of `m`) are
//! fixed and only `F = H_d f` is resampled per scale.

use crate::error::{check_dimension, Error, Result};
use crate::grid::{RadialGrid, DEFAULT_ORDER};
use crate::hankel::{HankelPlan, RadialProfile, RadialWeight};
use crate::multipliers::{smooth_step, transform_weight, Multiplier};
use crate::quadrature::{panel_rule, Breakpoint, Neumaier};
use crate::special::KernelB;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub const DEFAULT_T_POINTS: usize = 64;

/// Default radial grid of the operator probes: unit panels on `[0, 64]`.
pub fn default_operator_grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::uniform(0.0, 64.0, 64, DEFAULT_ORDER).expect("operator grid"))
}

/// `n` points `2^{k/(n-1)}`, with exact endpoints.
pub fn geometric_t_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![1.0],
        _ => (0..n)
            .map(|k| match k {
                0 => 1.0,
                k if k == n - 1 => 2.0,
                k => 2f64.powf(k as f64 / (n - 1) as f64),
            })
            .collect(),
    }
}

pub fn uniform_t_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![1.0],
        _ => (0..n).map(|k| 1.0 + k as f64 / (n - 1) as f64).collect(),
    }
}

/// Trapezoid weights on an increasing grid.
pub fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let h = 0.5 * (t[k] - t[k - 1]);
        w[k - 1] += h;
        w[k] += h;
    }
    w
}

pub(crate) fn check_t_grid(t: &[f64]) -> Result<()> {
    if t.is_empty() {
        return Err(Error::Domain("t grid is empty".into()));
    }
    if t.iter().any(|x| !(1.0..=2.0).contains(x)) {
        return Err(Error::Domain("t grid must lie in [1, 2]".into()));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("t grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Profiles `f_t` on a shared radial grid, indexed by an increasing `t` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeFamily {
    t_grid: Vec<f64>,
    profiles: Vec<RadialProfile>,
}

impl TimeFamily {
    pub fn new(t_grid: Vec<f64>, profiles: Vec<RadialProfile>) -> Result<Self> {
        check_t_grid(&t_grid)?;
        if t_grid.len() != profiles.len() {
            return Err(Error::Domain("one profile per t node is required".into()));
        }
        let first = &profiles[0];
        if profiles.iter().any(|p| p.grid() != first.grid() || p.d() != first.d()) {
            return Err(Error::Domain("family profiles must share grid and dimension".into()));
        }
        Ok(Self { t_grid, profiles })
    }

    pub fn constant(t_grid: Vec<f64>, g: &RadialProfile) -> Result<Self> {
        let profiles = vec![g.clone(); t_grid.len()];
        Self::new(t_grid, profiles)
    }

    pub fn zero(t_grid: Vec<f64>, grid: Arc<RadialGrid>, d: f64) -> Result<Self> {
        let z = RadialProfile::zeros(grid, d)?;
        Self::constant(t_grid, &z)
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn profiles(&self) -> &[RadialProfile] {
        &self.profiles
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.profiles[0].grid()
    }

    pub fn d(&self) -> f64 {
        self.profiles[0].d()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { t_grid: self.t_grid.clone(), profiles: self.profiles.iter().map(|p| p.map(|v| c * v)).collect() }
    }

    /// `f_t(r_i)` for every `t`, at node `i`.
    pub fn at_node(&self, i: usize) -> Vec<f64> {
        self.profiles.iter().map(|p| p.values()[i]).collect()
    }

    /// `|f(r)|_B = int_I |f_t(r)| dt` by the trapezoid rule.
    pub fn b_norm(&self) -> RadialProfile {
        let w = trapezoid_weights(&self.t_grid);
        let n = self.grid().len();
        let values = (0..n)
            .map(|i| {
                let mut s = Neumaier::default();
                for (p, wk) in self.profiles.iter().zip(&w) {
                    s.add(wk * p.values()[i].abs());
                }
                s.value()
            })
            .collect();
        self.profiles[0].with_values(values).expect("same grid")
    }
}

/// Fixed quadrature in `sigma = rho / t` over the support of `m`: nodes and
/// weights `w m(sigma) sigma^{d-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleRule {
    pub sigma: Vec<f64>,
    pub coef: Vec<f64>,
}

impl ScaleRule {
    /// Rule for integrands oscillating in `sigma` with angular frequency at most `omega`.
    pub fn new(m: &Multiplier, d: f64, omega: f64) -> Self {
        if m.is_zero() {
            return Self { sigma: vec![], coef: vec![] };
        }
        let edges = m.panels(omega);
        let rule = panel_rule();
        let mut sigma = Vec::with_capacity(edges.len() * rule.len());
        let mut coef = Vec::with_capacity(sigma.capacity());
        for w in edges.windows(2) {
            for (x, wt) in rule.mapped(w[0], w[1]) {
                let v = m.eval(x);
                if v != 0.0 {
                    sigma.push(x);
                    coef.push(wt * v * x.powf(d - 1.0));
                }
            }
        }
        Self { sigma, coef }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// Shared machinery for applying `m(./t)` to profiles on one radial grid.
pub struct ScaleEngine {
    d: f64,
    kernel: KernelB,
    radial: Arc<RadialGrid>,
    frequency: Option<Arc<RadialGrid>>,
    forward: Option<HankelPlan>,
    sigma: Vec<f64>,
    coef: Vec<f64>,
}

impl std::fmt::Debug for ScaleEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScaleEngine").field("d", &self.d).field("radial", &self.radial.len()).field("sigma", &self.sigma.len()).finish()
    }
}

impl ScaleEngine {
    /// Engine for `t in [1, 2]`; `refine` halves every quadrature width.
    pub fn new(m: &Multiplier, d: f64, radial: Arc<RadialGrid>, refine: u32) -> Result<Self> {
        check_dimension(d)?;
        let kernel = KernelB::new(d)?;
        if m.is_zero() {
            return Ok(Self { d, kernel, radial, frequency: None, forward: None, sigma: vec![], coef: vec![] });
        }
        let (a, b) = m.support();
        let radius = radial.hi();
        let split = 2f64.powi(refine as i32);
        let width = (0.1f64).min(DEFAULT_ORDER as f64 * std::f64::consts::PI / (4.0 * radius)) / split;
        let (lo, hi) = (a, 2.0 * b);
        let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
        let frequency = Arc::new(RadialGrid::uniform(lo, hi, panels, DEFAULT_ORDER)?);
        let forward = HankelPlan::new(d, radial.clone(), frequency.nodes())?;
        let omega = 2.0 * radius * split;
        let ScaleRule { sigma, coef } = ScaleRule::new(m, d, omega);
        Ok(Self { d, kernel, radial, frequency: Some(frequency), forward: Some(forward), sigma, coef })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn radial(&self) -> &Arc<RadialGrid> {
        &self.radial
    }

    /// Number of frequency-side quadrature nodes.
    pub fn rule_size(&self) -> usize {
        self.sigma.len()
    }

    fn check(&self, f: &RadialProfile) -> Result<()> {
        if f.grid() != &self.radial || f.d() != self.d {
            return Err(Error::Domain("profile grid or dimension does not match the operator".into()));
        }
        Ok(())
    }

    /// `H_d f` on the internal frequency grid.
    pub fn spectra(&self, inputs: &[&RadialProfile]) -> Result<Vec<Vec<f64>>> {
        for f in inputs {
            self.check(f)?;
        }
        match &self.forward {
            None => Ok(vec![vec![]; inputs.len()]),
            Some(plan) => {
                let vals: Vec<&[f64]> = inputs.iter().map(|f| f.values()).collect();
                plan.apply_many(&vals)
            }
        }
    }

    /// `T_{m(./t)}` applied to inputs given by their spectra.
    pub fn apply_spectra(&self, t: f64, spectra: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.radial.len();
        let Some(freq) = &self.frequency else {
            return vec![vec![0.0; n]; spectra.len()];
        };
        let td = t.powf(self.d);
        let k = self.sigma.len();
        let rho: Vec<f64> = self.sigma.iter().map(|s| t * s).collect();
        let c: Vec<Vec<f64>> = spectra
            .iter()
            .map(|spec| rho.iter().zip(&self.coef).map(|(&x, &w)| td * w * freq.interpolate(spec, x)).collect())
            .collect();
        let nodes = self.radial.nodes();
        let mut out = vec![vec![0.0; n]; spectra.len()];
        let mut b = vec![0.0; k];
        let mut acc = vec![Neumaier::default(); spectra.len()];
        for (j, &r) in nodes.iter().enumerate() {
            for (bk, &x) in b.iter_mut().zip(&rho) {
                *bk = self.kernel.eval(r * x);
            }
            acc.iter_mut().for_each(|a| *a = Neumaier::default());
            for (i, ci) in c.iter().enumerate() {
                let a = &mut acc[i];
                for (bk, ck) in b.iter().zip(ci) {
                    a.add(bk * ck);
                }
                out[i][j] = a.value();
            }
        }
        out
    }

    /// `T_{m(./t)} f_i` for every `t` and input; indexed `[t][i]`.
    pub fn apply_all(&self, t_grid: &[f64], inputs: &[&RadialProfile]) -> Result<Vec<Vec<Vec<f64>>>> {
        check_t_grid(t_grid)?;
        let spectra = self.spectra(inputs)?;
        Ok(t_grid.iter().map(|&t| self.apply_spectra(t, &spectra)).collect())
    }

    /// Running maximum of `|T_{m(./t)} f_i|` over `t_grid`.
    pub fn maximal(&self, t_grid: &[f64], inputs: &[&RadialProfile]) -> Result<Vec<Vec<f64>>> {
        check_t_grid(t_grid)?;
        let spectra = self.spectra(inputs)?;
        let mut best = vec![vec![0.0f64; self.radial.len()]; inputs.len()];
        for &t in t_grid {
            let out = self.apply_spectra(t, &spectra);
            for (b, o) in best.iter_mut().zip(&out) {
                for (x, y) in b.iter_mut().zip(o) {
                    *x = x.max(y.abs());
                }
            }
        }
        Ok(best)
    }
}

/// `T_m f = H_d[m H_d f]` on the grid of `f`.
pub fn apply_multiplier(m: &Multiplier, f: &RadialProfile, d: f64) -> Result<RadialProfile> {
    let engine = ScaleEngine::new(m, d, f.grid().clone(), 0)?;
    let spec = engine.spectra(&[f])?;
    let out = engine.apply_spectra(1.0, &spec).pop().expect("one output");
    f.with_values(out)
}

/// `r -> max_{t in t_grid} |T_{m(./t)} f(r)|`.
pub fn maximal_operator(m: &Multiplier, f: &RadialProfile, d: f64, t_grid: &[f64]) -> Result<RadialProfile> {
    check_t_grid(t_grid)?;
    let engine = ScaleEngine::new(m, d, f.grid().clone(), 0)?;
    let out = engine.maximal(t_grid, &[f])?.pop().expect("one output");
    f.with_values(out)
}

/// `r -> int_I T_{m(./t)} f_t(r) dt` by the trapezoid rule on the family's grid.
pub fn averaged_dual_operator(m: &Multiplier, f: &TimeFamily, d: f64) -> Result<RadialProfile> {
    averaged_dual_operator_with(m, f, d, true)
}

/// As [`averaged_dual_operator`]; with `dilate = false` every scale uses `m` itself.
pub fn averaged_dual_operator_with(m: &Multiplier, f: &TimeFamily, d: f64, dilate: bool) -> Result<RadialProfile> {
    let engine = ScaleEngine::new(m, d, f.grid().clone(), 0)?;
    let refs: Vec<&RadialProfile> = f.profiles().iter().collect();
    let spectra = engine.spectra(&refs)?;
    let w = trapezoid_weights(f.t_grid());
    let n = f.grid().len();
    let mut acc = vec![Neumaier::default(); n];
    for ((&t, spec), wk) in f.t_grid().iter().zip(spectra).zip(&w) {
        if *wk == 0.0 {
            continue;
        }
        let scale = if dilate { t } else { 1.0 };
        let out = engine.apply_spectra(scale, std::slice::from_ref(&spec));
        for (a, v) in acc.iter_mut().zip(&out[0]) {
            a.add(wk * v);
        }
    }
    f.profiles()[0].with_values(acc.iter().map(|a| a.value()).collect())
}

/// Gaussian bump `exp(-(rho-c)^2/(2 w^2))` cut at six widths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralBump {
    pub center: f64,
    pub width: f64,
}

impl RadialWeight for SpectralBump {
    fn value(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        if u.abs() > 6.0 {
            0.0
        } else {
            (-0.5 * u * u).exp()
        }
    }

    fn support(&self) -> (f64, f64) {
        ((self.center - 6.0 * self.width).max(0.0), self.center + 6.0 * self.width)
    }

    fn breakpoints(&self) -> Vec<Breakpoint> {
        vec![]
    }

    fn max_panel(&self) -> f64 {
        self.width
    }
}

/// Band-limited profile `H_d g` with `g` a Gaussian bump in frequency.
pub fn band_limited_profile(grid: Arc<RadialGrid>, d: f64, bump: SpectralBump) -> Result<RadialProfile> {
    let values = transform_weight(d, &bump, grid.nodes())?;
    RadialProfile::new(grid, values, d)
}

/// Width of the spectral bumps of the random families.
pub const BASIS_WIDTH: f64 = 0.08;

/// Band-limited basis with bump centres spread over `[0.75, 1.75]`.
pub fn band_limited_basis(grid: Arc<RadialGrid>, d: f64, count: usize) -> Result<Vec<RadialProfile>> {
    (0..count)
        .map(|j| {
            let center = if count == 1 { 1.25 } else { 0.75 + j as f64 / (count - 1) as f64 };
            band_limited_profile(grid.clone(), d, SpectralBump { center, width: BASIS_WIDTH })
        })
        .collect()
}

/// `r -> B_d(r) (1 - S(2 r / R0 - 1))`: a profile whose spectrum concentrates at `rho = 1`.
pub fn focusing_profile(grid: Arc<RadialGrid>, d: f64, r0: f64) -> Result<RadialProfile> {
    let kb = KernelB::new(d)?;
    RadialProfile::from_fn(grid, d, |r| kb.eval(r) * (1.0 - smooth_step(2.0 * r / r0 - 1.0)))
}

/// Coefficients `c_j(t)` of a family `f_t = sum_j c_j(t) phi_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyCoefficients {
    /// Cosine coefficients `a_{jl}`: `c_j(t) = sum_l a_{jl} cos(l pi (t - 1))`.
    pub cosine: Vec<Vec<f64>>,
}

pub const FAMILY_MODES: usize = 4;

impl FamilyCoefficients {
    pub fn random(basis_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cosine = (0..basis_size)
            .map(|_| (0..FAMILY_MODES).map(|l| rng.gen_range(-1.0..1.0) / (1.0 + l as f64)).collect())
            .collect();
        Self { cosine }
    }

    pub fn eval(&self, j: usize, t: f64) -> f64 {
        self.cosine[j].iter().enumerate().map(|(l, a)| a * (l as f64 * std::f64::consts::PI * (t - 1.0)).cos()).sum()
    }

    /// `c_j(t_k)` indexed `[k][j]`.
    pub fn table(&self, t_grid: &[f64]) -> Vec<Vec<f64>> {
        t_grid.iter().map(|&t| (0..self.cosine.len()).map(|j| self.eval(j, t)).collect()).collect()
    }
}

/// `f_t = sum_j c_j(t) phi_j` sampled on `t_grid`.
pub fn family_from_basis(basis: &[RadialProfile], coeffs: &FamilyCoefficients, t_grid: &[f64]) -> Result<TimeFamily> {
    if basis.is_empty() || coeffs.cosine.len() != basis.len() {
        return Err(Error::Domain("coefficients do not match the basis".into()));
    }
    let table = coeffs.table(t_grid);
    let n = basis[0].grid().len();
    let profiles = table
        .iter()
        .map(|c| {
            let mut v = vec![0.0; n];
            for (cj, phi) in c.iter().zip(basis) {
                for (x, p) in v.iter_mut().zip(phi.values()) {
                    *x += cj * p;
                }
            }
            basis[0].with_values(v)
        })
        .collect::<Result<Vec<_>>>()?;
    TimeFamily::new(t_grid.to_vec(), profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::{bochner_riesz, BochnerRieszParams};

    #[test]
    fn t_grids() {
        let g = geometric_t_grid(64);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[63], 2.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let w = trapezoid_weights(&uniform_t_grid(11));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(check_t_grid(&[]).is_err());
        assert!(check_t_grid(&[0.5, 1.0]).is_err());
    }

    #[test]
    fn zero_multiplier_gives_zero() {
        let g = default_operator_grid();
        let f = focusing_profile(g, 2.0, 16.0).unwrap();
        let out = apply_multiplier(&Multiplier::zero(), &f, 2.0).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_scale_maximal_is_absolute_value() {
        let g = default_operator_grid();
        let f = band_limited_profile(g, 2.0, SpectralBump { center: 0.9, width: 0.08 }).unwrap();
        let m = bochner_riesz(BochnerRieszParams::new(1.0)).unwrap();
        let t = apply_multiplier(&m, &f, 2.0).unwrap();
        let mx = maximal_operator(&m, &f, 2.0, &[1.0]).unwrap();
        for (a, b) in t.values().iter().zip(mx.values()) {
            assert_eq!(a.abs(), *b);
        }
    }

    #[test]
    fn family_coefficients_are_seeded() {
        assert_eq!(FamilyCoefficients::random(4, 7), FamilyCoefficients::random(4, 7));
        assert_ne!(FamilyCoefficients::random(4, 7), FamilyCoefficients::random(4, 8));
    }
}
