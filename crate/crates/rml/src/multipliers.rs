//! Multipliers supported in `[1/2, 2]`, their radial kernels `H_d m`, the
//! one-dimensional kernels `F^{-1} m` and dilations.

use crate::error::{check_dimension, Error, Result};
use crate::grid::{RadialGrid, DEFAULT_ORDER};
use crate::hankel::{RadialProfile, RadialWeight};
use crate::lorentz::{SampledFunction, WeightedMeasure};
use crate::quadrature::{integrate_panels, panel_edges, Breakpoint, Singularity};
use crate::special::KernelB;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub const SUPPORT: (f64, f64) = (0.5, 2.0);

/// Widest quadrature panel used on a multiplier of unit scale.
const MAX_PANEL: f64 = 0.025;

fn psi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = psi(x);
        a / (a + psi(1.0 - x))
    }
}

/// Transition widths of the cutoff at `1/2` and at `2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffWidths {
    pub lower: f64,
    pub upper: f64,
}

impl Default for CutoffWidths {
    fn default() -> Self {
        Self { lower: 0.1, upper: 0.5 }
    }
}

impl CutoffWidths {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0) || !(upper > 0.0) || 0.5 + lower > 2.0 - upper {
            return Err(Error::Multiplier(format!("cutoff widths ({lower}, {upper}) leave no plateau inside [1/2, 2]")));
        }
        Ok(Self { lower, upper })
    }

    /// `chi(xi) = S((xi - 1/2)/lower) S((2 - xi)/upper)`.
    pub fn chi(&self, xi: f64) -> f64 {
        smooth_step((xi - 0.5) / self.lower) * smooth_step((2.0 - xi) / self.upper)
    }

    pub fn plateau(&self) -> (f64, f64) {
        (0.5 + self.lower, 2.0 - self.upper)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BochnerRieszParams {
    pub lambda: f64,
    #[serde(default)]
    pub cutoff: CutoffWidths,
}

impl BochnerRieszParams {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, cutoff: CutoffWidths::default() }
    }

    pub fn with_cutoff(lambda: f64, cutoff: CutoffWidths) -> Self {
        Self { lambda, cutoff }
    }
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Zero,
    BochnerRiesz(BochnerRieszParams),
    Bump(CutoffWidths),
    Indicator { lo: f64, hi: f64 },
    Sampled(Vec<(f64, f64)>),
    Custom { f: Evaluator, support: (f64, f64), sup: f64, breaks: Vec<Breakpoint> },
}

/// A bounded radial multiplier supported in `[1/2, 2]`, possibly dilated.
#[derive(Clone)]
pub struct Multiplier {
    label: String,
    shape: Shape,
    scale: f64,
}

impl std::fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Multiplier({}, scale {})", self.label, self.scale)
    }
}

/// `m^lambda(xi) = (1 - xi^2)_+^lambda chi(xi)`.
pub fn bochner_riesz(params: BochnerRieszParams) -> Result<Multiplier> {
    if !(params.lambda > 0.0) || !params.lambda.is_finite() {
        return Err(Error::Multiplier(format!("lambda must be positive, got {}", params.lambda)));
    }
    CutoffWidths::new(params.cutoff.lower, params.cutoff.upper)?;
    Ok(Multiplier { label: format!("bochner_riesz(lambda={})", params.lambda), shape: Shape::BochnerRiesz(params), scale: 1.0 })
}

impl Multiplier {
    pub fn zero() -> Self {
        Self { label: "zero".into(), shape: Shape::Zero, scale: 1.0 }
    }

    /// Smooth bump equal to 1 on `[0.6, 1.8]`.
    pub fn bump() -> Self {
        Self { label: "bump".into(), shape: Shape::Bump(CutoffWidths { lower: 0.1, upper: 0.2 }), scale: 1.0 }
    }

    /// Indicator of `[lo, hi]`, inside `[1/2, 2]`.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= SUPPORT.0 && hi <= SUPPORT.1 && lo < hi) {
            return Err(Error::Multiplier(format!("indicator [{lo}, {hi}] must lie inside [1/2, 2]")));
        }
        Ok(Self { label: format!("indicator[{lo},{hi}]"), shape: Shape::Indicator { lo, hi }, scale: 1.0 })
    }

    /// Linear interpolation of samples, clamped to `[1/2, 2]`.
    pub fn sampled(label: &str, samples: &[(f64, f64)]) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = samples.to_vec();
        if pts.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) {
            return Err(Error::Multiplier("samples must be finite".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Multiplier("sample abscissae must be distinct".into()));
        }
        let mut clipped: Vec<(f64, f64)> = pts.iter().copied().filter(|(x, _)| *x >= SUPPORT.0 && *x <= SUPPORT.1).collect();
        for edge in [SUPPORT.0, SUPPORT.1] {
            if pts.first().map_or(false, |p| p.0 < edge) && pts.last().map_or(false, |p| p.0 > edge) && !clipped.iter().any(|p| p.0 == edge) {
                clipped.push((edge, interpolate_linear(&pts, edge)));
            }
        }
        clipped.sort_by(|a, b| a.0.total_cmp(&b.0));
        if clipped.len() < 2 {
            return Err(Error::Multiplier("need at least two samples inside [1/2, 2]".into()));
        }
        Ok(Self { label: label.into(), shape: Shape::Sampled(clipped), scale: 1.0 })
    }

    /// Caller-supplied evaluator; values outside `support` are forced to 0.
    pub fn custom<F>(label: &str, support: (f64, f64), sup_bound: f64, breakpoints: Vec<Breakpoint>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support.0 >= SUPPORT.0 && support.1 <= SUPPORT.1 && support.0 < support.1) {
            return Err(Error::Multiplier("support certificate must lie inside [1/2, 2]".into()));
        }
        Ok(Self { label: label.into(), shape: Shape::Custom { f: Arc::new(f), support, sup: sup_bound, breaks: breakpoints }, scale: 1.0 })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `xi -> m(xi / t)`.
    pub fn dilate(&self, t: f64) -> Self {
        Self { label: self.label.clone(), shape: self.shape.clone(), scale: self.scale * t }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, Shape::Zero)
    }

    pub fn bochner_riesz_params(&self) -> Option<BochnerRieszParams> {
        match self.shape {
            Shape::BochnerRiesz(p) => Some(p),
            _ => None,
        }
    }

    fn base_support(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Zero => (1.0, 1.0),
            Shape::BochnerRiesz(_) => (0.5, 1.0),
            Shape::Bump(_) => SUPPORT,
            Shape::Indicator { lo, hi } => (*lo, *hi),
            Shape::Sampled(p) => (p[0].0, p[p.len() - 1].0),
            Shape::Custom { support, .. } => *support,
        }
    }

    /// Interval outside which the multiplier vanishes.
    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.base_support();
        (a * self.scale, b * self.scale)
    }

    pub fn sup_bound(&self) -> f64 {
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::BochnerRiesz(p) => 0.75f64.powf(p.lambda),
            Shape::Bump(_) | Shape::Indicator { .. } => 1.0,
            Shape::Sampled(p) => p.iter().fold(0.0, |m: f64, (_, v)| m.max(v.abs())),
            Shape::Custom { sup, .. } => *sup,
        }
    }

    fn base_eval(&self, xi: f64) -> f64 {
        let (a, b) = self.base_support();
        if !(xi >= a && xi <= b) {
            return 0.0;
        }
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::BochnerRiesz(p) => {
                let base = 1.0 - xi * xi;
                if base <= 0.0 {
                    0.0
                } else {
                    base.powf(p.lambda) * p.cutoff.chi(xi)
                }
            }
            Shape::Bump(w) => w.chi(xi),
            Shape::Indicator { .. } => 1.0,
            Shape::Sampled(p) => interpolate_linear(p, xi),
            Shape::Custom { f, .. } => f(xi),
        }
    }

    /// `m(xi)`; zero outside the support certificate.
    pub fn eval(&self, xi: f64) -> f64 {
        self.base_eval(xi / self.scale)
    }

    /// Non-smooth points (and cutoff transition ends), already dilated.
    pub fn breakpoints(&self) -> Vec<Breakpoint> {
        let graded = |at: f64| Breakpoint { at, kind: Singularity::Graded };
        let base: Vec<Breakpoint> = match &self.shape {
            Shape::Zero => vec![],
            Shape::BochnerRiesz(p) => {
                let mut v = vec![graded(0.5), Breakpoint::edge(0.5 + p.cutoff.lower)];
                v.push(Breakpoint { at: 1.0, kind: Singularity::Power(p.lambda) });
                v
            }
            Shape::Bump(w) => vec![graded(0.5), Breakpoint::edge(w.plateau().0), Breakpoint::edge(w.plateau().1), graded(2.0)],
            Shape::Indicator { lo, hi } => vec![Breakpoint::edge(*lo), Breakpoint::edge(*hi)],
            Shape::Sampled(p) => p.iter().map(|(x, _)| Breakpoint::edge(*x)).collect(),
            Shape::Custom { breaks, .. } => breaks.clone(),
        };
        base.into_iter().map(|b| b.scaled(self.scale)).collect()
    }

    pub fn max_panel(&self) -> f64 {
        MAX_PANEL * self.scale
    }

    /// Quadrature edges over the support for an integrand oscillating with
    /// angular frequency at most `omega`.
    pub fn panels(&self, omega: f64) -> Vec<f64> {
        let (a, b) = self.support();
        let phase = if omega > 0.0 { Some(PI / omega) } else { None };
        panel_edges(a, b, phase, &self.breakpoints(), self.max_panel())
    }

    /// `int |m(xi)| dxi`.
    pub fn l1_norm(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        integrate_panels(&self.panels(0.0), |x| self.eval(x).abs())
    }

    pub fn describe(&self) -> MultiplierConfig {
        let (kind, lambda, cutoff, samples) = match &self.shape {
            Shape::Zero => (MultiplierKind::Zero, None, None, None),
            Shape::BochnerRiesz(p) => (MultiplierKind::BochnerRiesz, Some(p.lambda), Some(p.cutoff), None),
            Shape::Bump(_) => (MultiplierKind::Bump, None, None, None),
            Shape::Indicator { lo, hi } => (MultiplierKind::Sampled, None, None, Some(vec![[*lo, 1.0], [*hi, 1.0]])),
            Shape::Sampled(p) => (MultiplierKind::Sampled, None, None, Some(p.iter().map(|(x, v)| [*x, *v]).collect())),
            Shape::Custom { .. } => (MultiplierKind::Custom, None, None, None),
        };
        MultiplierConfig { label: self.label.clone(), kind, lambda, samples, cutoff }
    }
}

impl RadialWeight for Multiplier {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn support(&self) -> (f64, f64) {
        Multiplier::support(self)
    }

    fn breakpoints(&self) -> Vec<Breakpoint> {
        Multiplier::breakpoints(self)
    }

    fn max_panel(&self) -> f64 {
        Multiplier::max_panel(self)
    }
}

fn interpolate_linear(p: &[(f64, f64)], x: f64) -> f64 {
    if x < p[0].0 || x > p[p.len() - 1].0 {
        return 0.0;
    }
    let k = p.partition_point(|q| q.0 <= x);
    if k == 0 {
        return p[0].1;
    }
    if k >= p.len() {
        return p[p.len() - 1].1;
    }
    let (x0, v0) = p[k - 1];
    let (x1, v1) = p[k];
    v0 + (v1 - v0) * (x - x0) / (x1 - x0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierKind {
    Zero,
    BochnerRiesz,
    Bump,
    Sampled,
    Custom,
}

/// Multiplier definition as stored in files and reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierConfig {
    pub label: String,
    pub kind: MultiplierKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffWidths>,
}

impl MultiplierConfig {
    pub fn bochner_riesz(lambda: f64) -> Self {
        Self {
            label: format!("bochner_riesz(lambda={lambda})"),
            kind: MultiplierKind::BochnerRiesz,
            lambda: Some(lambda),
            samples: None,
            cutoff: Some(CutoffWidths::default()),
        }
    }

    pub fn build(&self) -> Result<Multiplier> {
        let mut m = match self.kind {
            MultiplierKind::Zero => Multiplier::zero(),
            MultiplierKind::BochnerRiesz => {
                let lambda = self.lambda.ok_or_else(|| Error::Multiplier("bochner_riesz needs \"lambda\"".into()))?;
                bochner_riesz(BochnerRieszParams::with_cutoff(lambda, self.cutoff.unwrap_or_default()))?
            }
            MultiplierKind::Bump => Multiplier::bump(),
            MultiplierKind::Sampled => {
                let s = self.samples.as_ref().ok_or_else(|| Error::Multiplier("sampled multiplier needs \"samples\"".into()))?;
                let pts: Vec<(f64, f64)> = s.iter().map(|p| (p[0], p[1])).collect();
                Multiplier::sampled(&self.label, &pts)?
            }
            MultiplierKind::Custom => return Err(Error::Multiplier("custom multipliers cannot be built from a file".into())),
        };
        if !self.label.is_empty() {
            m.label = self.label.clone();
        }
        Ok(m)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("multiplier file: {e}")))
    }
}

/// Bochner-Riesz multipliers of several orders, a smooth bump and a sampled profile.
pub fn zoo() -> Vec<Multiplier> {
    let mut v: Vec<Multiplier> = [0.5, 0.75, 1.0, 1.5]
        .iter()
        .map(|&l| bochner_riesz(BochnerRieszParams::new(l)).expect("valid lambda"))
        .collect();
    v.push(Multiplier::bump());
    v.push(Multiplier::indicator(0.5, 1.0).expect("valid slab"));
    v.push(Multiplier::sampled("tent", &[(0.6, 0.0), (1.0, 1.0), (1.6, 0.0)]).expect("valid samples"));
    v
}

/// `K = H_d m` sampled on a radial grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialKernel {
    pub profile: RadialProfile,
    pub label: String,
}

impl RadialKernel {
    pub fn d(&self) -> f64 {
        self.profile.d()
    }
}

/// `H_d` of a compactly supported function, by direct panel quadrature.
pub fn transform_weight(d: f64, w: &dyn RadialWeight, targets: &[f64]) -> Result<Vec<f64>> {
    let kb = KernelB::new(d)?;
    let (a, b) = w.support();
    let breaks = w.breakpoints();
    let max_panel = w.max_panel();
    Ok(targets
        .par_iter()
        .map(|&r| {
            if b <= a {
                return 0.0;
            }
            let phase = if r > 0.0 { Some(PI / r) } else { None };
            let edges = panel_edges(a, b, phase, &breaks, max_panel);
            integrate_panels(&edges, |x| w.value(x) * kb.eval(r * x) * x.powf(d - 1.0))
        })
        .collect())
}

/// `H_d m` on the default 4096-point grid of `(0, 200]`.
pub fn kernel_of(m: &Multiplier, d: f64) -> Result<RadialKernel> {
    kernel_on(m, d, Arc::new(RadialGrid::default_kernel()))
}

pub fn kernel_on(m: &Multiplier, d: f64, grid: Arc<RadialGrid>) -> Result<RadialKernel> {
    check_dimension(d)?;
    let values = if m.is_zero() { vec![0.0; grid.len()] } else { transform_weight(d, m, grid.nodes())? };
    Ok(RadialKernel { profile: RadialProfile::new(grid, values, d)?, label: m.label().to_string() })
}

/// Even function on `R` stored on `[0, R]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineKernel {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    pub label: String,
}

impl LineKernel {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, label: &str) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain("kernel values do not match the grid".into()));
        }
        Ok(Self { grid, values, label: label.into() })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, label: &str, f: F) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values, label: label.into() }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn radius(&self) -> f64 {
        self.grid.hi()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.values, x.abs())
    }

    /// `x -> (1+|x|)^{-(d-1)/2} kappa(x)` on the symmetric grid with `mu~_d` masses.
    pub fn weighted_sampled(&self, d: f64) -> Result<SampledFunction> {
        check_dimension(d)?;
        let measure = WeightedMeasure::line(d, self.grid.hi())?;
        let n = self.grid.len();
        let mut grid = Vec::with_capacity(2 * n);
        let mut values = Vec::with_capacity(2 * n);
        let mut masses = Vec::with_capacity(2 * n);
        let nodes = self.grid.nodes();
        let weights = self.grid.weights();
        let push = |i: usize, sign: f64, grid: &mut Vec<f64>, values: &mut Vec<f64>, masses: &mut Vec<f64>| {
            let x = nodes[i];
            grid.push(sign * x);
            values.push((1.0 + x).powf(-(d - 1.0) / 2.0) * self.values[i]);
            masses.push(weights[i] * (1.0 + x).powf(d - 1.0));
        };
        for i in (0..n).rev() {
            push(i, -1.0, &mut grid, &mut values, &mut masses);
        }
        for i in 0..n {
            push(i, 1.0, &mut grid, &mut values, &mut masses);
        }
        SampledFunction::with_masses(grid, values, masses, measure)
    }
}

/// Default grid of the one-dimensional kernels: `[0, 512]`, unit panels.
pub fn default_line_grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::uniform(0.0, 512.0, 512, DEFAULT_ORDER).expect("line grid"))
}

/// `kappa(x) = (1/pi) int_0^inf m(xi) cos(x xi) dxi` on the default line grid.
pub fn one_dim_kernel(m: &Multiplier) -> LineKernel {
    one_dim_kernel_on(m, default_line_grid())
}

pub fn one_dim_kernel_on(m: &Multiplier, grid: Arc<RadialGrid>) -> LineKernel {
    let values = grid.nodes().par_iter().map(|&x| cosine_transform(m, x)).collect();
    LineKernel { grid, values, label: m.label().into() }
}

/// `(1/pi) int m(xi) cos(x xi) dxi` at a single point.
pub fn cosine_transform(m: &Multiplier, x: f64) -> f64 {
    if m.is_zero() {
        return 0.0;
    }
    let edges = m.panels(x.abs());
    integrate_panels(&edges, |xi| m.eval(xi) * (x * xi).cos()) / PI
}

/// Kernels that can be dilated by `t in [1, 2]`.
pub trait Dilate: Sized {
    fn dilate(&self, t: f64) -> Result<Self>;
}

fn check_scale(t: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&t) {
        return Err(Error::Range(format!("dilation t must lie in [1, 2], got {t}")));
    }
    Ok(())
}

impl Dilate for RadialKernel {
    /// `r -> t^d kappa(t r)`, zero where `t r` leaves the grid.
    fn dilate(&self, t: f64) -> Result<Self> {
        check_scale(t)?;
        if t == 1.0 {
            return Ok(self.clone());
        }
        let d = self.d();
        let grid = self.profile.grid().clone();
        let values = grid.nodes().iter().map(|&r| t.powf(d) * self.profile.eval(t * r)).collect();
        Ok(Self { profile: RadialProfile::new(grid, values, d)?, label: self.label.clone() })
    }
}

impl Dilate for LineKernel {
    /// `x -> t kappa(t x)`.
    fn dilate(&self, t: f64) -> Result<Self> {
        check_scale(t)?;
        if t == 1.0 {
            return Ok(self.clone());
        }
        let values = self.grid.nodes().iter().map(|&x| t * self.eval(t * x)).collect();
        Ok(Self { grid: self.grid.clone(), values, label: self.label.clone() })
    }
}

pub fn dilate_kernel<K: Dilate>(kernel: &K, t: f64) -> Result<K> {
    kernel.dilate(t)
}

/// Negated least-squares slope of `log|kappa|` against `log r` over the
/// envelope samples in `[r0, r1]`.
pub fn decay_exponent_fit(kernel: &RadialKernel, window: (f64, f64)) -> Result<f64> {
    fit_decay(kernel.profile.grid().nodes(), kernel.profile.values(), window)
}

/// Envelope samples are the local maxima of `|v|`; a window on which `|v|`
/// is monotone and sign-definite uses every sample.
pub fn fit_decay(r: &[f64], v: &[f64], window: (f64, f64)) -> Result<f64> {
    let (r0, r1) = window;
    if !(r0 >= 1.0 && r1 > 2.0 * r0) {
        return Err(Error::Domain(format!("window must satisfy r1 > 2 r0 >= 2, got [{r0}, {r1}]")));
    }
    let idx: Vec<usize> = (0..r.len()).filter(|&i| r[i] >= r0 && r[i] <= r1).collect();
    let pts = envelope_points(r, v, &idx);
    if pts.len() < 5 {
        return Err(Error::InsufficientData(format!("{} envelope samples in [{r0}, {r1}], need 5", pts.len())));
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in &pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    Ok(-sxy / sxx)
}

/// `(log r, log |v|)` at the envelope samples.
pub fn envelope_points(r: &[f64], v: &[f64], idx: &[usize]) -> Vec<(f64, f64)> {
    if idx.len() < 3 {
        return vec![];
    }
    let a: Vec<f64> = idx.iter().map(|&i| v[i].abs()).collect();
    let same_sign = idx.iter().all(|&i| v[i] > 0.0) || idx.iter().all(|&i| v[i] < 0.0);
    let monotone = a.windows(2).all(|w| w[1] <= w[0]) || a.windows(2).all(|w| w[1] >= w[0]);
    let chosen: Vec<usize> = if same_sign && monotone {
        (0..idx.len()).collect()
    } else {
        (1..idx.len() - 1).filter(|&k| a[k] > 0.0 && a[k] >= a[k - 1] && a[k] >= a[k + 1]).collect()
    };
    chosen.into_iter().map(|k| (r[idx[k]].ln(), a[k].ln())).collect()
}

/// Exponent of the Bochner-Riesz kernel decay, `(d+1)/2 + lambda`.
pub fn bochner_riesz_decay_exponent(d: f64, lambda: f64) -> f64 {
    (d + 1.0) / 2.0 + lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bochner_riesz_examples() {
        let m1 = bochner_riesz(BochnerRieszParams::new(1.0)).unwrap();
        assert_eq!(m1.eval(2.0), 0.0);
        assert!((m1.eval(0.8) - 0.36).abs() < 1e-15);
        let mh = bochner_riesz(BochnerRieszParams::new(0.5)).unwrap();
        assert_eq!(mh.eval(1.0), 0.0);
        assert_eq!(m1.support(), (0.5, 1.0));
        assert!(bochner_riesz(BochnerRieszParams::new(0.0)).is_err());
        assert!(bochner_riesz(BochnerRieszParams::new(-1.0)).is_err());
    }

    #[test]
    fn cutoff_shape() {
        let c = CutoffWidths::default();
        assert_eq!(c.chi(0.5), 0.0);
        assert_eq!(c.chi(2.0), 0.0);
        for i in 0..=40 {
            let x = 0.6 + 0.01 * i as f64;
            assert_eq!(c.chi(x), 1.0);
        }
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn slab_cosine_transform() {
        let m = Multiplier::indicator(0.5, 1.0).unwrap();
        for i in 1..200 {
            let x = 0.37 * i as f64;
            let want = (x.sin() - (x / 2.0).sin()) / (PI * x);
            assert!((cosine_transform(&m, x) - want).abs() < 1e-9, "x={x}");
        }
        assert!((cosine_transform(&m, 0.0) - 0.5 / PI).abs() < 1e-14);
    }

    #[test]
    fn sampled_clamps_to_support() {
        let m = Multiplier::sampled("s", &[(0.0, 1.0), (1.0, 1.0), (3.0, 0.0)]).unwrap();
        assert_eq!(m.support(), (0.5, 2.0));
        assert_eq!(m.eval(0.4), 0.0);
        assert!((m.eval(2.0) - 0.5).abs() < 1e-15);
        assert_eq!(m.eval(2.1), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"label":"br","kind":"bochner_riesz","lambda":0.5}"#;
        let m = MultiplierConfig::from_json(text).unwrap().build().unwrap();
        assert_eq!(m.label(), "br");
        assert!((m.eval(0.8) - 0.36f64.sqrt()).abs() < 1e-15);
        let s = MultiplierConfig::from_json(r#"{"label":"x","kind":"sampled","samples":[[0.5,0],[1,1],[2,0]]}"#).unwrap();
        assert!((s.build().unwrap().eval(1.5) - 0.5).abs() < 1e-15);
        assert!(MultiplierConfig::from_json(r#"{"label":"x","kind":"bochner_riesz"}"#).unwrap().build().is_err());
    }

    #[test]
    fn synthetic_power_law_fit() {
        let g = RadialGrid::uniform(0.0, 200.0, 200, 8).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|r| r.powi(-3) * (2.0 + (0.5 * r).cos())).collect();
        let e = fit_decay(g.nodes(), &v, (10.0, 200.0)).unwrap();
        assert!((e - 3.0).abs() < 0.05, "{e}");
    }

    #[test]
    fn fit_needs_five_maxima() {
        let r: Vec<f64> = (0..100).map(|i| 10.0 + i as f64 * 0.1).collect();
        let v: Vec<f64> = r.iter().map(|x| (x * 0.3).sin()).collect();
        assert!(matches!(fit_decay(&r, &v, (10.0, 25.0)), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn dilation_range() {
        let g = Arc::new(RadialGrid::uniform(0.0, 10.0, 40, 16).unwrap());
        let k = LineKernel::from_fn(g, "gauss", |x| (-x * x).exp());
        assert!(dilate_kernel(&k, 0.5).is_err());
        assert!(dilate_kernel(&k, 2.5).is_err());
        let k1 = dilate_kernel(&k, 1.0).unwrap();
        assert_eq!(k1.values(), k.values());
        let k2 = dilate_kernel(&k, 2.0).unwrap();
        for (x, v) in k2.grid().nodes().iter().zip(k2.values()) {
            assert!((v - 2.0 * (-4.0 * x * x).exp()).abs() < 1e-12);
        }
    }
}
