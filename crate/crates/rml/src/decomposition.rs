//! The bilinear kernel `K(r,s)[g]`, the weight `w_N`, the majorant
//! `W[f(s)] = |K[f(s)]| * w_N`, the pointwise kernel bound and the splitting
//! of `int K(r,s)[f(s)] dmu_d(s)` into the pieces `E`, `sum_m S_m` and `H`.

use crate::error::{check_dimension, Error, Result};
use crate::hankel::RadialProfile;
use crate::lorentz::{lorentz_norm_atoms, lp_norm_atoms, LorentzExponents};
use crate::multipliers::{smooth_step, LineKernel, Multiplier};
use crate::operators::{check_t_grid, trapezoid_weights, ScaleRule, TimeFamily};
use crate::probe::compute_a;
use crate::quadrature::{panel_rule, Neumaier};
use crate::special::KernelB;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::sync::Arc;

/// Numerators at or below this are reported as ratio 0 when the denominator vanishes.
pub const ZERO_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_N: f64 = 10.0;

/// Truncation of the `w_N` convolution.
pub const CONVOLUTION_HALF_WIDTH: f64 = 40.0;

/// Default step of the uniform grid carrying `K[f(s)]` and `W[f(s)]`.
pub const DEFAULT_STEP: f64 = 0.05;

/// `eta`: smooth, supported in `[1/8, 8]`, equal to 1 on `[1/4, 4]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CutoffFunction;

impl CutoffFunction {
    pub fn eval(&self, rho: f64) -> f64 {
        smooth_step((rho - 0.125) / 0.125) * smooth_step((8.0 - rho) / 4.0)
    }
}

/// `w_N(x) = (1 + |x|)^{-N}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MajorantWeight {
    n: f64,
}

impl MajorantWeight {
    pub fn new(n: f64) -> Result<Self> {
        if !(n > 1.0) || !n.is_finite() {
            return Err(Error::Domain(format!("N must exceed 1, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn eval(&self, x: f64) -> f64 {
        (1.0 + x.abs()).powf(-self.n)
    }

    /// `int_R w_N = 2 / (N - 1)`.
    pub fn integral(&self) -> f64 {
        2.0 / (self.n - 1.0)
    }
}

impl Default for MajorantWeight {
    fn default() -> Self {
        Self { n: DEFAULT_N }
    }
}

/// `I_m = [2^m, 2^{m+1})` and `I_m* = [2^{m-2}, 2^{m+3})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DyadicBlock {
    pub m: i32,
}

impl DyadicBlock {
    pub fn new(m: i32) -> Self {
        Self { m }
    }

    /// The block whose `I_m` contains `s > 0`.
    pub fn containing(s: f64) -> Self {
        let mut m = s.log2().floor() as i32;
        while 2f64.powi(m + 1) <= s {
            m += 1;
        }
        while 2f64.powi(m) > s {
            m -= 1;
        }
        Self { m }
    }

    pub fn inner(&self) -> (f64, f64) {
        (2f64.powi(self.m), 2f64.powi(self.m + 1))
    }

    pub fn outer(&self) -> (f64, f64) {
        (2f64.powi(self.m - 2), 2f64.powi(self.m + 3))
    }

    pub fn in_inner(&self, s: f64) -> bool {
        let (a, b) = self.inner();
        s >= a && s < b
    }

    pub fn in_outer(&self, r: f64) -> bool {
        let (a, b) = self.outer();
        r >= a && r < b
    }

    /// Indicators of `(0, 2^{m-2})`, `I_m*` and `[2^{m+3}, inf)` at `r > 0`.
    pub fn pieces(&self, r: f64) -> [u8; 3] {
        let (a, b) = self.outer();
        [(r > 0.0 && r < a) as u8, (r >= a && r < b) as u8, (r >= b) as u8]
    }
}

/// Blocks with `I_m` meeting `[lo, hi]`, `lo > 0`.
pub fn blocks_between(lo: f64, hi: f64) -> Vec<DyadicBlock> {
    let a = DyadicBlock::containing(lo).m;
    let b = DyadicBlock::containing(hi).m;
    (a..=b).map(DyadicBlock::new).collect()
}

/// `K_k(r_i, s_j) = int m(rho/t_k) B_d(r_i rho) B_d(s_j rho) dmu_d(rho)` for every `t_k`.
#[derive(Clone, Debug)]
pub struct BilinearBank {
    t_grid: Vec<f64>,
    tau: Vec<f64>,
    r: Vec<f64>,
    s: Vec<f64>,
    blocks: Vec<Vec<f64>>,
}

impl BilinearBank {
    pub fn new(m: &Multiplier, d: f64, r: &[f64], s: &[f64], t_grid: &[f64], refine: u32) -> Result<Self> {
        check_dimension(d)?;
        check_t_grid(t_grid)?;
        if r.iter().chain(s).any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::Domain("bilinear kernel needs r, s > 0".into()));
        }
        let kb = KernelB::new(d)?;
        let rmax = r.iter().chain(s).fold(0.0f64, |a, &b| a.max(b));
        let rule = ScaleRule::new(m, d, 4.0 * rmax * 2f64.powi(refine as i32));
        let k = rule.len();
        let (nr, ns) = (r.len(), s.len());
        let blocks = t_grid
            .iter()
            .map(|&t| {
                let td = t.powf(d);
                let table = |pts: &[f64]| -> Vec<f64> {
                    let mut out = Vec::with_capacity(pts.len() * k);
                    for &x in pts {
                        out.extend(rule.sigma.iter().map(|sg| kb.eval(x * t * sg)));
                    }
                    out
                };
                let br = table(r);
                let bs = table(s);
                let mut kk = vec![0.0; nr * ns];
                for i in 0..nr {
                    let ri = &br[i * k..(i + 1) * k];
                    for j in 0..ns {
                        let sj = &bs[j * k..(j + 1) * k];
                        let mut acc = Neumaier::default();
                        for ((a, b), c) in ri.iter().zip(sj).zip(&rule.coef) {
                            acc.add(a * b * c);
                        }
                        kk[i * ns + j] = td * acc.value();
                    }
                }
                kk
            })
            .collect();
        Ok(Self { t_grid: t_grid.to_vec(), tau: trapezoid_weights(t_grid), r: r.to_vec(), s: s.to_vec(), blocks })
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    /// `K(r_i, s_j)[g]` with `g` sampled on the bank's `t` grid.
    pub fn kernel(&self, i: usize, j: usize, g: &[f64]) -> f64 {
        let ns = self.s.len();
        let mut acc = Neumaier::default();
        for ((blk, tau), gk) in self.blocks.iter().zip(&self.tau).zip(g) {
            acc.add(tau * gk * blk[i * ns + j]);
        }
        acc.value()
    }
}

/// `K(r,s)[g]` for one pair; `g` sampled on `t_grid`.
pub fn bilinear_kernel(m: &Multiplier, r: f64, s: f64, g: &[f64], t_grid: &[f64], d: f64) -> Result<f64> {
    if g.len() != t_grid.len() {
        return Err(Error::Domain("g must be sampled on the t grid".into()));
    }
    let bank = BilinearBank::new(m, d, &[r], &[s], t_grid, 0)?;
    Ok(bank.kernel(0, 0, g))
}

/// `K[f(s)] = int_I f_t(s) kappa_t dt` and `W[f(s)] = |K[f(s)]| * w_N` on a uniform grid.
pub struct MajorantEngine {
    weight: MajorantWeight,
    step: f64,
    half_width: f64,
    tau: Vec<f64>,
    t_grid: Vec<f64>,
    kappa: LineKernel,
    phi: Vec<Vec<f64>>,
    kernel_len: usize,
    weight_len: usize,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    weight_hat: Vec<Complex<f64>>,
    conv_weights: Vec<f64>,
}

impl std::fmt::Debug for MajorantEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MajorantEngine").field("step", &self.step).field("half_width", &self.half_width).field("t_points", &self.t_grid.len()).finish()
    }
}

fn smooth_fft_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// `int w_N(u) h_q(u) du` for the hat functions `h_q` of the nodes `q step`, `|q| <= half`.
fn product_weights(weight: MajorantWeight, half: usize, step: f64) -> Vec<f64> {
    let rule = panel_rule();
    let n = 2 * half + 1;
    let mut out = vec![0.0; n];
    for q in 0..n - 1 {
        let a = (q as f64 - half as f64) * step;
        let b = a + step;
        let (mut left, mut right) = (0.0, 0.0);
        for (u, w) in rule.mapped(a, b) {
            let v = w * weight.eval(u);
            left += v * (b - u) / step;
            right += v * (u - a) / step;
        }
        out[q] += left;
        out[q + 1] += right;
    }
    out
}

impl MajorantEngine {
    /// `W` is produced on `[-half_width, half_width]` with spacing `step`.
    pub fn new(kappa: &LineKernel, t_grid: &[f64], weight: MajorantWeight, half_width: f64, step: f64) -> Result<Self> {
        check_t_grid(t_grid)?;
        if !(step > 0.0) || !(half_width > 0.0) {
            return Err(Error::Domain("majorant grid needs positive step and width".into()));
        }
        let reach = half_width + CONVOLUTION_HALF_WIDTH;
        if 2.0 * reach > kappa.radius() {
            return Err(Error::Domain(format!("one-dimensional kernel grid must reach {}", 2.0 * reach)));
        }
        let half_k = (reach / step).round() as usize;
        let half_w = (CONVOLUTION_HALF_WIDTH / step).round() as usize;
        let kernel_len = 2 * half_k + 1;
        let weight_len = 2 * half_w + 1;
        let phi = t_grid
            .iter()
            .map(|&t| (0..kernel_len).map(|p| t * kappa.eval(t * (p as f64 - half_k as f64) * step)).collect())
            .collect();
        let fft_len = smooth_fft_len(kernel_len + weight_len - 1);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let conv_weights = product_weights(weight, half_w, step);
        let mut weight_hat = vec![Complex::new(0.0, 0.0); fft_len];
        for (h, w) in weight_hat.iter_mut().zip(&conv_weights) {
            *h = Complex::new(*w, 0.0);
        }
        forward.process(&mut weight_hat);
        let half_width = (half_k - half_w) as f64 * step;
        Ok(Self {
            weight,
            step,
            half_width,
            tau: trapezoid_weights(t_grid),
            t_grid: t_grid.to_vec(),
            kappa: kappa.clone(),
            phi,
            kernel_len,
            weight_len,
            fft_len,
            forward,
            inverse,
            weight_hat,
            conv_weights,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn weight(&self) -> MajorantWeight {
        self.weight
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    /// Abscissae of the `W` samples.
    pub fn x_grid(&self) -> Vec<f64> {
        let n = self.output_len();
        let h = (n / 2) as f64;
        (0..n).map(|i| (i as f64 - h) * self.step).collect()
    }

    fn output_len(&self) -> usize {
        self.kernel_len - self.weight_len + 1
    }

    /// `K[f(s)]` on the extended grid from `f_{t_k}(s)`.
    pub fn kernel_sum(&self, ft: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.kernel_len];
        for ((row, tau), f) in self.phi.iter().zip(&self.tau).zip(ft) {
            let a = tau * f;
            if a == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(row) {
                *o += a * v;
            }
        }
        out
    }

    /// `K[f(s)](x)` at an arbitrary point.
    pub fn kernel_at(&self, ft: &[f64], x: f64) -> f64 {
        let mut acc = Neumaier::default();
        for ((&t, tau), f) in self.t_grid.iter().zip(&self.tau).zip(ft) {
            acc.add(tau * f * t * self.kappa.eval(t * x));
        }
        acc.value()
    }

    /// `W[f(s)]` on [`Self::x_grid`] by FFT convolution.
    pub fn majorant(&self, ft: &[f64]) -> Vec<f64> {
        let k = self.kernel_sum(ft);
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_len];
        for (b, v) in buf.iter_mut().zip(&k) {
            *b = Complex::new(v.abs(), 0.0);
        }
        self.forward.process(&mut buf);
        for (b, w) in buf.iter_mut().zip(&self.weight_hat) {
            *b *= w;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.fft_len as f64;
        let off = self.weight_len - 1;
        (0..self.output_len()).map(|i| (buf[off + i].re * scale).max(0.0)).collect()
    }

    /// `W[f(s)](x)` by direct convolution with `K` evaluated pointwise.
    pub fn majorant_direct(&self, ft: &[f64], targets: &[f64]) -> Vec<f64> {
        let half_w = (self.weight_len / 2) as f64;
        targets
            .iter()
            .map(|&x| {
                let mut acc = Neumaier::default();
                for (q, w) in self.conv_weights.iter().enumerate() {
                    let u = (q as f64 - half_w) * self.step;
                    acc.add(w * self.kernel_at(ft, x - u).abs());
                }
                acc.value()
            })
            .collect()
    }

    /// Linear interpolation of `W` samples; 0 outside the grid.
    pub fn interpolate(&self, w: &[f64], x: f64) -> f64 {
        let h = (w.len() / 2) as f64;
        let u = x / self.step + h;
        if u < 0.0 || u > (w.len() - 1) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(w.len() - 2);
        let f = u - i as f64;
        w[i] * (1.0 - f) + w[i + 1] * f
    }

    /// `sum_{+-,+-} W(+-r +- s)`.
    pub fn four_fold(&self, w: &[f64], r: f64, s: f64) -> f64 {
        self.interpolate(w, r + s) + self.interpolate(w, r - s) + self.interpolate(w, -r + s) + self.interpolate(w, -r - s)
    }

    /// `mu~_d` masses on the output grid.
    pub fn line_masses(&self, d: f64) -> Vec<f64> {
        let xs = self.x_grid();
        let n = xs.len();
        xs.iter()
            .enumerate()
            .map(|(i, x)| {
                let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                end * self.step * (1.0 + x.abs()).powf(d - 1.0)
            })
            .collect()
    }
}

/// `W[f(s)]` at `x_targets` with `f_t(s)` interpolated from the family.
pub fn majorant_w(engine: &MajorantEngine, fam: &TimeFamily, s: f64, x_targets: &[f64]) -> Result<Vec<f64>> {
    if fam.t_grid() != engine.t_grid() {
        return Err(Error::Domain("family and majorant use different t grids".into()));
    }
    let ft: Vec<f64> = fam.profiles().iter().map(|p| p.eval(s)).collect();
    Ok(engine.majorant_direct(&ft, x_targets))
}

/// Outcome of a ratio whose denominator may vanish.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ratio {
    pub value: f64,
    pub violation: bool,
}

pub fn safe_ratio(num: f64, den: f64) -> Ratio {
    if den > 0.0 {
        Ratio { value: num / den, violation: false }
    } else if num.abs() <= ZERO_TOLERANCE {
        Ratio { value: 0.0, violation: false }
    } else {
        Ratio { value: f64::INFINITY, violation: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairRatio {
    pub r: f64,
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub max_ratio: f64,
    pub violations: usize,
    pub pairs: Vec<PairRatio>,
}

/// Engines shared by the kernel bound checks of one multiplier.
pub struct BoundSetup {
    pub bank: BilinearBank,
    pub majorant: MajorantEngine,
    pub d: f64,
}

impl BoundSetup {
    /// Probe points on both axes, `t` grid, `w_N`, and a refinement level
    /// halving the majorant step and the frequency panels.
    pub fn new(m: &Multiplier, kappa: &LineKernel, d: f64, probe: &[f64], t_grid: &[f64], weight: MajorantWeight, refine: u32) -> Result<Self> {
        let bank = BilinearBank::new(m, d, probe, probe, t_grid, refine)?;
        let reach = 2.0 * probe.iter().fold(0.0f64, |a, &b| a.max(b));
        let step = DEFAULT_STEP / 2f64.powi(refine as i32);
        let majorant = MajorantEngine::new(kappa, t_grid, weight, reach + step, step)?;
        Ok(Self { bank, majorant, d })
    }
}

/// `|K(r,s)[f(s)]|` against `sum W[f(s)](+-r+-s) / [(1+r)(1+s)]^{(d-1)/2}` on all probe pairs.
pub fn kernel_bound_check(setup: &BoundSetup, fam: &TimeFamily) -> Result<BoundReport> {
    if fam.t_grid() != setup.bank.t_grid() {
        return Err(Error::Domain("family and kernel bank use different t grids".into()));
    }
    let d = setup.d;
    let r = setup.bank.r();
    let s = setup.bank.s();
    let mut pairs = Vec::with_capacity(r.len() * s.len());
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for (j, &sj) in s.iter().enumerate() {
        let ft: Vec<f64> = fam.profiles().iter().map(|p| p.eval(sj)).collect();
        let w = setup.majorant.majorant(&ft);
        for (i, &ri) in r.iter().enumerate() {
            let lhs = setup.bank.kernel(i, j, &ft).abs();
            let rhs = setup.majorant.four_fold(&w, ri, sj) / ((1.0 + ri) * (1.0 + sj)).powf((d - 1.0) / 2.0);
            let q = safe_ratio(lhs, rhs);
            if q.violation {
                violations += 1;
            } else {
                max_ratio = max_ratio.max(q.value);
            }
            pairs.push(PairRatio { r: ri, s: sj, lhs, rhs, ratio: q.value });
        }
    }
    Ok(BoundReport { max_ratio, violations, pairs })
}

/// Nonnegative majorant profiles `Ef`, `sum_m S_m f` and `Hf`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub e: RadialProfile,
    pub s: RadialProfile,
    pub h: RadialProfile,
}

impl Decomposition {
    pub fn total(&self) -> RadialProfile {
        let v = self.e.values().iter().zip(self.s.values()).zip(self.h.values()).map(|((a, b), c)| a + b + c).collect();
        self.e.with_values(v).expect("same grid")
    }
}

/// Majorant engine reaching every `+-r+-s` on the family's grid.
pub fn decomposition_engine(kappa: &LineKernel, fam: &TimeFamily, weight: MajorantWeight, refine: u32) -> Result<MajorantEngine> {
    let step = DEFAULT_STEP / 2f64.powi(refine as i32);
    MajorantEngine::new(kappa, fam.t_grid(), weight, 2.0 * fam.grid().hi() + step, step)
}

/// `E`, `sum_m S_m` and `H` on the family's grid, integrating `s` over its nodes.
pub fn split_ehs(engine: &MajorantEngine, fam: &TimeFamily) -> Result<Decomposition> {
    if fam.t_grid() != engine.t_grid() {
        return Err(Error::Domain("family and majorant use different t grids".into()));
    }
    let d = fam.d();
    let grid = fam.grid();
    let nodes = grid.nodes();
    let masses = grid.measure_weights(d);
    let n = nodes.len();
    let damp: Vec<f64> = nodes.iter().map(|r| (1.0 + r).powf(-(d - 1.0) / 2.0)).collect();
    let mut e = vec![Neumaier::default(); n];
    let mut s_acc = vec![Neumaier::default(); n];
    let mut h = vec![Neumaier::default(); n];
    for j in 0..n {
        let ft = fam.at_node(j);
        if ft.iter().all(|&v| v == 0.0) {
            continue;
        }
        let w = engine.majorant(&ft);
        let sj = nodes[j];
        let block = DyadicBlock::containing(sj);
        let base = masses[j] * damp[j];
        for i in 0..n {
            let ri = nodes[i];
            let v = base * damp[i] * engine.four_fold(&w, ri, sj);
            if sj > 4.0 * ri {
                e[i].add(v);
            }
            if sj < ri / 4.0 {
                h[i].add(v);
            }
            if block.in_outer(ri) {
                s_acc[i].add(v);
            }
        }
    }
    let z = RadialProfile::zeros(grid.clone(), d)?;
    let collect = |acc: Vec<Neumaier>| z.with_values(acc.iter().map(|a| a.value()).collect());
    Ok(Decomposition { e: collect(e)?, s: collect(s_acc)?, h: collect(h)? })
}

/// Ratios of the three proposition conclusions for one family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropositionRatios {
    pub h: f64,
    pub s: f64,
    pub e: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropositionReport {
    pub a_pq: f64,
    pub a_p_inf: f64,
    pub families: Vec<PropositionRatios>,
    pub max_h: f64,
    pub max_s: f64,
    pub max_e: f64,
    pub violations: usize,
}

/// `||Hf||_{p,q} / (A(p,q) ||f||_{L^{p,inf}(B)})` and the `S`, `E` analogues
/// against `A(p,inf) ||f||_{L^{p,q}(B)}`, for every family.
pub fn proposition_checks(kappa: &LineKernel, d: f64, e: LorentzExponents, suite: &[TimeFamily], weight: MajorantWeight, refine: u32) -> Result<PropositionReport> {
    e.require_primal_range(d)?;
    let a_pq = compute_a(kappa, d, e)?.value;
    let a_p_inf = compute_a(kappa, d, LorentzExponents::weak(e.p())?)?.value;
    let weak = LorentzExponents::weak(e.p())?;
    let mut families = Vec::with_capacity(suite.len());
    let mut violations = 0;
    let mut engine: Option<MajorantEngine> = None;
    for fam in suite {
        if engine.as_ref().map_or(true, |en| en.t_grid() != fam.t_grid()) {
            engine = Some(decomposition_engine(kappa, fam, weight, refine)?);
        }
        let parts = split_ehs(engine.as_ref().expect("engine"), fam)?;
        let b = fam.b_norm();
        let fb_weak = b.lorentz_norm(weak);
        let fb = b.lorentz_norm(e);
        let rh = safe_ratio(parts.h.lorentz_norm(e), a_pq * fb_weak);
        let rs = safe_ratio(parts.s.lorentz_norm(e), a_p_inf * fb);
        let re = safe_ratio(parts.e.lorentz_norm(e), a_p_inf * fb);
        violations += [rh, rs, re].iter().filter(|r| r.violation).count();
        families.push(PropositionRatios { h: rh.value, s: rs.value, e: re.value });
    }
    let max = |f: fn(&PropositionRatios) -> f64| families.iter().map(f).filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    Ok(PropositionReport { a_pq, a_p_inf, max_h: max(|r| r.h), max_s: max(|r| r.s), max_e: max(|r| r.e), families, violations })
}

/// Suite maxima of the three bounds on `W` (their constants).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WChainReport {
    /// `||(1+|.|)^{-(d-1)/2} W||_{L^{p,q}(mu~_d)} / (A(p,q) |f(s)|_B)`.
    pub lorentz: f64,
    /// `||W||_{L^1(R)} / (A(p,inf) |f(s)|_B)`.
    pub l1: f64,
    /// `||(1+|.|)^{-(d-1)/2} W||_{L^sigma(mu~_d)} / (A(p,inf) |f(s)|_B)`, `sigma = 1.3 p`.
    pub sigma: f64,
    pub violations: usize,
}

/// Bounds on `W[f(s)]` at the family nodes `s_nodes`.
pub fn w_chain_check(engine: &MajorantEngine, fam: &TimeFamily, e: LorentzExponents, a_pq: f64, a_p_inf: f64, s_nodes: &[usize]) -> Result<WChainReport> {
    let d = fam.d();
    let xs = engine.x_grid();
    let masses = engine.line_masses(d);
    let plain: Vec<f64> = masses.iter().zip(&xs).map(|(m, x)| m / (1.0 + x.abs()).powf(d - 1.0)).collect();
    let damp: Vec<f64> = xs.iter().map(|x| (1.0 + x.abs()).powf(-(d - 1.0) / 2.0)).collect();
    let tau = trapezoid_weights(fam.t_grid());
    let sigma = 1.3 * e.p();
    let mut out = WChainReport { lorentz: 0.0, l1: 0.0, sigma: 0.0, violations: 0 };
    for &j in s_nodes {
        let ft = fam.at_node(j);
        let b: f64 = ft.iter().zip(&tau).map(|(f, w)| f.abs() * w).sum();
        let w = engine.majorant(&ft);
        let weighted: Vec<f64> = w.iter().zip(&damp).map(|(a, b)| a * b).collect();
        let checks = [
            safe_ratio(lorentz_norm_atoms(&weighted, &masses, e), a_pq * b),
            safe_ratio(lp_norm_atoms(&w, &plain, 1.0), a_p_inf * b),
            safe_ratio(lp_norm_atoms(&weighted, &masses, sigma), a_p_inf * b),
        ];
        for (slot, c) in [&mut out.lorentz, &mut out.l1, &mut out.sigma].into_iter().zip(checks) {
            if c.violation {
                out.violations += 1;
            } else {
                *slot = slot.max(c.value);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_shape() {
        let eta = CutoffFunction;
        assert_eq!(eta.eval(0.125), 0.0);
        assert_eq!(eta.eval(8.0), 0.0);
        for i in 0..=100 {
            let x = 0.25 + 3.75 * i as f64 / 100.0;
            assert_eq!(eta.eval(x), 1.0);
        }
    }

    #[test]
    fn weight_properties() {
        let w = MajorantWeight::default();
        assert_eq!(w.eval(0.0), 1.0);
        assert_eq!(w.eval(3.0), w.eval(-3.0));
        assert!(w.eval(2.0) < w.eval(1.0));
        assert!(MajorantWeight::new(1.0).is_err());
    }

    #[test]
    fn dyadic_blocks() {
        for s in [0.3, 1.0, 1.999, 2.0, 63.9, 64.0] {
            let b = DyadicBlock::containing(s);
            assert!(b.in_inner(s), "s={s}");
            assert!(b.in_outer(s));
        }
        assert_eq!(DyadicBlock::containing(2.0).m, 1);
        assert_eq!(blocks_between(0.5, 64.0).len(), 8);
    }

    #[test]
    fn zero_ratio_convention() {
        assert_eq!(safe_ratio(0.0, 0.0).value, 0.0);
        assert!(safe_ratio(1.0, 0.0).violation);
        assert_eq!(safe_ratio(1.0, 2.0).value, 0.5);
    }

    #[test]
    fn fft_length_is_smooth() {
        assert_eq!(smooth_fft_len(7), 8);
        assert_eq!(smooth_fft_len(4161), 4320);
    }
}
