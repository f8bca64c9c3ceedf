//! Numerical probes of the norm equivalences: `A(p,q)`, the chain
//! `A <~ ||H_d m|| <~ ||T_m|| <~ ||M_m||`, the two-sided bound for the
//! maximal operator, the Bochner-Riesz critical exponent and the dual
//! inequality for time families.
//!
//! Operator norms are suite lower bounds, never certified values.

use crate::error::{check_dimension, Error, Result};
use crate::grid::{RadialGrid, DEFAULT_ORDER};
use crate::hankel::RadialProfile;
use crate::lorentz::{lorentz_norm, ExtendedReal, lorentz_norm_atoms, LorentzExponents, NormEstimate};
use crate::multipliers::{bochner_riesz, kernel_of, kernel_on, one_dim_kernel, BochnerRieszParams, LineKernel, Multiplier, MultiplierConfig};
use crate::operators::{band_limited_basis, check_t_grid, default_operator_grid, family_from_basis, focusing_profile, geometric_t_grid, trapezoid_weights, FamilyCoefficients, ScaleEngine, TimeFamily, DEFAULT_T_POINTS};
use crate::quadrature::Neumaier;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const DEFAULT_BASIS_SIZE: usize = 8;
pub const DEFAULT_FAMILIES: usize = 20;

/// Radii of the focusing profiles added to every profile suite.
pub const FOCUSING_RADII: [f64; 3] = [8.0, 16.0, 32.0];

/// Parameters shared by the probes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub d: f64,
    pub exponents: Vec<LorentzExponents>,
    pub multipliers: Vec<MultiplierConfig>,
    pub seed: u64,
    pub t_points: usize,
    pub families: usize,
    pub basis_size: usize,
    pub refine: u32,
}

impl ProbeConfig {
    pub fn new(d: f64, exponents: Vec<LorentzExponents>, multipliers: Vec<MultiplierConfig>) -> Self {
        Self { d, exponents, multipliers, seed: 0, t_points: DEFAULT_T_POINTS, families: DEFAULT_FAMILIES, basis_size: DEFAULT_BASIS_SIZE, refine: 0 }
    }

    /// `d > 1`, `1 < p < 2d/(d+1)`, `p <= q <= inf`, nonempty lists.
    pub fn validate(&self) -> Result<()> {
        check_dimension(self.d)?;
        if self.exponents.is_empty() || self.multipliers.is_empty() {
            return Err(Error::Config("at least one exponent pair and one multiplier are required".into()));
        }
        for e in &self.exponents {
            e.require_primal_range(self.d)?;
            if e.q() < e.p() {
                return Err(Error::Range(format!("q must be >= p = {}, got {}", e.p(), e.q())));
            }
        }
        if self.t_points < 2 || self.families == 0 || self.basis_size == 0 {
            return Err(Error::Config("t_points >= 2, families >= 1 and basis_size >= 1 are required".into()));
        }
        for m in &self.multipliers {
            m.build()?;
        }
        Ok(())
    }

    pub fn t_grid(&self) -> Vec<f64> {
        geometric_t_grid(self.t_points << self.refine)
    }
}

/// `A(p,q) = ||(1+|x|)^{-(d-1)/2} kappa||_{L^{p,q}(mu~_d)}`.
pub fn compute_a(kappa: &LineKernel, d: f64, e: LorentzExponents) -> Result<NormEstimate> {
    Ok(lorentz_norm(&kappa.weighted_sampled(d)?, e))
}

/// `A(p,q)` with the kernel restricted to `|x| <= radius`.
pub fn compute_a_truncated(kappa: &LineKernel, d: f64, e: LorentzExponents, radius: f64) -> Result<f64> {
    let f = kappa.weighted_sampled(d)?;
    let (v, m): (Vec<f64>, Vec<f64>) = f.grid().iter().zip(f.values().iter().zip(f.masses())).filter(|(x, _)| x.abs() <= radius).map(|(_, (v, m))| (*v, *m)).unzip();
    Ok(lorentz_norm_atoms(&v, &m, e))
}

/// `A(p,q)` for `m` from its one-dimensional kernel on the default line grid.
pub fn compute_a_for(m: &Multiplier, d: f64, e: LorentzExponents) -> Result<NormEstimate> {
    check_dimension(d)?;
    compute_a(&one_dim_kernel(m), d, e)
}

/// Random band-limited combinations of the spectral basis followed by focusing profiles.
pub fn profile_suite(grid: Arc<RadialGrid>, d: f64, basis_size: usize, count: usize, seed: u64) -> Result<Vec<RadialProfile>> {
    let basis = band_limited_basis(grid.clone(), d, basis_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count + FOCUSING_RADII.len());
    for _ in 0..count {
        let c: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut v = vec![0.0; grid.len()];
        for (cj, phi) in c.iter().zip(&basis) {
            for (x, p) in v.iter_mut().zip(phi.values()) {
                *x += cj * p;
            }
        }
        out.push(basis[0].with_values(v)?);
    }
    for r0 in FOCUSING_RADII {
        out.push(focusing_profile(grid.clone(), d, r0)?);
    }
    Ok(out)
}

/// Families `f_t = sum_j c_j(t) phi_j` over one spectral basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilySuite {
    pub basis: Vec<RadialProfile>,
    pub coefficients: Vec<FamilyCoefficients>,
    pub t_grid: Vec<f64>,
}

impl FamilySuite {
    /// Family `i` uses the coefficient seed `seed + i`.
    pub fn random(grid: Arc<RadialGrid>, d: f64, basis_size: usize, count: usize, seed: u64, t_grid: Vec<f64>) -> Result<Self> {
        check_t_grid(&t_grid)?;
        let basis = band_limited_basis(grid, d, basis_size)?;
        let coefficients = (0..count as u64).map(|i| FamilyCoefficients::random(basis_size, seed.wrapping_add(i))).collect();
        Ok(Self { basis, coefficients, t_grid })
    }

    pub fn with_t_grid(&self, t_grid: Vec<f64>) -> Result<Self> {
        check_t_grid(&t_grid)?;
        Ok(Self { t_grid, ..self.clone() })
    }

    pub fn scaled(&self, c: f64) -> Self {
        let coefficients = self.coefficients.iter().map(|k| FamilyCoefficients { cosine: k.cosine.iter().map(|row| row.iter().map(|a| c * a).collect()).collect() }).collect();
        Self { coefficients, ..self.clone() }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn family(&self, i: usize) -> Result<TimeFamily> {
        family_from_basis(&self.basis, &self.coefficients[i], &self.t_grid)
    }

    pub fn families(&self) -> Result<Vec<TimeFamily>> {
        (0..self.len()).map(|i| self.family(i)).collect()
    }

    /// `int_I T_{m(./t)} f_t dt` for every family, from one pass over the basis.
    pub fn averaged_dual(&self, m: &Multiplier, d: f64, refine: u32) -> Result<Vec<RadialProfile>> {
        let grid = self.basis[0].grid().clone();
        let engine = ScaleEngine::new(m, d, grid.clone(), refine)?;
        let refs: Vec<&RadialProfile> = self.basis.iter().collect();
        let spectra = engine.spectra(&refs)?;
        let tau = trapezoid_weights(&self.t_grid);
        let tables: Vec<Vec<Vec<f64>>> = self.coefficients.iter().map(|c| c.table(&self.t_grid)).collect();
        let n = grid.len();
        let mut acc = vec![vec![Neumaier::default(); n]; self.len()];
        for (k, &t) in self.t_grid.iter().enumerate() {
            let out = engine.apply_spectra(t, &spectra);
            for (a, table) in acc.iter_mut().zip(&tables) {
                for (cj, o) in table[k].iter().zip(&out) {
                    let w = tau[k] * cj;
                    for (x, v) in a.iter_mut().zip(o) {
                        x.add(w * v);
                    }
                }
            }
        }
        acc.into_iter().map(|a| self.basis[0].with_values(a.iter().map(|x| x.value()).collect())).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    /// Exact quadrature.
    pub a: f64,
    /// Exact quadrature.
    pub hankel_norm: f64,
    /// Lower bound.
    pub t_lower: f64,
    /// Lower bound.
    pub m_lower: f64,
    pub tail_flag: bool,
    /// Suite members with `||M f||_{p'} < ||T f||_{p'}`.
    pub domination_failures: usize,
}

/// `A(p,q)`, `||H_d m||_{L^{p,q}(mu_d)}` and the suite lower bounds of
/// `||T_m||_{L^p -> L^{p,q}}` and `||M_m||_{L^{p',q'} -> L^{p'}}`.
/// `t_grid` must start at 1.
pub fn chain_check(m: &Multiplier, d: f64, e: LorentzExponents, suite: &[RadialProfile], t_grid: &[f64], refine: u32) -> Result<ChainReport> {
    e.require_primal_range(d)?;
    check_t_grid(t_grid)?;
    if suite.is_empty() {
        return Err(Error::Domain("profile suite is empty".into()));
    }
    if t_grid[0] != 1.0 {
        return Err(Error::Domain("t grid must contain t = 1 as its first node".into()));
    }
    let a = compute_a_for(m, d, e)?;
    let kernel = kernel_of(m, d)?;
    let h = kernel.profile.to_sampled()?;
    let hankel = lorentz_norm(&h, e);
    let grid = suite[0].grid().clone();
    let engine = ScaleEngine::new(m, d, grid, refine)?;
    let refs: Vec<&RadialProfile> = suite.iter().collect();
    let spectra = engine.spectra(&refs)?;
    let mut t1 = Vec::new();
    let mut sup = vec![vec![0.0f64; suite[0].values().len()]; suite.len()];
    for (k, &t) in t_grid.iter().enumerate() {
        let out = engine.apply_spectra(t, &spectra);
        for (s, o) in sup.iter_mut().zip(&out) {
            for (x, y) in s.iter_mut().zip(o) {
                *x = x.max(y.abs());
            }
        }
        if k == 0 {
            t1 = out;
        }
    }
    let p_dual = e.p_dual();
    let dual = LorentzExponents::new(p_dual, e.q_dual())?;
    let mut t_lower = 0.0f64;
    let mut m_lower = 0.0f64;
    let mut domination_failures = 0;
    for ((f, tf), mf) in suite.iter().zip(&t1).zip(&sup) {
        let tf = f.with_values(tf.clone())?;
        let mf = f.with_values(mf.clone())?;
        let fp = f.lp_norm(e.p());
        if fp > 0.0 {
            t_lower = t_lower.max(tf.lorentz_norm(e) / fp);
        }
        let fd = f.lorentz_norm(dual);
        if fd > 0.0 {
            m_lower = m_lower.max(mf.lp_norm(p_dual) / fd);
        }
        if mf.lp_norm(p_dual) < tf.lp_norm(p_dual) {
            domination_failures += 1;
        }
    }
    Ok(ChainReport { a: a.value, hankel_norm: hankel.value, t_lower, m_lower, tail_flag: a.tail_flag || hankel.tail_flag, domination_failures })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub lambda: f64,
    pub p: f64,
    #[serde(serialize_with = "extended")]
    pub q: f64,
    pub a: f64,
    pub hankel_norm: f64,
    pub t_lower: f64,
    pub m_lower: f64,
    pub ratio: f64,
    pub tail_flag: bool,
    /// `M_lower = 0`: excluded from band assertions.
    pub vacuous: bool,
}

/// `M_lower / ||H_d m^lambda||_{L^{p,q}(mu_d)}` across `lambdas`.
pub fn equivalence_scan(lambdas: &[f64], d: f64, e: LorentzExponents, suite: &[RadialProfile], t_grid: &[f64], refine: u32) -> Result<Vec<EquivalenceRow>> {
    if lambdas.iter().any(|l| !(*l > 0.0 && *l <= 2.0)) {
        return Err(Error::Range("lambda must lie in (0, 2]".into()));
    }
    lambdas
        .iter()
        .map(|&lambda| {
            let m = bochner_riesz(BochnerRieszParams::new(lambda))?;
            let c = chain_check(&m, d, e, suite, t_grid, refine)?;
            let vacuous = c.m_lower == 0.0;
            let ratio = if vacuous || c.hankel_norm == 0.0 { 0.0 } else { c.m_lower / c.hankel_norm };
            Ok(EquivalenceRow { lambda, p: e.p(), q: e.q(), a: c.a, hankel_norm: c.hankel_norm, t_lower: c.t_lower, m_lower: c.m_lower, ratio, tail_flag: c.tail_flag, vacuous })
        })
        .collect()
}

fn extended<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    ExtendedReal(*v).serialize(s)
}

pub const EQUIVALENCE_CSV_HEADER: &str = "lambda,p,q,A,hankel_norm,T_lower,M_lower,ratio,tail_flag";

pub fn equivalence_csv(rows: &[EquivalenceRow]) -> String {
    let mut s = String::from(EQUIVALENCE_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let q = if r.q.is_infinite() { "inf".to_string() } else { format!("{:e}", r.q) };
        s.push_str(&format!("{:e},{:e},{},{:e},{:e},{:e},{:e},{:e},{}\n", r.lambda, r.p, q, r.a, r.hankel_norm, r.t_lower, r.m_lower, r.ratio, r.tail_flag));
    }
    s
}

/// Spearman rank correlation (average ranks for ties).
pub fn rank_correlation(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

pub const CRITICAL_RADIUS: f64 = 800.0;

/// Grid of the critical-exponent scan: `[0, 800]` with panels of width 2.
pub fn critical_grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::uniform(0.0, CRITICAL_RADIUS, 400, DEFAULT_ORDER).expect("critical grid"))
}

/// `p_c = 2d/(d+1+2 lambda)`.
pub fn critical_exponent(d: f64, lambda: f64) -> f64 {
    2.0 * d / (d + 1.0 + 2.0 * lambda)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalReport {
    pub d: f64,
    pub lambda: f64,
    pub p_c: f64,
    pub radii: Vec<f64>,
    pub weak: Vec<f64>,
    pub strong: Vec<f64>,
    /// Successive ratios `norm(2R)/norm(R)`.
    pub weak_growth: Vec<f64>,
    pub strong_growth: Vec<f64>,
}

/// Ball-restricted `L^{p_c,inf}` and `L^{p_c,p_c}` norms of `H_d m^lambda`
/// for `R = 100 * 2^k`, `k <= doublings`.
/// Accepts `1 <= p_c < 2d/(d+1)`.
pub fn critical_exponent_scan(lambda: f64, d: f64, doublings: usize) -> Result<CriticalReport> {
    check_dimension(d)?;
    let p_c = critical_exponent(d, lambda);
    let upper = 2.0 * d / (d + 1.0);
    if !(p_c >= 1.0 && p_c < upper) {
        return Err(Error::Range(format!("p_c = 2d/(d+1+2 lambda) = {p_c} must lie in [1, {upper})")));
    }
    let radii: Vec<f64> = (0..=doublings).map(|k| 100.0 * 2f64.powi(k as i32)).collect();
    if *radii.last().expect("nonempty") > CRITICAL_RADIUS {
        return Err(Error::Resolution { requested: *radii.last().expect("nonempty"), max_admissible: CRITICAL_RADIUS });
    }
    let m = bochner_riesz(BochnerRieszParams::new(lambda))?;
    let kernel = kernel_on(&m, d, critical_grid())?;
    let grid = kernel.profile.grid();
    let masses = grid.measure_weights(d);
    let nodes = grid.nodes();
    let weak_e = LorentzExponents::weak(p_c)?;
    let strong_e = LorentzExponents::strong(p_c)?;
    let mut weak = Vec::new();
    let mut strong = Vec::new();
    for &r in &radii {
        let keep = nodes.iter().take_while(|&&x| x <= r).count();
        let v = &kernel.profile.values()[..keep];
        let w = &masses[..keep];
        weak.push(lorentz_norm_atoms(v, w, weak_e));
        strong.push(lorentz_norm_atoms(v, w, strong_e));
    }
    let growth = |v: &[f64]| v.windows(2).map(|w| w[1] / w[0]).collect::<Vec<_>>();
    Ok(CriticalReport { d, lambda, p_c, weak_growth: growth(&weak), strong_growth: growth(&strong), radii, weak, strong })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualReport {
    pub a: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub violations: usize,
}

/// `||int_I T_{m(./t)} f_t dt||_{L^{p,q}} / (A(p,q) ||int_I |f_t| dt||_{L^p})` over the suite.
pub fn dual_inequality_check(m: &Multiplier, d: f64, e: LorentzExponents, suite: &FamilySuite, refine: u32) -> Result<DualReport> {
    e.require_primal_range(d)?;
    let a = compute_a_for(m, d, e)?.value;
    let lhs = suite.averaged_dual(m, d, refine)?;
    let mut ratios = Vec::with_capacity(suite.len());
    let mut violations = 0;
    for (i, out) in lhs.iter().enumerate() {
        let fam = suite.family(i)?;
        let num = out.lorentz_norm(e);
        let den = a * fam.b_norm().lp_norm(e.p());
        let r = crate::decomposition::safe_ratio(num, den);
        if r.violation {
            violations += 1;
        }
        ratios.push(r.value);
    }
    let max_ratio = ratios.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    Ok(DualReport { a, ratios, max_ratio, violations })
}

/// Operator suite on the default operator grid.
pub fn default_profile_suite(d: f64, count: usize, seed: u64) -> Result<Vec<RadialProfile>> {
    profile_suite(default_operator_grid(), d, DEFAULT_BASIS_SIZE, count, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_basics() {
        assert!((rank_correlation(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 25.0, 100.0]) - 1.0).abs() < 1e-15);
        assert!((rank_correlation(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert!((rank_correlation(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn critical_exponent_range() {
        assert_eq!(critical_exponent(3.0, 0.5), 1.2);
        assert!(critical_exponent_scan(1.5, 3.0, 3).is_err());
        assert!(critical_exponent_scan(0.5, 0.5, 3).is_err());
    }

    #[test]
    fn zero_multiplier_has_zero_a() {
        let e = LorentzExponents::weak(1.2).unwrap();
        assert_eq!(compute_a_for(&Multiplier::zero(), 2.0, e).unwrap().value, 0.0);
    }
}
