//! Power-weight measures and Lorentz `L^{p,q}` quasi-norms.
//!
//! Norms use `(int_0^inf [t^{1/p} f*(t)]^q dt/t)^{1/q}` (no `p^{1/q}` factor).

use crate::error::{check_dimension, Error, Result};
use crate::grid::RadialGrid;
use crate::quadrature::Neumaier;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Ratio of boundary to peak magnitude above which a norm is flagged as truncated.
pub const TAIL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// `r^{d-1} dr` on `(0, R]`.
    HalfLinePower,
    /// `(1+|x|)^{d-1} dx` on `[-R, R]`.
    LineShiftedPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeasure {
    pub kind: MeasureKind,
    pub d: f64,
    pub radius: f64,
}

impl WeightedMeasure {
    pub fn new(kind: MeasureKind, d: f64, radius: f64) -> Result<Self> {
        check_dimension(d)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("truncation radius must be positive and finite, got {radius}")));
        }
        Ok(Self { kind, d, radius })
    }

    pub fn half_line(d: f64, radius: f64) -> Result<Self> {
        Self::new(MeasureKind::HalfLinePower, d, radius)
    }

    pub fn line(d: f64, radius: f64) -> Result<Self> {
        Self::new(MeasureKind::LineShiftedPower, d, radius)
    }

    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            MeasureKind::HalfLinePower => (0.0, self.radius),
            MeasureKind::LineShiftedPower => (-self.radius, self.radius),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self.kind {
            MeasureKind::HalfLinePower => x.powf(self.d - 1.0),
            MeasureKind::LineShiftedPower => (1.0 + x.abs()).powf(self.d - 1.0),
        }
    }

    /// Measure of `[a, b]` clipped to the domain, in closed form.
    pub fn interval(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.domain();
        let a = a.max(lo);
        let b = b.min(hi);
        if b <= a {
            return 0.0;
        }
        match self.kind {
            MeasureKind::HalfLinePower => power_increment(a, b - a, self.d),
            MeasureKind::LineShiftedPower => {
                if a >= 0.0 {
                    power_increment(1.0 + a, b - a, self.d)
                } else if b <= 0.0 {
                    power_increment(1.0 - b, b - a, self.d)
                } else {
                    power_increment(1.0, -a, self.d) + power_increment(1.0, b, self.d)
                }
            }
        }
    }

    pub fn total(&self) -> f64 {
        let (lo, hi) = self.domain();
        self.interval(lo, hi)
    }
}

/// `((a+h)^d - a^d) / d` without cancellation.
fn power_increment(a: f64, h: f64, d: f64) -> f64 {
    if a <= 0.0 {
        return h.powf(d) / d;
    }
    a.powf(d) * (d * (h / a).ln_1p()).exp_m1() / d
}

/// Lorentz exponents; `q = f64::INFINITY` selects the weak-type norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzExponents {
    p: f64,
    q: f64,
}

impl LorentzExponents {
    /// `1 <= p < inf`, `1 <= q <= inf`.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::Range(format!("p must satisfy 1 <= p < inf, got {p}")));
        }
        if q.is_nan() || q < 1.0 {
            return Err(Error::Range(format!("q must satisfy 1 <= q <= inf, got {q}")));
        }
        Ok(Self { p, q })
    }

    pub fn weak(p: f64) -> Result<Self> {
        Self::new(p, f64::INFINITY)
    }

    pub fn strong(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn q_is_infinite(&self) -> bool {
        self.q.is_infinite()
    }

    pub fn p_dual(&self) -> f64 {
        conjugate(self.p)
    }

    pub fn q_dual(&self) -> f64 {
        conjugate(self.q)
    }

    /// `1 < p < 2d/(d+1)`.
    pub fn in_primal_range(&self, d: f64) -> bool {
        self.p > 1.0 && self.p < 2.0 * d / (d + 1.0)
    }

    /// `p' > 2d/(d-1)`.
    pub fn dual_range(&self, d: f64) -> bool {
        self.p > 1.0 && self.p_dual() > 2.0 * d / (d - 1.0)
    }

    /// Checks `1 < p < 2d/(d+1)` and names the violated bound.
    pub fn require_primal_range(&self, d: f64) -> Result<()> {
        let upper = 2.0 * d / (d + 1.0);
        if !(self.p > 1.0) {
            return Err(Error::Range(format!("p must be > 1 (got {})", self.p)));
        }
        if !(self.p < upper) {
            return Err(Error::Range(format!("p must be < 2d/(d+1) = {} (got {})", fmt_bound(upper), self.p)));
        }
        Ok(())
    }
}

pub(crate) fn fmt_bound(x: f64) -> String {
    for den in 1..=12u32 {
        let num = x * den as f64;
        if (num - num.round()).abs() < 1e-12 {
            return if den == 1 { format!("{}", num.round()) } else { format!("{}/{}", num.round(), den) };
        }
    }
    format!("{x}")
}

pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

impl Serialize for LorentzExponents {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("LorentzExponents", 2)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("q", &ExtendedReal(self.q))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for LorentzExponents {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            p: f64,
            q: ExtendedReal,
        }
        let raw = Raw::deserialize(de)?;
        LorentzExponents::new(raw.p, raw.q.0).map_err(serde::de::Error::custom)
    }
}

/// A real number that may be `+inf`, serialized as the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedReal(pub f64);

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() && self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(x) => Ok(ExtendedReal(x)),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(ExtendedReal(f64::INFINITY)),
            Raw::Text(t) => t.parse::<f64>().map(ExtendedReal).map_err(serde::de::Error::custom),
        }
    }
}

/// Samples of a function with the measure mass attached to each sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    masses: Vec<f64>,
    measure: WeightedMeasure,
}

impl SampledFunction {
    /// Masses are the exact measures of the midpoint cells of the grid.
    pub fn new(grid: Vec<f64>, values: Vec<f64>, measure: WeightedMeasure) -> Result<Self> {
        validate(&grid, &values, &measure)?;
        let (lo, hi) = measure.domain();
        let n = grid.len();
        let mut masses = Vec::with_capacity(n);
        for i in 0..n {
            let a = if i == 0 { grid[0].max(lo) } else { 0.5 * (grid[i - 1] + grid[i]) };
            let b = if i + 1 == n { grid[n - 1].min(hi) } else { 0.5 * (grid[i] + grid[i + 1]) };
            masses.push(measure.interval(a, b));
        }
        Ok(Self { grid, values, masses, measure })
    }

    /// Masses supplied by the caller (quadrature weights times density).
    pub fn with_masses(grid: Vec<f64>, values: Vec<f64>, masses: Vec<f64>, measure: WeightedMeasure) -> Result<Self> {
        validate(&grid, &values, &measure)?;
        if masses.len() != grid.len() || masses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::Domain("masses must be finite, nonnegative and match the grid".into()));
        }
        Ok(Self { grid, values, masses, measure })
    }

    /// Node values on a radial grid with Gauss masses for `mu_d`.
    pub fn on_radial_grid(grid: &RadialGrid, values: Vec<f64>, d: f64) -> Result<Self> {
        let measure = WeightedMeasure::half_line(d, grid.hi())?;
        let masses = grid.measure_weights(d);
        Self::with_masses(grid.nodes().to_vec(), values, masses, measure)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn measure(&self) -> &WeightedMeasure {
        &self.measure
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// True when the magnitude at the truncation boundary is not negligible.
    pub fn tail_flag(&self) -> bool {
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return false;
        }
        let last = self.values.last().map(|v| v.abs()).unwrap_or(0.0);
        let first = match self.measure.kind {
            MeasureKind::LineShiftedPower => self.values.first().map(|v| v.abs()).unwrap_or(0.0),
            MeasureKind::HalfLinePower => 0.0,
        };
        last.max(first) > TAIL_TOLERANCE * peak
    }
}

fn validate(grid: &[f64], values: &[f64], measure: &WeightedMeasure) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::Domain(format!("grid has {} points but {} values", grid.len(), values.len())));
    }
    if grid.is_empty() {
        return Err(Error::Domain("empty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("grid must be strictly increasing".into()));
    }
    let (lo, hi) = measure.domain();
    if grid[0] < lo || *grid.last().unwrap() > hi {
        return Err(Error::Domain("grid leaves the measure's domain".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("samples must be finite".into()));
    }
    Ok(())
}

/// `mu{ |f| > s }` for the piecewise-linear interpolant of the samples.
pub fn distribution_function(f: &SampledFunction, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("level must be positive, got {s}")));
    }
    let m = &f.measure;
    let g = &f.grid;
    let v = &f.values;
    let mut total = Neumaier::default();
    if g.len() == 1 {
        return Ok(0.0);
    }
    for i in 0..g.len() - 1 {
        let (x0, x1) = (g[i], g[i + 1]);
        let (a, b) = (v[i], v[i + 1]);
        for (lo, hi) in [above(a, b, s), above(-a, -b, s)].into_iter().flatten() {
            total.add(m.interval(x0 + (x1 - x0) * lo, x0 + (x1 - x0) * hi));
        }
    }
    Ok(total.value())
}

/// Sub-interval of `[0, 1]` where `a + (b - a) u > s`.
fn above(a: f64, b: f64, s: f64) -> Option<(f64, f64)> {
    match (a > s, b > s) {
        (true, true) => Some((0.0, 1.0)),
        (false, false) => None,
        (true, false) => Some((0.0, (a - s) / (a - b))),
        (false, true) => Some(((s - a) / (b - a), 1.0)),
    }
}

/// Result of a truncated norm computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Set when the function is not negligible at the truncation boundary.
    pub tail_flag: bool,
}

pub fn lorentz_norm(f: &SampledFunction, e: LorentzExponents) -> NormEstimate {
    NormEstimate { value: lorentz_norm_atoms(&f.values, &f.masses, e), tail_flag: f.tail_flag() }
}

/// Lorentz norm of the step function with atoms `(|values[i]|, masses[i])`.
pub fn lorentz_norm_atoms(values: &[f64], masses: &[f64], e: LorentzExponents) -> f64 {
    let mut atoms: Vec<(f64, f64)> = values
        .iter()
        .zip(masses)
        .map(|(v, m)| (v.abs(), *m))
        .filter(|(v, m)| *v > 0.0 && *m > 0.0)
        .collect();
    if atoms.is_empty() {
        return 0.0;
    }
    atoms.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let p = e.p;
    let q = e.q;
    let mut t = 0.0;
    if q.is_infinite() {
        let mut best = 0.0f64;
        let mut i = 0;
        while i < atoms.len() {
            let v = atoms[i].0;
            while i < atoms.len() && atoms[i].0 == v {
                t += atoms[i].1;
                i += 1;
            }
            best = best.max(v * t.powf(1.0 / p));
        }
        return best;
    }
    let a = q / p;
    let mut acc = Neumaier::default();
    for (v, m) in atoms {
        let incr = if t == 0.0 { m.powf(a) } else { t.powf(a) * (a * (m / t).ln_1p()).exp_m1() };
        acc.add(v.powf(q) * incr);
        t += m;
    }
    (p / q * acc.value()).powf(1.0 / q)
}

/// Direct `L^p` norm `(sum |v_i|^p m_i)^{1/p}` in index order.
pub fn lp_norm_atoms(values: &[f64], masses: &[f64], p: f64) -> f64 {
    let mut acc = Neumaier::default();
    for (v, m) in values.iter().zip(masses) {
        acc.add(v.abs().powf(p) * m);
    }
    acc.value().powf(1.0 / p)
}

pub fn lp_norm(f: &SampledFunction, p: f64) -> f64 {
    lp_norm_atoms(&f.values, &f.masses, p)
}

/// `||(1+r)^{-(d-1)/2}||_{L^{p',1}(mu_d)}` restricted to `(0, R]` for each `R`.
pub fn power_weight_norm_scan(d: f64, p_dual: f64, radii: &[f64]) -> Result<Vec<f64>> {
    check_dimension(d)?;
    if !(p_dual > 1.0) || !p_dual.is_finite() {
        return Err(Error::Range(format!("p' must be finite and > 1, got {p_dual}")));
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("radii must be positive and increasing".into()));
    }
    let e = LorentzExponents::new(p_dual, 1.0)?;
    radii
        .iter()
        .map(|&radius| {
            let grid = weight_grid(radius)?;
            let values = grid.nodes().iter().map(|r| (1.0 + r).powf(-(d - 1.0) / 2.0)).collect();
            let f = SampledFunction::on_radial_grid(&grid, values, d)?;
            Ok(lorentz_norm(&f, e).value)
        })
        .collect()
}

fn weight_grid(radius: f64) -> Result<RadialGrid> {
    let mut edges = vec![0.0];
    let mut x = 1e-3f64.min(radius / 2.0);
    while x < radius {
        edges.push(x);
        x *= 1.05;
    }
    edges.push(radius);
    RadialGrid::from_edges(edges, 8)
}
