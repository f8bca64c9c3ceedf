//! Gauss-Legendre rules, compensated sums, barycentric interpolation and
//! breakpoint-aware panel construction.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Points of the fixed per-panel rule.
pub const PANEL_RULE_POINTS: usize = 15;

/// Graded edges placed on each side of a power-type singular point.
const GRADING_LEVELS: i32 = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_pair(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre_pair(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mut s = Neumaier::default();
        for (x, w) in self.mapped(a, b) {
            s.add(w * f(x));
        }
        s.value()
    }
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The fixed 15-point panel rule.
pub fn panel_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::legendre(PANEL_RULE_POINTS))
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = Neumaier::default();
    for x in it {
        s.add(x);
    }
    s.value()
}

/// Barycentric weights for interpolation on `nodes`.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= nodes[j] - nodes[k];
            }
        }
    }
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut w {
        *v /= scale;
    }
    w
}

/// Lagrange basis values at `x` written into `out`.
#[inline]
pub fn lagrange_basis(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    let mut total = 0.0;
    for (j, (&xj, &wj)) in nodes.iter().zip(bary).enumerate() {
        let diff = x - xj;
        if diff == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j] = 1.0;
            return;
        }
        let t = wj / diff;
        out[j] = t;
        total += t;
    }
    let inv = 1.0 / total;
    out.iter_mut().for_each(|v| *v *= inv);
}

/// Barycentric interpolation of `values` at `x`.
#[inline]
pub fn barycentric_eval(nodes: &[f64], bary: &[f64], values: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xj, &wj), &fj) in nodes.iter().zip(bary).zip(values) {
        let diff = x - xj;
        if diff == 0.0 {
            return fj;
        }
        let t = wj / diff;
        num += t * fj;
        den += t;
    }
    num / den
}

/// Kind of non-smooth point of an integrand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Singularity {
    /// Jump or kink: a panel edge is enough.
    Edge,
    /// `|x - a|^e` behaviour with non-integer `e`: geometrically graded edges.
    Power(f64),
    /// Smooth but flat-to-all-orders point (cutoff transitions): graded edges.
    Graded,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Breakpoint {
    pub at: f64,
    pub kind: Singularity,
}

impl Breakpoint {
    pub fn edge(at: f64) -> Self {
        Self { at, kind: Singularity::Edge }
    }

    pub fn scaled(self, t: f64) -> Self {
        Self { at: self.at * t, kind: self.kind }
    }
}

/// Panel edges on `[lo, hi]`: breakpoints, graded refinement toward power
/// singularities, phase points `k * phase_step` and a maximum width.
pub fn panel_edges(lo: f64, hi: f64, phase_step: Option<f64>, breakpoints: &[Breakpoint], max_width: f64) -> Vec<f64> {
    let mut edges = Vec::with_capacity(64);
    edges.push(lo);
    edges.push(hi);
    let mut anchors: Vec<f64> = breakpoints.iter().map(|b| b.at).filter(|&a| a > lo && a < hi).collect();
    anchors.push(lo);
    anchors.push(hi);
    anchors.sort_by(|a, b| a.total_cmp(b));
    for b in breakpoints {
        if b.at < lo || b.at > hi {
            continue;
        }
        edges.push(b.at);
        let graded = match b.kind {
            Singularity::Edge => false,
            Singularity::Power(e) => !(e.fract() == 0.0 && e >= 0.0),
            Singularity::Graded => true,
        };
        if graded {
            let gap = anchors
                .windows(2)
                .filter(|w| w[0] <= b.at && b.at <= w[1])
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            let delta = if b.at == 0.0 { 0.5 * gap } else { (0.05 * b.at.abs()).min(0.5 * gap) };
            for k in 0..GRADING_LEVELS {
                let off = delta * 0.25f64.powi(k);
                for g in [b.at - off, b.at + off] {
                    if g > lo && g < hi {
                        edges.push(g);
                    }
                }
            }
        }
    }
    if let Some(step) = phase_step {
        if step.is_finite() && step > 0.0 {
            let k0 = (lo / step).floor() as i64 + 1;
            let k1 = (hi / step).ceil() as i64;
            for k in k0..k1 {
                let e = k as f64 * step;
                if e > lo && e < hi {
                    edges.push(e);
                }
            }
        }
    }
    edges.sort_by(|a, b| a.total_cmp(b));
    let tol = 1e-15 * hi.abs().max(lo.abs()).max(1.0);
    edges.dedup_by(|a, b| (*a - *b).abs() <= tol);
    if max_width.is_finite() && max_width > 0.0 {
        let mut out = Vec::with_capacity(edges.len());
        out.push(edges[0]);
        for w in edges.windows(2) {
            let len = w[1] - w[0];
            let pieces = (len / max_width).ceil().max(1.0) as usize;
            for j in 1..pieces {
                out.push(w[0] + len * j as f64 / pieces as f64);
            }
            out.push(w[1]);
        }
        out
    } else {
        edges
    }
}

/// Integral of `f` over `[lo, hi]` with the panel rule on `panel_edges`.
pub fn integrate_panels<F: FnMut(f64) -> f64>(edges: &[f64], mut f: F) -> f64 {
    let rule = panel_rule();
    let mut s = Neumaier::default();
    for w in edges.windows(2) {
        for (x, wt) in rule.mapped(w[0], w[1]) {
            s.add(wt * f(x));
        }
    }
    s.value()
}
