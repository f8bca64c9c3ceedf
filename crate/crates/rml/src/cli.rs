//! Command-line front end: `bessel`, `kernel`, `norms` and `verify`.
//!
//! Exit codes: 0 pass, 1 assertion failure, 2 configuration error,
//! 3 numerical resolution error.

use crate::decomposition::{kernel_bound_check, proposition_checks, BoundSetup, MajorantWeight};
use crate::error::{check_dimension, Error, Result};
use crate::lorentz::{lorentz_norm, ExtendedReal, LorentzExponents};
use crate::multipliers::{envelope_points, kernel_of, one_dim_kernel, Multiplier, MultiplierConfig};
use crate::operators::{default_operator_grid, geometric_t_grid};
use crate::probe::{chain_check, compute_a, critical_exponent_scan, default_profile_suite, dual_inequality_check, equivalence_csv, equivalence_scan, rank_correlation, FamilySuite, DEFAULT_BASIS_SIZE};
use crate::special::KernelB;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::fmt::Write as _;

/// Relative change allowed between successive refinement levels.
pub const STABILITY_TOLERANCE: f64 = 0.10;
/// Multiplicative width of the equivalence band.
pub const BAND_WIDTH: f64 = 100.0;
pub const RANK_CORRELATION_MIN: f64 = 0.9;
/// Per-doubling tolerance of the critical-exponent dichotomy.
pub const CRITICAL_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VerifyKind {
    Bound,
    Propositions,
    Chain,
    Equivalence,
    Critical,
    Dual,
}

impl VerifyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bound => "bound",
            Self::Propositions => "propositions",
            Self::Chain => "chain",
            Self::Equivalence => "equivalence",
            Self::Critical => "critical",
            Self::Dual => "dual",
        }
    }
}

/// Parameters of every command; unset per-command defaults are filled by [`ExperimentConfig::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: f64,
    pub p: f64,
    pub q: ExtendedReal,
    pub lambda: f64,
    pub lambdas: Vec<f64>,
    pub multiplier: Option<MultiplierConfig>,
    pub n_weight: f64,
    pub seed: u64,
    pub families: Option<usize>,
    pub t_points: Option<usize>,
    pub probe_points: usize,
    pub refine: u32,
    pub doublings: usize,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub window: [f64; 2],
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 2.0,
            p: 1.2,
            q: ExtendedReal(f64::INFINITY),
            lambda: 1.0,
            lambdas: vec![0.5, 0.75, 1.0, 1.5],
            multiplier: None,
            n_weight: 10.0,
            seed: 1,
            families: None,
            t_points: None,
            probe_points: 64,
            refine: 1,
            doublings: 3,
            from: 0.0,
            to: 10.0,
            points: 101,
            window: [10.0, 200.0],
        }
    }
}

impl ExperimentConfig {
    /// Accepts a bare config or a report carrying it under `"config"`.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        let inner = match v.get("config") {
            Some(c) if v.get("command").is_some() => c.clone(),
            _ => v,
        };
        serde_json::from_value(inner).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    /// Materializes the per-command defaults.
    pub fn resolve(mut self, command: &str) -> Self {
        let bound = command == "verify bound";
        self.families.get_or_insert(if bound { 5 } else { 20 });
        self.t_points.get_or_insert(if bound { 128 } else { 64 });
        if self.multiplier.is_none() {
            self.multiplier = Some(MultiplierConfig::bochner_riesz(self.lambda));
        }
        self
    }

    pub fn exponents(&self) -> Result<LorentzExponents> {
        LorentzExponents::new(self.p, self.q.0)
    }

    pub fn multiplier(&self) -> Result<Multiplier> {
        match &self.multiplier {
            Some(c) => c.build(),
            None => MultiplierConfig::bochner_riesz(self.lambda).build(),
        }
    }

    fn families(&self) -> usize {
        self.families.unwrap_or(20)
    }

    fn t_points(&self) -> usize {
        self.t_points.unwrap_or(64)
    }

    fn t_grid(&self, level: u32) -> Vec<f64> {
        geometric_t_grid(self.t_points() << level)
    }

    /// Range predicates of `command`, checked before any computation.
    pub fn validate(&self, command: &str) -> Result<()> {
        check_dimension(self.d)?;
        let config = |msg: &str| Err(Error::Config(msg.into()));
        if self.families() == 0 {
            return config("families must be >= 1");
        }
        if self.t_points() < 2 {
            return config("t_points must be >= 2");
        }
        match command {
            "bessel" => {
                if !(self.from >= 0.0) || !(self.to >= self.from) || self.points == 0 {
                    return config("need 0 <= from <= to and points >= 1");
                }
                if self.from < self.to && self.points < 2 {
                    return config("points must be >= 2 when from < to");
                }
            }
            "kernel" => {
                self.multiplier()?;
            }
            "norms" => {
                self.multiplier()?;
                self.exponents()?;
            }
            "verify bound" => {
                self.multiplier()?;
                MajorantWeight::new(self.n_weight)?;
                if self.probe_points == 0 || self.probe_points > 64 {
                    return config("probe_points must lie in [1, 64]");
                }
            }
            "verify propositions" => {
                self.multiplier()?;
                MajorantWeight::new(self.n_weight)?;
                self.exponents()?.require_primal_range(self.d)?;
            }
            "verify chain" | "verify dual" | "verify equivalence" => {
                let e = self.exponents()?;
                e.require_primal_range(self.d)?;
                if e.q() < e.p() {
                    return Err(Error::Range(format!("q must be >= p = {} (got {})", e.p(), e.q())));
                }
                if command == "verify equivalence" {
                    if self.lambdas.len() < 2 || self.lambdas.iter().any(|l| !(*l > 0.0 && *l <= 2.0)) {
                        return Err(Error::Range("lambdas: at least two values in (0, 2] are required".into()));
                    }
                } else {
                    self.multiplier()?;
                }
            }
            "verify critical" => {
                let p_c = crate::probe::critical_exponent(self.d, self.lambda);
                let upper = 2.0 * self.d / (self.d + 1.0);
                if !(p_c >= 1.0 && p_c < upper) {
                    return Err(Error::Range(format!("p_c = 2d/(d+1+2 lambda) = {p_c} must lie in [1, {upper})")));
                }
                if self.doublings == 0 {
                    return config("doublings must be >= 1");
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Computed record and failed assertions of one `verify` run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyOutcome {
    pub result: Value,
    pub failures: Vec<String>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs() / a.abs()
    }
}

/// Largest relative change between successive levels, per column.
fn level_stability(levels: &[Vec<f64>]) -> f64 {
    levels.windows(2).flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| rel_change(*a, *b))).fold(0.0, f64::max)
}

fn check_finite(failures: &mut Vec<String>, name: &str, v: f64) {
    if !v.is_finite() {
        failures.push(format!("{name} is not finite ({v})"));
    }
}

fn check_stable(failures: &mut Vec<String>, name: &str, s: f64) {
    if !(s <= STABILITY_TOLERANCE) {
        failures.push(format!("{name} changes by {s:.4} under refinement (> {STABILITY_TOLERANCE})"));
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn verify(kind: VerifyKind, cfg: &ExperimentConfig) -> Result<VerifyOutcome> {
    let command = format!("verify {}", kind.name());
    cfg.validate(&command)?;
    let mut failures = Vec::new();
    let d = cfg.d;
    let levels: Vec<u32> = (0..=cfg.refine).collect();
    let result = match kind {
        VerifyKind::Bound => {
            let m = cfg.multiplier()?;
            let kappa = one_dim_kernel(&m);
            let weight = MajorantWeight::new(cfg.n_weight)?;
            let probe: Vec<f64> = (1..=cfg.probe_points).map(|x| x as f64).collect();
            let mut table = Vec::new();
            let mut violations = 0;
            for &l in &levels {
                let tg = cfg.t_grid(l);
                let suite = FamilySuite::random(default_operator_grid(), d, DEFAULT_BASIS_SIZE, cfg.families(), cfg.seed, tg.clone())?;
                let setup = BoundSetup::new(&m, &kappa, d, &probe, &tg, weight, l)?;
                let mut row = Vec::new();
                for fam in suite.families()? {
                    let rep = kernel_bound_check(&setup, &fam)?;
                    violations += rep.violations;
                    row.push(rep.max_ratio);
                }
                table.push(row);
            }
            let max_ratio = table.iter().flatten().copied().fold(0.0, f64::max);
            let stability = level_stability(&table);
            check_finite(&mut failures, "max_ratio", max_ratio);
            check_stable(&mut failures, "max_ratio", stability);
            if violations > 0 {
                failures.push(format!("{violations} pairs with RHS = 0 and LHS > 0"));
            }
            json!({ "max_ratio_per_level": table, "max_ratio": max_ratio, "stability": stability, "violations": violations })
        }
        VerifyKind::Propositions => {
            let m = cfg.multiplier()?;
            let kappa = one_dim_kernel(&m);
            let weight = MajorantWeight::new(cfg.n_weight)?;
            let e = cfg.exponents()?;
            let mut reports = Vec::new();
            for &l in &levels {
                let suite = FamilySuite::random(default_operator_grid(), d, DEFAULT_BASIS_SIZE, cfg.families(), cfg.seed, cfg.t_grid(l))?;
                reports.push(proposition_checks(&kappa, d, e, &suite.families()?, weight, l)?);
            }
            let maxima: Vec<Vec<f64>> = reports.iter().map(|r| vec![r.max_h, r.max_s, r.max_e]).collect();
            for (i, name) in ["H", "S", "E"].iter().enumerate() {
                let col: Vec<Vec<f64>> = maxima.iter().map(|r| vec![r[i]]).collect();
                check_finite(&mut failures, &format!("max {name}-ratio"), col[0][0]);
                check_stable(&mut failures, &format!("max {name}-ratio"), level_stability(&col));
            }
            let violations: usize = reports.iter().map(|r| r.violations).sum();
            if violations > 0 {
                failures.push(format!("{violations} ratios with zero denominator"));
            }
            json!({ "levels": reports.iter().map(|r| json!({ "a_pq": r.a_pq, "a_p_inf": r.a_p_inf, "max_h": r.max_h, "max_s": r.max_s, "max_e": r.max_e })).collect::<Vec<_>>(), "stability": level_stability(&maxima), "violations": violations })
        }
        VerifyKind::Chain => {
            let m = cfg.multiplier()?;
            let e = cfg.exponents()?;
            let suite = default_profile_suite(d, cfg.families(), cfg.seed)?;
            let mut reports = Vec::new();
            for &l in &levels {
                reports.push(chain_check(&m, d, e, &suite, &cfg.t_grid(l), l)?);
            }
            let cols: Vec<Vec<f64>> = reports.iter().map(|r| vec![r.t_lower, r.m_lower]).collect();
            let stability = level_stability(&cols);
            let first = &reports[0];
            for (name, v) in [("A", first.a), ("hankel_norm", first.hankel_norm), ("T_lower", first.t_lower), ("M_lower", first.m_lower)] {
                check_finite(&mut failures, name, v);
            }
            check_stable(&mut failures, "T_lower/M_lower", stability);
            let dom: usize = reports.iter().map(|r| r.domination_failures).sum();
            if dom > 0 {
                failures.push(format!("{dom} suite members with ||M f|| < ||T f||"));
            }
            json!({ "levels": reports.iter().map(to_value).collect::<Vec<_>>(), "stability": stability })
        }
        VerifyKind::Dual => {
            let m = cfg.multiplier()?;
            let e = cfg.exponents()?;
            let mut reports = Vec::new();
            for &l in &levels {
                let suite = FamilySuite::random(default_operator_grid(), d, DEFAULT_BASIS_SIZE, cfg.families(), cfg.seed, cfg.t_grid(l))?;
                reports.push(dual_inequality_check(&m, d, e, &suite, l)?);
            }
            let cols: Vec<Vec<f64>> = reports.iter().map(|r| vec![r.max_ratio]).collect();
            let stability = level_stability(&cols);
            check_finite(&mut failures, "max_ratio", reports[0].max_ratio);
            check_stable(&mut failures, "max_ratio", stability);
            let violations: usize = reports.iter().map(|r| r.violations).sum();
            if violations > 0 {
                failures.push(format!("{violations} families with zero denominator"));
            }
            json!({ "levels": reports.iter().map(|r| json!({ "a": r.a, "max_ratio": r.max_ratio })).collect::<Vec<_>>(), "stability": stability })
        }
        VerifyKind::Equivalence => {
            let e = cfg.exponents()?;
            let suite = default_profile_suite(d, cfg.families(), cfg.seed)?;
            let rows = equivalence_scan(&cfg.lambdas, d, e, &suite, &cfg.t_grid(0), 0)?;
            let live: Vec<_> = rows.iter().filter(|r| !r.vacuous).collect();
            let ratios: Vec<f64> = live.iter().map(|r| r.ratio).collect();
            let band = if ratios.is_empty() { f64::INFINITY } else { ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min) };
            let neg_lambda: Vec<f64> = live.iter().map(|r| -r.lambda).collect();
            let rho_h = rank_correlation(&neg_lambda, &live.iter().map(|r| r.hankel_norm).collect::<Vec<_>>());
            let rho_m = rank_correlation(&neg_lambda, &live.iter().map(|r| r.m_lower).collect::<Vec<_>>());
            if live.len() < 2 {
                failures.push("fewer than two non-vacuous rows".into());
            }
            if !(band <= BAND_WIDTH) {
                failures.push(format!("band width {band:.3} exceeds {BAND_WIDTH}"));
            }
            if !(rho_h >= RANK_CORRELATION_MIN) {
                failures.push(format!("hankel_norm rank correlation with decreasing lambda {rho_h:.3} < {RANK_CORRELATION_MIN}"));
            }
            if !(rho_m >= RANK_CORRELATION_MIN) {
                failures.push(format!("M_lower rank correlation with decreasing lambda {rho_m:.3} < {RANK_CORRELATION_MIN}"));
            }
            json!({ "rows": rows.iter().map(to_value).collect::<Vec<_>>(), "csv": equivalence_csv(&rows), "band_width": band, "rank_correlation_hankel_norm": rho_h, "rank_correlation_m_lower": rho_m })
        }
        VerifyKind::Critical => {
            let rep = critical_exponent_scan(cfg.lambda, d, cfg.doublings)?;
            for (k, g) in rep.weak_growth.iter().enumerate() {
                if !((g - 1.0).abs() <= CRITICAL_TOLERANCE) {
                    failures.push(format!("L^(p_c,inf) growth {g:.4} at doubling {} is not within {CRITICAL_TOLERANCE} of 1", k + 1));
                }
            }
            for (k, g) in rep.strong_growth.iter().enumerate() {
                if !(*g >= 1.0 + CRITICAL_TOLERANCE) {
                    failures.push(format!("L^(p_c,p_c) growth {g:.4} at doubling {} is below {}", k + 1, 1.0 + CRITICAL_TOLERANCE));
                }
            }
            to_value(&rep)
        }
    };
    Ok(VerifyOutcome { result, failures })
}

/// Report with the resolved config and a content hash over everything else.
pub fn build_report(command: &str, cfg: &ExperimentConfig, result: Value, failures: &[String]) -> Value {
    let mut body = json!({
        "command": command,
        "config": to_value(cfg),
        "result": result,
        "passed": failures.is_empty(),
        "failures": failures,
    });
    let hash = content_hash(&body);
    body.as_object_mut().expect("object").insert("hash".into(), Value::String(hash));
    body
}

/// SHA-256 of the compact JSON serialization.
pub fn content_hash(v: &Value) -> String {
    let text = serde_json::to_string(v).expect("serializable");
    let digest = Sha256::digest(text.as_bytes());
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").expect("string write");
    }
    s
}

pub fn bessel_csv(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate("bessel")?;
    let kb = KernelB::new(cfg.d)?;
    let mut out = String::from("x,B_d\n");
    let n = cfg.points;
    for i in 0..n {
        let x = if n == 1 { cfg.from } else { cfg.from + (cfg.to - cfg.from) * i as f64 / (n - 1) as f64 };
        writeln!(out, "{x},{}", kb.eval(x)).expect("string write");
    }
    Ok(out)
}

/// `(r, kappa, envelope_fit)` rows and the fitted `(exponent, log C)`.
pub struct KernelTable {
    pub csv: String,
    pub fit: Option<(f64, f64)>,
    pub envelope: Vec<(f64, f64)>,
}

pub fn kernel_table(cfg: &ExperimentConfig) -> Result<KernelTable> {
    cfg.validate("kernel")?;
    let m = cfg.multiplier()?;
    let kernel = kernel_of(&m, cfg.d)?;
    let grid = kernel.profile.grid();
    let [r0, r1] = cfg.window;
    if r1 > grid.hi() {
        return Err(Error::Resolution { requested: r1, max_admissible: grid.hi() });
    }
    let r = grid.nodes();
    let v = kernel.profile.values();
    let fit = if m.is_zero() {
        None
    } else {
        let exponent = crate::multipliers::fit_decay(r, v, (r0, r1))?;
        let idx: Vec<usize> = (0..r.len()).filter(|&i| r[i] >= r0 && r[i] <= r1).collect();
        let pts = envelope_points(r, v, &idx);
        let c = pts.iter().map(|(x, y)| y + exponent * x).sum::<f64>() / pts.len() as f64;
        Some((exponent, c))
    };
    let idx: Vec<usize> = (0..r.len()).filter(|&i| r[i] >= r0 && r[i] <= r1).collect();
    let envelope = if m.is_zero() { vec![] } else { envelope_points(r, v, &idx) };
    let mut csv = String::from("r,kappa,envelope_fit\n");
    for (x, k) in r.iter().zip(v) {
        let e = match fit {
            Some((g, c)) => (c - g * x.ln()).exp(),
            None => 0.0,
        };
        writeln!(csv, "{x},{k},{e}").expect("string write");
    }
    Ok(KernelTable { csv, fit, envelope })
}

/// Log-log polyline of `points` (already logarithmic) with an optional fitted line.
pub fn loglog_svg(points: &[(f64, f64)], fit: Option<(f64, f64)>) -> String {
    let (w, h, pad) = (640.0, 480.0, 40.0);
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    if points.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let (x0, x1) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-300) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0).max(1e-300) * (h - 2.0 * pad);
    s.push_str("<polyline fill=\"none\" stroke=\"black\" points=\"");
    for (x, y) in points {
        write!(s, "{:.2},{:.2} ", sx(*x), sy(*y)).expect("string write");
    }
    s.push_str("\"/>\n");
    if let Some((g, c)) = fit {
        writeln!(s, "<line stroke=\"red\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>", sx(x0), sy(c - g * x0), sx(x1), sy(c - g * x1)).expect("string write");
    }
    s.push_str("</svg>\n");
    s
}

pub fn norms_report(cfg: &ExperimentConfig) -> Result<Value> {
    cfg.validate("norms")?;
    let m = cfg.multiplier()?;
    let e = cfg.exponents()?;
    let a = compute_a(&one_dim_kernel(&m), cfg.d, e)?;
    let kernel = kernel_of(&m, cfg.d)?;
    let h = lorentz_norm(&kernel.profile.to_sampled()?, e);
    Ok(json!({ "A": a.value, "A_tail_flag": a.tail_flag, "hankel_norm": h.value, "hankel_tail_flag": h.tail_flag }))
}

#[derive(Parser, Debug)]
#[command(name = "rml", version, about = "Radial multipliers, Hankel transforms and Lorentz norm probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate B_d(x) as CSV.
    Bessel(Flags),
    /// Kernel of a multiplier with its fitted decay envelope.
    Kernel(Flags),
    /// A(p,q) and the Lorentz norm of the kernel.
    Norms(Flags),
    /// Run a check and emit a JSON report.
    Verify {
        kind: VerifyKind,
        #[command(flatten)]
        flags: Flags,
    },
}

fn parse_extended(s: &str) -> std::result::Result<f64, String> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|e| e.to_string()),
    }
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON config, or a previous report.
    #[arg(long)]
    config: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    d: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_parser = parse_extended)]
    q: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Exponent N of the weight (1+|x|)^-N.
    #[arg(long = "n")]
    n_weight: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    families: Option<usize>,
    #[arg(long)]
    t_points: Option<usize>,
    #[arg(long)]
    probe_points: Option<usize>,
    #[arg(long)]
    refine: Option<u32>,
    #[arg(long)]
    doublings: Option<usize>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    window: Option<Vec<f64>>,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    svg: Option<String>,
}

impl Flags {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { c.$f = v.clone(); } )* };
        }
        over!(d, p, lambda, lambdas, n_weight, seed, probe_points, refine, doublings, from, to, points);
        if let Some(q) = self.q {
            c.q = ExtendedReal(q);
        }
        if self.families.is_some() {
            c.families = self.families;
        }
        if self.t_points.is_some() {
            c.t_points = self.t_points;
        }
        if let Some(w) = &self.window {
            c.window = [w[0], w[1]];
        }
        if self.lambda.is_some() && c.multiplier.as_ref().is_some_and(|m| m.lambda.is_some()) {
            c.multiplier = None;
        }
        Ok(c)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Resolution { .. } | Error::InsufficientData(_) => 3,
        _ => 2,
    }
}

fn emit(path: &Option<String>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn set_threads() {
    if let Some(n) = std::env::var("RML_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    set_threads();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Bessel(f) => {
            let cfg = f.config()?;
            emit(&f.output, &bessel_csv(&cfg)?)?;
            Ok(0)
        }
        Command::Kernel(f) => {
            let cfg = f.config()?.resolve("kernel");
            let table = kernel_table(&cfg)?;
            emit(&f.output, &table.csv)?;
            if let Some(path) = &f.svg {
                std::fs::write(path, loglog_svg(&table.envelope, table.fit))?;
            }
            Ok(0)
        }
        Command::Norms(f) => {
            let cfg = f.config()?.resolve("norms");
            let result = norms_report(&cfg)?;
            let report = build_report("norms", &cfg, result, &[]);
            emit(&f.output, &format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")))?;
            Ok(0)
        }
        Command::Verify { kind, flags } => {
            let command = format!("verify {}", kind.name());
            let cfg = flags.config()?.resolve(&command);
            let outcome = verify(kind, &cfg)?;
            let report = build_report(&command, &cfg, outcome.result.clone(), &outcome.failures);
            emit(&flags.output, &format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")))?;
            Ok(if outcome.passed() { 0 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip_through_report() {
        let cfg = ExperimentConfig::default().resolve("verify chain");
        let report = build_report("verify chain", &cfg, json!({}), &[]);
        let text = serde_json::to_string(&report).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn hash_ignores_nothing_but_itself() {
        let cfg = ExperimentConfig::default().resolve("verify critical");
        let a = build_report("verify critical", &cfg, json!({"x": 1}), &[]);
        let b = build_report("verify critical", &cfg, json!({"x": 2}), &[]);
        assert_ne!(a["hash"], b["hash"]);
        assert_eq!(a["hash"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn stability_measure() {
        assert_eq!(level_stability(&[vec![1.0, 2.0], vec![1.05, 2.4]]), 0.19999999999999996);
        assert_eq!(rel_change(0.0, 0.0), 0.0);
    }

    #[test]
    fn range_predicates() {
        let cfg = ExperimentConfig { p: 1.5, ..Default::default() }.resolve("verify chain");
        let err = cfg.validate("verify chain").unwrap_err();
        assert!(err.to_string().contains("p must be < 2d/(d+1) = 4/3"), "{err}");
        let cfg = ExperimentConfig { d: 0.5, ..Default::default() };
        assert!(cfg.validate("bessel").unwrap_err().to_string().contains("d must exceed 1"));
    }
}
