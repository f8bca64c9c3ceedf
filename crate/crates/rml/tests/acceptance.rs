use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rml::cli::{verify, ExperimentConfig, VerifyKind};
use rml::decomposition::DyadicBlock;
use rml::grid::RadialGrid;
use rml::hankel::{hankel_roundtrip_error, hankel_transform, RadialProfile};
use rml::lorentz::*;
use rml::multipliers::*;
use rml::special::gamma;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian(grid: Arc<RadialGrid>, d: f64) -> RadialProfile {
    RadialProfile::from_fn(grid, d, |r| (-r * r / 2.0).exp()).unwrap()
}

fn roundtrip(points: usize, order: usize, d: f64) -> f64 {
    let grid = Arc::new(RadialGrid::uniform(0.0, 30.0, points / order, order).unwrap());
    hankel_roundtrip_error(&gaussian(grid, d)).unwrap()
}

fn c1_self_inversion() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2.0, 3.0, 4.0] {
        let (coarse, fine) = (roundtrip(2048, 2, d), roundtrip(4096, 2, d));
        ok &= fine <= 1e-6 && coarse / fine >= 4.0;
        parts.push(format!("d={d}: {coarse:.2e} -> {fine:.2e}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed <= 60.0;
    let diag = roundtrip(4096, 16, 3.0);
    check(ok, format!("{}; {elapsed:.1} s; order-16 grid at d=3: {diag:.2e}", parts.join(", ")))
}

fn c2_fixed_point() -> Outcome {
    let grid = Arc::new(RadialGrid::uniform(0.0, 14.0, 56, 16).unwrap());
    let rho: Vec<f64> = (0..=800).map(|i| 0.01 * i as f64).collect();
    let mut worst = 0.0f64;
    for d in [2.0, 3.0] {
        let out = hankel_transform(&gaussian(grid.clone(), d), &rho).unwrap();
        for (r, v) in rho.iter().zip(out) {
            worst = worst.max((v - (-r * r / 2.0).exp()).abs());
        }
    }
    check(worst <= 1e-8, format!("max error {worst:.2e}"))
}

fn c3_lorentz_closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_ind = 0.0f64;
    for _ in 0..50 {
        let p = rng.gen_range(1.01..8.0);
        let q = if rng.gen_bool(0.2) { f64::INFINITY } else { rng.gen_range(1.0..10.0) };
        let mu = rng.gen_range(0.01..100.0);
        let cut: f64 = rng.gen_range(0.1..0.9);
        let got = lorentz_norm_atoms(&[1.0, 1.0, 0.0], &[cut * mu, (1.0 - cut) * mu, 3.0], LorentzExponents::new(p, q).unwrap());
        let want = if q.is_infinite() { mu.powf(1.0 / p) } else { (p / q).powf(1.0 / q) * mu.powf(1.0 / p) };
        worst_ind = worst_ind.max((got / want - 1.0).abs());
    }
    let grid = RadialGrid::uniform(0.0, 12.0, 240, 16).unwrap();
    let mut worst_lp = 0.0f64;
    for d in [2.0, 3.0, 4.0] {
        for (p, s) in [(1.2, 1.0), (2.0, 0.5), (3.5, 2.0)] {
            let vals: Vec<f64> = grid.nodes().iter().map(|r| (-s * r * r).exp()).collect();
            let f = SampledFunction::on_radial_grid(&grid, vals, d).unwrap();
            let got = lorentz_norm(&f, LorentzExponents::strong(p).unwrap()).value;
            let want = (gamma(d / 2.0) / (2.0 * (p * s).powf(d / 2.0))).powf(1.0 / p);
            worst_lp = worst_lp.max((got / want - 1.0).abs());
        }
    }
    check(worst_ind <= 1e-6 && worst_lp <= 1e-8, format!("indicator rel {worst_ind:.2e}, strong vs L^p rel {worst_lp:.2e}"))
}

fn c4_power_weight() -> Outcome {
    let radii = [1e2, 1e3, 1e4];
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2.0, 3.0] {
        let edge = 2.0 * d / (d - 1.0);
        let conv = power_weight_norm_scan(d, edge + 0.5, &radii).unwrap();
        let div = power_weight_norm_scan(d, edge - 0.5, &radii).unwrap();
        let contraction = (conv[2] - conv[1]).abs() / (conv[1] - conv[0]).abs();
        let growth = div[2] / div[0];
        ok &= contraction < 1.0 && growth >= 2.0;
        parts.push(format!("d={d}: convergent {:.4} {:.4} {:.4} (difference ratio {contraction:.3}), divergent growth {growth:.2}", conv[0], conv[1], conv[2]));
    }
    check(ok, parts.join("; "))
}

fn c5_decay() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut diag = Vec::new();
    for d in [2.0, 3.0] {
        for lambda in [0.5, 1.0] {
            let want = bochner_riesz_decay_exponent(d, lambda);
            let wide = bochner_riesz(BochnerRieszParams::with_cutoff(lambda, CutoffWidths::new(0.4, 0.5).unwrap())).unwrap();
            let fit = decay_exponent_fit(&kernel_of(&wide, d).unwrap(), (10.0, 200.0)).unwrap();
            ok &= (fit - want).abs() <= 0.15;
            parts.push(format!("({d},{lambda}) {fit:.3}/{want}"));
            let default = bochner_riesz(BochnerRieszParams::new(lambda)).unwrap();
            let fit_default = decay_exponent_fit(&kernel_of(&default, d).unwrap(), (10.0, 200.0)).unwrap();
            diag.push(format!("({d},{lambda}) {fit_default:.3}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed <= 120.0;
    check(ok, format!("cutoff width 0.4: {}; {elapsed:.1} s; default cutoff: {}", parts.join(", "), diag.join(", ")))
}

fn run_verify(kind: VerifyKind, cfg: ExperimentConfig) -> (bool, serde_json::Value, Vec<String>) {
    let cfg = cfg.resolve(&format!("verify {}", kind.name()));
    match verify(kind, &cfg) {
        Ok(o) => (o.passed(), o.result, o.failures),
        Err(e) => (false, serde_json::Value::Null, vec![e.to_string()]),
    }
}

fn c6_critical() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, lambda) in [(2.0, 0.5), (3.0, 0.5)] {
        let (pass, r, f) = run_verify(VerifyKind::Critical, ExperimentConfig { d, lambda, ..Default::default() });
        ok &= pass;
        parts.push(format!("({d},{lambda}) weak {} strong {} {f:?}", r["weak_growth"], r["strong_growth"]));
    }
    check(ok, parts.join("; "))
}

fn c7_kernel_bound() -> Outcome {
    let (pass, r, f) = run_verify(VerifyKind::Bound, ExperimentConfig::default());
    check(pass, format!("max ratio {} stability {} {f:?}", r["max_ratio"], r["stability"]))
}

fn c8_partition() -> Outcome {
    let mut probes = 0usize;
    let mut bad = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in -12..=12 {
        let block = DyadicBlock::new(m);
        let (a, b) = block.outer();
        let mut radii = vec![a, b, a.next_up(), a.next_down(), b.next_up(), b.next_down(), 0.5 * a, 2.0 * b];
        radii.extend((0..200).map(|_| rng.gen_range(0.0..4.0 * b)));
        for r in radii.into_iter().filter(|r| *r > 0.0) {
            probes += 1;
            let [h, s, e] = block.pieces(r);
            let membership = [r < a, r >= a && r < b, r >= b];
            if h + s + e != 1 || [h == 1, s == 1, e == 1] != membership {
                bad += 1;
            }
        }
    }
    check(bad == 0, format!("{probes} probes, {bad} mismatches"))
}

fn c9_propositions() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2.0, 3.0] {
        for q in [1.2, f64::INFINITY] {
            let (pass, r, f) = run_verify(VerifyKind::Propositions, ExperimentConfig { d, p: 1.2, q: ExtendedReal(q), ..Default::default() });
            ok &= pass;
            parts.push(format!("(d={d},q={q}) stability {} {f:?}", r["stability"]));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed <= 600.0;
    check(ok, format!("{}; {elapsed:.1} s", parts.join("; ")))
}

fn c10_dual_and_chain() -> Outcome {
    let (dual_ok, dual, df) = run_verify(VerifyKind::Dual, ExperimentConfig::default());
    let (chain_ok, chain, cf) = run_verify(VerifyKind::Chain, ExperimentConfig::default());
    let domination: u64 = chain["levels"].as_array().map(|l| l.iter().filter_map(|r| r["domination_failures"].as_u64()).sum()).unwrap_or(u64::MAX);
    check(
        dual_ok && chain_ok && domination == 0,
        format!("dual stability {} {df:?}; chain stability {} {cf:?}; domination failures {domination}", dual["stability"], chain["stability"]),
    )
}

fn c11_equivalence() -> Outcome {
    let (pass, r, f) = run_verify(VerifyKind::Equivalence, ExperimentConfig::default());
    check(
        pass,
        format!("band {} rank correlations {} {} {f:?}", r["band_width"], r["rank_correlation_hankel_norm"], r["rank_correlation_m_lower"]),
    )
}

fn c12_determinism() -> Outcome {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, extra) in [("critical", vec!["--d", "3", "--lambda", "0.5"]), ("bound", vec![])] {
        let first = dir.join(format!("{kind}.json"));
        let second = dir.join(format!("{kind}_rerun.json"));
        let run = |args: Vec<&str>| Command::new(env!("CARGO_BIN_EXE_rml")).args(args).status().unwrap();
        let mut args = vec!["verify", kind, "--output", first.to_str().unwrap()];
        args.extend(&extra);
        let s1 = run(args);
        let s2 = run(vec!["verify", kind, "--config", first.to_str().unwrap(), "--output", second.to_str().unwrap()]);
        let same = std::fs::read(&first).unwrap() == std::fs::read(&second).unwrap();
        ok &= s1.success() && s2.success() && same;
        parts.push(format!("{kind}: identical={same}"));
    }
    check(ok, parts.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("hankel self-inversion", c1_self_inversion),
        ("gaussian fixed point", c2_fixed_point),
        ("lorentz closed forms", c3_lorentz_closed_forms),
        ("power-weight threshold", c4_power_weight),
        ("bochner-riesz decay", c5_decay),
        ("critical-exponent dichotomy", c6_critical),
        ("kernel estimate", c7_kernel_bound),
        ("decomposition partition", c8_partition),
        ("proposition ratios", c9_propositions),
        ("dual inequality and chain", c10_dual_and_chain),
        ("equivalence band", c11_equivalence),
        ("determinism", c12_determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
