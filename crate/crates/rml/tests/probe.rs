use proptest::prelude::*;
use rml::hankel::RadialProfile;
use rml::lorentz::LorentzExponents;
use rml::multipliers::*;
use rml::operators::*;
use rml::probe::*;
use std::sync::OnceLock;

fn br(lambda: f64) -> Multiplier {
    bochner_riesz(BochnerRieszParams::new(lambda)).unwrap()
}

fn e(p: f64, q: f64) -> LorentzExponents {
    LorentzExponents::new(p, q).unwrap()
}

fn suite() -> &'static Vec<RadialProfile> {
    static S: OnceLock<Vec<RadialProfile>> = OnceLock::new();
    S.get_or_init(|| profile_suite(default_operator_grid(), 2.0, 6, 3, 17).unwrap())
}

fn base_chain() -> &'static ChainReport {
    static C: OnceLock<ChainReport> = OnceLock::new();
    C.get_or_init(|| chain_check(&br(1.0), 2.0, e(1.2, 1.2), suite(), &geometric_t_grid(8), 0).unwrap())
}

#[test]
fn a_is_cauchy_above_the_critical_exponent() {
    let kappa = one_dim_kernel(&br(1.0));
    let v: Vec<f64> = [100.0, 200.0, 400.0].iter().map(|&r| compute_a_truncated(&kappa, 2.0, LorentzExponents::weak(1.2).unwrap(), r).unwrap()).collect();
    assert!((v[2] - v[1]).abs() < (v[1] - v[0]).abs() || v[2] == v[1], "{v:?}");
    assert!((v[2] / v[1] - 1.0).abs() < 1e-3, "{v:?}");
}

#[test]
fn a_grows_below_the_critical_exponent() {
    let kappa = one_dim_kernel(&br(0.25));
    let v: Vec<f64> = [100.0, 200.0, 400.0].iter().map(|&r| compute_a_truncated(&kappa, 2.0, e(1.05, 1.05), r).unwrap()).collect();
    assert!(v[1] > v[0] && v[2] > v[1], "{v:?}");
    assert!(v[2] - v[1] >= 0.9 * (v[1] - v[0]), "{v:?}");
}

#[test]
fn zero_multiplier_chain() {
    let c = chain_check(&Multiplier::zero(), 2.0, e(1.2, 1.2), suite(), &geometric_t_grid(4), 0).unwrap();
    assert_eq!((c.a, c.hankel_norm, c.t_lower, c.m_lower), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn chain_values_and_domination() {
    let c = base_chain();
    assert!(c.a > 0.0 && c.hankel_norm > 0.0 && c.t_lower > 0.0 && c.m_lower > 0.0);
    assert!(c.a.is_finite() && c.hankel_norm.is_finite());
    assert_eq!(c.domination_failures, 0);
}

#[test]
fn chain_rejects_bad_inputs() {
    assert!(chain_check(&br(1.0), 2.0, e(1.5, 1.5), suite(), &geometric_t_grid(4), 0).is_err());
    assert!(chain_check(&br(1.0), 2.0, e(1.2, 1.2), suite(), &[1.5, 2.0], 0).is_err());
    assert!(chain_check(&br(1.0), 2.0, e(1.2, 1.2), &[], &geometric_t_grid(4), 0).is_err());
}

#[test]
fn enlarging_the_suite_never_lowers_the_bounds() {
    let small = chain_check(&br(1.0), 2.0, e(1.2, 1.2), &suite()[..2], &geometric_t_grid(8), 0).unwrap();
    let big = base_chain();
    assert!(big.t_lower >= small.t_lower && big.m_lower >= small.m_lower);
}

#[test]
fn chain_ratios_are_scale_invariant() {
    let scaled: Vec<RadialProfile> = suite().iter().map(|f| f.map(|v| -7.5 * v)).collect();
    let c = chain_check(&br(1.0), 2.0, e(1.2, 1.2), &scaled, &geometric_t_grid(8), 0).unwrap();
    let b = base_chain();
    assert!((c.t_lower / b.t_lower - 1.0).abs() <= 1e-10);
    assert!((c.m_lower / b.m_lower - 1.0).abs() <= 1e-10);
}

#[test]
fn chain_is_reproducible() {
    let again = chain_check(&br(1.0), 2.0, e(1.2, 1.2), suite(), &geometric_t_grid(8), 0).unwrap();
    assert_eq!(&again, base_chain());
    assert_eq!(profile_suite(default_operator_grid(), 2.0, 6, 3, 17).unwrap(), *suite());
}

#[test]
fn degenerate_suite_is_vacuous() {
    let zero = RadialProfile::zeros(default_operator_grid(), 2.0).unwrap();
    let rows = equivalence_scan(&[1.0], 2.0, LorentzExponents::weak(1.2).unwrap(), &[zero], &geometric_t_grid(4), 0).unwrap();
    assert!(rows[0].vacuous);
    assert_eq!(rows[0].ratio, 0.0);
    let csv = equivalence_csv(&rows);
    assert!(csv.starts_with(EQUIVALENCE_CSV_HEADER));
    assert!(csv.lines().nth(1).unwrap().contains(",inf,"));
}

#[test]
fn critical_dichotomy() {
    for (d, lambda) in [(2.0, 0.5), (3.0, 0.5)] {
        let r = critical_exponent_scan(lambda, d, 3).unwrap();
        assert!((r.p_c - critical_exponent(d, lambda)).abs() < 1e-15);
        assert!(r.weak_growth.iter().all(|g| (g - 1.0).abs() <= 0.05), "{:?}", r.weak_growth);
        assert!(r.strong_growth.iter().all(|g| *g >= 1.05), "{:?}", r.strong_growth);
    }
    assert_eq!(critical_exponent(3.0, 0.5), 1.2);
    assert!(critical_exponent_scan(0.5, 2.0, 4).is_err());
}

#[test]
fn dual_check_of_zero_family() {
    let fam = FamilySuite::random(default_operator_grid(), 2.0, 4, 2, 1, geometric_t_grid(6)).unwrap().scaled(0.0);
    let r = dual_inequality_check(&br(1.0), 2.0, e(1.2, 1.2), &fam, 0).unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.ratios.iter().all(|v| *v == 0.0));
}

#[test]
fn suite_dual_matches_operator() {
    let m = br(1.0);
    let suite = FamilySuite::random(default_operator_grid(), 2.0, 4, 2, 5, geometric_t_grid(10)).unwrap();
    let fast = suite.averaged_dual(&m, 2.0, 0).unwrap();
    for (i, out) in fast.iter().enumerate() {
        let direct = averaged_dual_operator(&m, &suite.family(i).unwrap(), 2.0).unwrap();
        let scale = direct.max_abs();
        for (a, b) in out.values().iter().zip(direct.values()) {
            assert!((a - b).abs() <= 1e-6 * scale);
        }
    }
}

#[test]
fn constant_family_two_ways() {
    let m = br(1.0);
    let g = suite()[0].clone();
    let t_grid = geometric_t_grid(6);
    let fam = TimeFamily::constant(t_grid.clone(), &g).unwrap();
    let averaged = averaged_dual_operator(&m, &fam, 2.0).unwrap();
    let w = trapezoid_weights(&t_grid);
    let mut direct = vec![0.0; g.values().len()];
    for (t, wk) in t_grid.iter().zip(&w) {
        let out = apply_multiplier(&m.dilate(*t), &g, 2.0).unwrap();
        for (x, v) in direct.iter_mut().zip(out.values()) {
            *x += wk * v;
        }
    }
    let scale = direct.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, b) in averaged.values().iter().zip(&direct) {
        assert!((a - b).abs() <= 1e-6 * scale);
    }
}

#[test]
fn probe_config_validation() {
    let mut cfg = ProbeConfig::new(2.0, vec![e(1.2, 1.2)], vec![MultiplierConfig::bochner_riesz(1.0)]);
    assert!(cfg.validate().is_ok());
    cfg.exponents = vec![e(1.2, 1.1)];
    assert!(cfg.validate().is_err());
    cfg.exponents = vec![e(1.4, 2.0)];
    assert!(cfg.validate().is_err());
    cfg.exponents = vec![e(1.2, 2.0)];
    cfg.refine = 1;
    assert_eq!(cfg.t_grid().len(), 2 * DEFAULT_T_POINTS);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn dual_ratios_are_scale_invariant(c in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0]) {
        static BASE: OnceLock<(FamilySuite, DualReport)> = OnceLock::new();
        let (suite, base) = BASE.get_or_init(|| {
            let s = FamilySuite::random(default_operator_grid(), 2.0, 4, 2, 3, geometric_t_grid(6)).unwrap();
            let r = dual_inequality_check(&br(1.0), 2.0, e(1.2, f64::INFINITY), &s, 0).unwrap();
            (s, r)
        });
        let r = dual_inequality_check(&br(1.0), 2.0, e(1.2, f64::INFINITY), &suite.scaled(c), 0).unwrap();
        for (a, b) in r.ratios.iter().zip(&base.ratios) {
            prop_assert!((a / b - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn rank_correlation_is_invariant_under_monotone_maps(v in prop::collection::vec(-10.0f64..10.0, 3..20)) {
        let w: Vec<f64> = v.iter().map(|x| x.exp()).collect();
        let rho = rank_correlation(&v, &w);
        let distinct = v.iter().enumerate().all(|(i, a)| v[..i].iter().all(|b| b != a));
        if distinct {
            prop_assert!((rho - 1.0).abs() < 1e-12);
        }
    }
}
