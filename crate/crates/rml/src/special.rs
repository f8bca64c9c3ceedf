//! Bessel functions of the first kind and the normalized kernel `B_d`.
//!
//! `J_alpha` is evaluated by the ascending series for `x <= 10`, by Miller's
//! backward recurrence on `(10, 20 + alpha^2)` and by the Hankel asymptotic
//! expansion beyond that.

use crate::error::{check_dimension, Error, Result};
use std::f64::consts::{FRAC_2_PI, PI};

const SERIES_MAX: f64 = 10.0;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos, with reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x > 0.0 && x <= 30.0 && (2.0 * x).fract() == 0.0 {
        return gamma_half_integer(x);
    }
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

fn gamma_half_integer(x: f64) -> f64 {
    let (mut g, mut y) = if x.fract() == 0.0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while y < x {
        g *= y;
        y += 1.0;
    }
    g
}

/// Order of a Bessel function, `alpha >= -1/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < -0.5 {
            return Err(Error::Domain(format!("Bessel order must be finite and >= -1/2, got {alpha}")));
        }
        Ok(Self(alpha))
    }

    /// The order `(d-2)/2` attached to dimension `d > 1`.
    pub fn for_dimension(d: f64) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self((d - 2.0) / 2.0))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

/// `J_alpha(x)` for finite `x >= 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("Bessel argument must be finite and nonnegative, got {x}")));
    }
    Ok(j_unchecked(order.0, x))
}

/// `B_d(x) = x^{-(d-2)/2} J_{(d-2)/2}(x)`, with `B_d(0) = 2^{-(d-2)/2} / Gamma(d/2)`.
pub fn kernel_b(d: f64, x: f64) -> Result<f64> {
    let k = KernelB::new(d)?;
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("kernel argument must be finite and nonnegative, got {x}")));
    }
    Ok(k.eval(x))
}

pub(crate) fn j_unchecked(alpha: f64, x: f64) -> f64 {
    if x <= SERIES_MAX {
        j_series(alpha, x)
    } else if x < asymptotic_threshold(alpha) {
        j_miller(alpha, x)
    } else {
        j_asymptotic(alpha, x)
    }
}

pub(crate) fn asymptotic_threshold(alpha: f64) -> f64 {
    20.0 + alpha * alpha
}

/// Ascending series for `x^{-alpha} J_alpha(x)`.
pub(crate) fn b_series(alpha: f64, x: f64) -> f64 {
    b_series_from(1.0 / (2f64.powf(alpha) * gamma(alpha + 1.0)), alpha, x)
}

#[inline]
fn b_series_from(leading: f64, alpha: f64, x: f64) -> f64 {
    let mut term = leading;
    let y = -0.25 * x * x;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= y / (k * (alpha + k));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || k > 200.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

pub(crate) fn j_series(alpha: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if alpha == 0.0 { 1.0 } else { 0.0 };
    }
    b_series(alpha, x) * x.powf(alpha)
}

/// Miller's backward recurrence normalized by
/// `(x/2)^alpha = sum_k (alpha+2k) Gamma(alpha+k)/k! J_{alpha+2k}(x)`.
pub(crate) fn j_miller(alpha: f64, x: f64) -> f64 {
    j_miller_from(gamma(alpha + 1.0), alpha, x)
}

fn j_miller_from(g1: f64, alpha: f64, x: f64) -> f64 {
    let n = miller_length(x);
    let kmax = n / 2;
    // g_k = Gamma(alpha+k)/k! for k >= 1, walked downward from kmax.
    let mut g = g1;
    for k in 2..=kmax {
        g *= (alpha + (k - 1) as f64) / k as f64;
    }
    let mut k = kmax;
    let two_over_x = 2.0 / x;
    let mut upper = 0.0;
    let mut cur = 1e-300;
    let mut norm = (alpha + 2.0 * kmax as f64) * g * cur;
    for idx in (1..=n).rev() {
        let nu = alpha + idx as f64;
        let lower = nu * two_over_x * cur - upper;
        upper = cur;
        cur = lower;
        let i = idx - 1;
        if i % 2 == 0 {
            let half = i / 2;
            while k > half.max(1) {
                g *= k as f64 / (alpha + (k - 1) as f64);
                k -= 1;
            }
            let c = if half == 0 { g1 } else { (alpha + 2.0 * half as f64) * g };
            norm += c * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            upper *= 1e-250;
            norm *= 1e-250;
        }
    }
    cur * (0.5 * x).powf(alpha) / norm
}

/// Hankel asymptotic expansion.
pub(crate) fn j_asymptotic(alpha: f64, x: f64) -> f64 {
    let (sp, cp) = ((0.5 * alpha + 0.25) * PI).sin_cos();
    j_asymptotic_from(alpha, sp, cp, x)
}

#[inline]
fn j_asymptotic_from(alpha: f64, sp: f64, cp: f64, x: f64) -> f64 {
    let mu = 4.0 * alpha * alpha;
    let inv = 0.125 / x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut u = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        u *= (mu - odd * odd) * inv / kf;
        if u == 0.0 || u.abs() > prev {
            break;
        }
        prev = u.abs();
        match k % 4 {
            1 => q += u,
            2 => p -= u,
            3 => q -= u,
            _ => p += u,
        }
        if u.abs() < 1e-17 {
            break;
        }
    }
    let (sx, cx) = x.sin_cos();
    let cos_w = cx * cp + sx * sp;
    let sin_w = sx * cp - cx * sp;
    (FRAC_2_PI / x).sqrt() * (p * cos_w - q * sin_w)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Form {
    Sine,
    General,
}

/// Evaluator for `B_d` at a fixed dimension, for hot loops.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelB {
    d: f64,
    alpha: f64,
    at_zero: f64,
    gamma1: f64,
    phase_sin: f64,
    phase_cos: f64,
    threshold: f64,
    form: Form,
    miller: Vec<f64>,
    asymptotic: Vec<f64>,
    series: Vec<f64>,
}

impl KernelB {
    pub fn new(d: f64) -> Result<Self> {
        check_dimension(d)?;
        let alpha = (d - 2.0) / 2.0;
        let at_zero = 2f64.powf(-alpha) / gamma(d / 2.0);
        let form = if d == 3.0 {
            Form::Sine
        } else {
            Form::General
        };
        let (phase_sin, phase_cos) = ((0.5 * alpha + 0.25) * PI).sin_cos();
        let threshold = asymptotic_threshold(alpha);
        let gamma1 = gamma(alpha + 1.0);
        let kmax = miller_start(threshold) / 2;
        let mut miller = Vec::with_capacity(kmax + 1);
        miller.push(gamma1);
        let mut g = gamma1;
        for k in 1..=kmax {
            if k > 1 {
                g *= (alpha + (k - 1) as f64) / k as f64;
            }
            miller.push((alpha + 2.0 * k as f64) * g);
        }
        let mu = 4.0 * alpha * alpha;
        let mut asymptotic = Vec::with_capacity(ASYMPTOTIC_TERMS);
        let mut a = 1.0;
        for k in 1..ASYMPTOTIC_TERMS {
            let odd = 2.0 * k as f64 - 1.0;
            a *= (mu - odd * odd) / (8.0 * k as f64);
            asymptotic.push(a);
        }
        let series = (1..SERIES_TERMS).map(|k| -0.25 / (k as f64 * (alpha + k as f64))).collect();
        Ok(Self { d, alpha, at_zero, gamma1, phase_sin, phase_cos, threshold, form, miller, asymptotic, series })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn at_zero(&self) -> f64 {
        self.at_zero
    }

    /// `B_d(x)` for finite `x >= 0` (unchecked).
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 {
            return self.at_zero;
        }
        match self.form {
            Form::Sine => {
                if x < 1e-4 {
                    FRAC_2_PI.sqrt() * (1.0 - x * x / 6.0)
                } else {
                    FRAC_2_PI.sqrt() * x.sin() / x
                }
            }
            Form::General => {
                if x <= SERIES_MAX {
                    self.series_b(x)
                } else {
                    if x < self.threshold {
                        return self.miller_b(x);
                    }
                    let j = self.asymptotic_j(x);
                    if self.alpha == 0.0 {
                        j
                    } else if self.alpha == 1.0 {
                        j / x
                    } else {
                        j * x.powf(-self.alpha)
                    }
                }
            }
        }
    }
}

impl KernelB {
    /// Miller recurrence with tabulated normalization; returns `B_d(x)`.
    fn miller_b(&self, x: f64) -> f64 {
        let n = miller_start(x);
        let two_over_x = 2.0 / x;
        let mut upper = 0.0;
        let mut cur = 1e-300;
        let mut norm = self.miller[n / 2] * cur;
        for idx in (1..=n).rev() {
            let lower = (self.alpha + idx as f64) * two_over_x * cur - upper;
            upper = cur;
            cur = lower;
            if idx % 2 == 1 {
                norm += self.miller[(idx - 1) / 2] * cur;
            }
            if cur.abs() > 1e250 {
                cur *= 1e-250;
                upper *= 1e-250;
                norm *= 1e-250;
            }
        }
        cur * self.at_zero * self.gamma1 / norm
    }

    fn series_b(&self, x: f64) -> f64 {
        let y = x * x;
        let mut term = self.at_zero;
        let mut sum = term;
        for c in &self.series {
            term *= y * c;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    }

    fn asymptotic_j(&self, x: f64) -> f64 {
        let inv = 1.0 / x;
        let mut xp = 1.0;
        let mut p = 1.0;
        let mut q = 0.0;
        let mut prev = f64::INFINITY;
        for (i, a) in self.asymptotic.iter().enumerate() {
            xp *= inv;
            let u = a * xp;
            if u == 0.0 || u.abs() > prev {
                break;
            }
            prev = u.abs();
            match (i + 1) % 4 {
                1 => q += u,
                2 => p -= u,
                3 => q -= u,
                _ => p += u,
            }
            if u.abs() < 1e-17 {
                break;
            }
        }
        let (sx, cx) = x.sin_cos();
        let cos_w = cx * self.phase_cos + sx * self.phase_sin;
        let sin_w = sx * self.phase_cos - cx * self.phase_sin;
        (FRAC_2_PI * inv).sqrt() * (p * cos_w - q * sin_w)
    }
}

const ASYMPTOTIC_TERMS: usize = 60;
const SERIES_TERMS: usize = 200;

/// Shorter start index for the tabulated recurrence.
fn miller_start(x: f64) -> usize {
    let n = x.ceil() as usize + 30;
    n + (n % 2)
}

fn miller_length(x: f64) -> usize {
    let n = 2 * (x.ceil() as usize) + 40;
    n + (n % 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: [(f64, f64, f64); 20] = [
        (0.0, 0.5, 0.938_469_807_240_812_9),
        (0.0, 7.5, 0.266_339_657_880_378_4),
        (0.0, 10.1, -0.249_029_650_580_910_02),
        (0.0, 19.5, 0.178_853_827_040_172_9),
        (0.0, 33.0, 0.097_270_672_235_509_46),
        (0.0, 1000.5, 0.019_486_559_987_130_137),
        (1.0, 3.0, 0.339_058_958_525_936_46),
        (1.0, 9.9, 0.068_369_832_283_692_13),
        (1.0, 14.0, 0.133_375_154_698_793_25),
        (1.0, 24.0, -0.154_038_065_183_121_2),
        (1.0, 51.0, -0.004_862_134_368_029_08),
        (0.25, 3.0, -0.100_637_064_336_731_27),
        (0.25, 20.5, 0.157_274_406_133_157_7),
        (0.25, 49.0, -0.087_463_396_656_570_8),
        (0.7, 0.5, 0.401_873_974_837_412_5),
        (0.7, 10.1, -0.091_516_636_865_750_06),
        (0.7, 120.0, 0.021_964_092_441_651_5),
        (1.5, 7.5, -0.064_553_196_129_517_59),
        (1.5, 19.5, -0.138_181_166_136_267_3),
        (1.5, 1000.5, -0.002_424_430_248_522_375),
    ];

    #[test]
    fn matches_reference_values() {
        for &(a, x, v) in REFERENCE.iter() {
            let j = bessel_j(BesselOrder::new(a).unwrap(), x).unwrap();
            if x <= 50.0 {
                assert!((j - v).abs() <= 1e-12, "J_{a}({x}) = {j}, want {v}");
            } else {
                let env = (2.0 / (PI * x)).sqrt();
                assert!((j - v).abs() <= 1e-10 * env, "J_{a}({x}) = {j}, want {v}");
            }
        }
    }

    #[test]
    fn gamma_values() {
        let cases = [
            (0.5, 1.772_453_850_905_516),
            (1.0, 1.0),
            (2.5, 1.329_340_388_179_137),
            (0.1, 9.513_507_698_668_732),
            (7.3, 1_271.423_633_663_909_3),
            (-0.5, -3.544_907_701_811_032),
        ];
        for (x, g) in cases {
            assert!((gamma(x) / g - 1.0).abs() < 1e-13, "gamma({x})");
        }
    }

    #[test]
    fn j0_at_zero_is_one() {
        assert_eq!(bessel_j(BesselOrder::new(0.0).unwrap(), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn first_zero_of_j0() {
        // bisection on a plain ascending series, independent of the library paths
        let series = |x: f64| {
            let mut t = 1.0;
            let mut s = 1.0;
            for k in 1..60 {
                t *= -(x * x) / (4.0 * (k * k) as f64);
                s += t;
            }
            s
        };
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if series(a) * series(c) <= 0.0 {
                b = c;
            } else {
                a = c;
            }
        }
        let z = 0.5 * (a + b);
        assert!((z - 2.404_825_557_695_773).abs() < 1e-12);
        let j = bessel_j(BesselOrder::new(0.0).unwrap(), z).unwrap();
        assert!(j.abs() < 1e-9);
    }

    #[test]
    fn half_order_closed_form() {
        let j = bessel_j(BesselOrder::new(0.5).unwrap(), PI).unwrap();
        assert!(j.abs() < 1e-12);
        for i in 1..400 {
            let x = 0.25 * i as f64;
            let closed = (2.0 / (PI * x)).sqrt() * x.sin();
            let j = bessel_j(BesselOrder::new(0.5).unwrap(), x).unwrap();
            assert!((j - closed).abs() < 1e-12, "x = {x}");
            let closed15 = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
            let j15 = bessel_j(BesselOrder::new(1.5).unwrap(), x).unwrap();
            assert!((j15 - closed15).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn rejects_non_finite() {
        let o = BesselOrder::new(0.0).unwrap();
        assert!(bessel_j(o, f64::NAN).is_err());
        assert!(bessel_j(o, f64::INFINITY).is_err());
        assert!(bessel_j(o, -1.0).is_err());
        assert!(BesselOrder::new(-0.75).is_err());
    }

    #[test]
    fn kernel_b_examples() {
        assert_eq!(kernel_b(2.0, 0.0).unwrap(), 1.0);
        assert!(kernel_b(3.0, PI).unwrap().abs() < 1e-12);
        let lim = (2.0 / PI).sqrt();
        assert!((kernel_b(3.0, 0.0).unwrap() - lim).abs() < 1e-10);
        assert!((kernel_b(3.0, 1e-9).unwrap() - lim).abs() < 1e-10);
        assert!(matches!(kernel_b(0.5, 1.0), Err(Error::Dimension(_))));
        assert!(matches!(kernel_b(1.0, 1.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn kernel_b_general_matches_half_integer_forms() {
        // d = 3 through the general algorithm agrees with the sine form
        for i in 0..300 {
            let x = 0.1 + 0.37 * i as f64;
            let g = if x <= SERIES_MAX {
                b_series(0.5, x)
            } else if x < asymptotic_threshold(0.5) {
                j_miller(0.5, x) / x.sqrt()
            } else {
                j_asymptotic(0.5, x) / x.sqrt()
            };
            let s = (2.0 / PI).sqrt() * x.sin() / x;
            assert!((g - s).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn envelope_bound() {
        for d in [2.0, 3.0, 4.0] {
            let k = KernelB::new(d).unwrap();
            let mut x: f64 = 1.0;
            while x <= 1e4 {
                assert!(x.powf((d - 1.0) / 2.0) * k.eval(x).abs() <= 2.0, "d={d} x={x}");
                x *= 1.013;
            }
        }
    }

    #[test]
    fn continuity_at_zero() {
        for d in [1.5, 2.0, 2.5, 3.0, 4.0, 5.5] {
            let k = KernelB::new(d).unwrap();
            let mut prev = f64::INFINITY;
            for e in 1..=6 {
                let h = 10f64.powi(-e);
                let diff = (k.eval(h) - k.at_zero()).abs();
                assert!(diff <= prev);
                assert!(diff <= h * h);
                prev = diff;
            }
        }
    }

    #[test]
    fn series_and_recurrence_overlap() {
        for alpha in [0.0, 0.25, 0.5, 1.0, 1.5] {
            for i in 0..=80 {
                let x = 8.0 + 0.05 * i as f64;
                let a = j_series(alpha, x);
                let b = j_miller(alpha, x);
                assert!((a - b).abs() < 1e-9, "alpha={alpha} x={x}");
            }
        }
    }

    #[test]
    fn tabulated_kernel_matches_direct_evaluation() {
        for d in [2.0, 2.5, 4.0, 7.0] {
            let k = KernelB::new(d).unwrap();
            let alpha = (d - 2.0) / 2.0;
            for i in 0..440 {
                let x = 0.05 + 0.25 * i as f64;
                let direct = j_unchecked(alpha, x) * x.powf(-alpha);
                let tol = if x <= SERIES_MAX { 1e-12 } else { 1e-14 };
                assert!((k.eval(x) - direct).abs() < tol, "d={d} x={x}");
            }
        }
    }

    #[test]
    fn recurrence_and_asymptotic_overlap() {
        for alpha in [0.0, 0.25, 1.0, 1.5] {
            for i in 0..=40 {
                let x = 20.5 + 0.25 * i as f64 + alpha * alpha;
                assert!((j_miller(alpha, x) - j_asymptotic(alpha, x)).abs() < 1e-13);
            }
        }
    }
}
