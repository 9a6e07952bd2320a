//! Adaptive Gauss-Kronrod (7/15) quadrature and standard normal helpers.

use alloc::vec::Vec;

use libm::{erfc, exp, fabs, sqrt};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SEGMENTS: usize = 500;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: fabs((kronrod - gauss) * half),
    }
}

/// Integrates `f` over `[a, b]` by bisecting the worst segment until the
/// summed error estimate is below `tol` (absolute).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut segments = Vec::with_capacity(32);
    segments.push(gk15(&f, a, b));
    loop {
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= tol || segments.len() >= MAX_SEGMENTS {
            break;
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("nonempty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(gk15(&f, s.a, mid));
        segments.push(gk15(&f, mid, s.b));
    }
    segments.iter().map(|s| s.value).sum()
}

/// Integrates over `[a, b]` after splitting at the given interior points.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, splits: &[f64], tol: f64) -> f64 {
    let mut knots: Vec<f64> = Vec::with_capacity(splits.len() + 2);
    knots.push(a);
    knots.extend(splits.iter().copied().filter(|&s| s > a && s < b));
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    let share = tol / (knots.len() - 1) as f64;
    knots
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], share))
        .sum()
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp(-0.5 * x * x)
}

/// `P(Z > x)` for a standard normal `Z`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / core::f64::consts::SQRT_2)
}

/// `P(Z <= x)` for a standard normal `Z`.
pub fn normal_cdf(x: f64) -> f64 {
    normal_sf(-x)
}

pub(crate) fn safe_sqrt(x: f64) -> f64 {
    sqrt(x.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 1e-12);
        // [x^4/4 - x^2 + x] from -1 to 3 = (81/4 - 9 + 3) - (1/4 - 1 - 1)
        assert!((v - 16.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mass() {
        let v = integrate(normal_pdf, -9.0, 9.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
        let v = integrate(normal_pdf, 1.0, 9.0, 1e-12);
        assert!((v - normal_sf(1.0)).abs() < 1e-12);
    }

    #[test]
    fn kinked_integrand() {
        let v = integrate_split(|x: f64| x.abs(), -1.0, 2.0, &[0.0], 1e-12);
        assert!((v - 2.5).abs() < 1e-12);
        let v = integrate(|x: f64| if x > 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, 1e-9);
        assert!((v - 0.7).abs() < 1e-8);
    }

    #[test]
    fn normal_tails() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
        assert!(normal_sf(40.0) == 0.0 || normal_sf(40.0) < 1e-300);
    }
}
