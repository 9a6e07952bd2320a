use bivpp_core::{
    b_asymptotic, bvn_upper_orthant, difference_cov, BivariateNormal, CountTable, CovMatrix2,
    DirichletParams, PosteriorSpec,
};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Direct two-dimensional integration of the density over the orthant,
/// truncated at nine standard deviations.
fn orthant_oracle(d: &BivariateNormal, t: [f64; 2]) -> f64 {
    let c = d.cov;
    let (s1, s2) = (c.s11.sqrt(), c.s22.sqrt());
    let rho = c.s12 / (s1 * s2);
    let h = (t[0] - d.mean[0]) / s1;
    let k = (t[1] - d.mean[1]) / s2;
    let rule = gauss_legendre(24);
    let panels = 60;
    let nodes = |lo: f64| -> Vec<(f64, f64)> {
        let lo = lo.max(-9.0);
        let hi = 9.0;
        if lo >= hi {
            return Vec::new();
        }
        let w = (hi - lo) / panels as f64;
        (0..panels)
            .flat_map(|p| {
                let a = lo + p as f64 * w;
                rule.iter().map(move |&(x, wt)| (a + 0.5 * w * (x + 1.0), 0.5 * w * wt))
            })
            .collect()
    };
    let (zs, ws) = (nodes(h), nodes(k));
    let norm = 1.0 / (2.0 * std::f64::consts::PI * (1.0 - rho * rho).sqrt());
    let mut total = 0.0;
    for &(z1, w1) in &zs {
        for &(z2, w2) in &ws {
            let q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (1.0 - rho * rho);
            total += w1 * w2 * norm * (-0.5 * q).exp();
        }
    }
    total
}

#[test]
fn orthant_matches_two_dimensional_quadrature() {
    let cases = [
        ([0.0, 0.0], [1.0, 0.0, 1.0], [0.0, 0.0]),
        ([0.4, 0.1], [0.024, 0.0099, 0.0115], [0.0, 0.0]),
        ([0.0, 0.0], [1.0, 0.9, 1.0], [0.5, -0.3]),
        ([0.0, 0.0], [1.0, -0.9, 1.0], [-0.5, -0.3]),
        ([1.0, -1.0], [2.0, 0.5, 0.5], [0.2, -1.5]),
        ([0.0, 0.0], [1.0, 0.6, 1.0], [2.5, 2.0]),
        ([0.0, 0.0], [1.0, -0.6, 1.0], [-2.0, 1.0]),
        ([0.3, 0.3], [0.01, 0.0095, 0.01], [0.0, 0.0]),
        ([0.0, 0.0], [1.0, 0.3, 1.0], [-3.0, -3.0]),
    ];
    for (mean, [a, b, c], t) in cases {
        let d = BivariateNormal {
            mean,
            cov: CovMatrix2::new(a, b, c),
        };
        let got = bvn_upper_orthant(&d, t).unwrap();
        let want = orthant_oracle(&d, t);
        assert!((got - want).abs() < 1e-6, "{mean:?} {a} {b} {c} {t:?}: {got} vs {want}");
    }
}

#[test]
fn orthant_is_shift_invariant_and_monotone() {
    let cov = CovMatrix2::new(0.03, 0.01, 0.02);
    let d = BivariateNormal { mean: [0.2, 0.1], cov };
    let shifted = BivariateNormal { mean: [0.7, -0.4], cov };
    let a = bvn_upper_orthant(&d, [0.05, 0.02]).unwrap();
    let b = bvn_upper_orthant(&shifted, [0.55, -0.48]).unwrap();
    assert!((a - b).abs() < 1e-12);

    let mut last = 1.0;
    for i in 0..40 {
        let t = -0.5 + i as f64 * 0.05;
        let p = bvn_upper_orthant(&d, [t, t]).unwrap();
        assert!(p <= last + 1e-12);
        assert!((0.0..=1.0).contains(&p));
        last = p;
    }
}

fn worked_example_spec(alpha_s: DirichletParams) -> PosteriorSpec {
    PosteriorSpec::new(
        DirichletParams::jeffreys(),
        alpha_s,
        CountTable::new(5, 10, 0, 10),
        CountTable::new(0, 3, 2, 0),
        30,
    )
    .unwrap()
}

#[test]
fn control_uncertainty_shrinks_with_concentration() {
    let base = [10.0, 9.0, 11.0, 30.0];
    let mut last = f64::INFINITY;
    let mut last_tox = f64::INFINITY;
    for k in [1.0, 2.0, 5.0, 20.0, 100.0] {
        let spec = worked_example_spec(DirichletParams::from_array(base.map(|v| v * k)).unwrap());
        let c = difference_cov(&spec).unwrap();
        assert!(c.s11 < last && c.s22 < last_tox);
        assert!(c.is_psd(1e-12));
        last = c.s11;
        last_tox = c.s22;
    }
}

#[test]
fn posterior_probability_decreases_with_margin() {
    let spec = worked_example_spec(DirichletParams::new(10.0, 9.0, 11.0, 30.0).unwrap());
    let mut last = 1.0;
    for i in 0..20 {
        let d = -0.1 + 0.02 * i as f64;
        let b = b_asymptotic(&spec.with_delta0([d, d])).unwrap();
        assert!(b <= last + 1e-12);
        last = b;
    }
}
