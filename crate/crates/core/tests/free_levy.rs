use std::f64::consts::PI;

use heavy_rmt::free_levy::*;
use heavy_rmt::grid::GridFunction;
use heavy_rmt::quad::{integrate_breakpoints, QuadConfig};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn semicircle(l: f64, var: f64) -> f64 {
    let r2 = 4.0 * var;
    if l * l >= r2 {
        0.0
    } else {
        (r2 - l * l).sqrt() / (2.0 * PI * var)
    }
}

#[test]
fn gaussian_limit_is_semicircle() {
    let p = FreeStableParams::standard(2.0).unwrap();
    let g0 = resolvent(0.0, &p, 1e-14).unwrap();
    assert!((g0 - c(0.0, -1.0)).norm() < 1e-8, "{g0}");
    for i in -30..=30 {
        let l = i as f64 * 0.1;
        let d = density(l, &p).unwrap();
        assert!((d - semicircle(l, 1.0)).abs() < 1e-8, "{l}: {d}");
    }
}

#[test]
fn symmetric_cauchy_resolvent() {
    let p = FreeStableParams::standard(1.0).unwrap();
    for l in [-20.0, -3.0, -0.5, 0.0, 0.7, 4.0, 50.0] {
        let g = resolvent(l, &p, 1e-14).unwrap();
        assert!((g - 1.0 / c(l, 1.0)).norm() < 1e-8, "{l}: {g}");
        let d = density(l, &p).unwrap();
        assert!((d - 1.0 / (PI * (1.0 + l * l))).abs() < 1e-8);
    }
}

#[test]
fn peak_height_is_one_over_pi() {
    for alpha in [0.6, 1.25, 1.5, 1.8] {
        let d = density(0.0, &FreeStableParams::standard(alpha).unwrap()).unwrap();
        assert!((d - 1.0 / PI).abs() < 1e-10, "{alpha}: {d}");
    }
}

#[test]
fn small_lambda_quadratic_coefficient() {
    for alpha in [1.25, 1.5, 1.8] {
        let p = FreeStableParams::standard(alpha).unwrap();
        let coef = |h: f64| (1.0 - PI * density(h, &p).unwrap()) / (h * h);
        let est = (4.0 * coef(0.01) - coef(0.02)) / 3.0;
        let want = (3.0 - alpha) / (2.0 * alpha * alpha);
        assert!((est / want - 1.0).abs() < 0.01, "{alpha}: {est} vs {want}");
    }
}

#[test]
fn tail_matches_power_law() {
    let p = FreeStableParams::standard(1.5).unwrap();
    for l in [50.0, -50.0] {
        let ratio = density(l, &p).unwrap() / density_tail(l, &p);
        assert!((ratio - 1.0).abs() < 0.05, "{l}: {ratio}");
    }
    let want = (0.75 * PI).sin() / PI * 50f64.powf(-2.5);
    assert!((density_tail(50.0, &p) - want).abs() < 1e-15);
}

#[test]
fn skewed_tails_follow_r_transform() {
    for (alpha, beta) in [(1.5, 0.6), (0.7, -0.4), (1.0, 0.5)] {
        let p = FreeStableParams::new(alpha, beta, 1.0).unwrap();
        for l in [400.0, -400.0] {
            let ratio = density(l, &p).unwrap() / density_tail(l, &p);
            assert!((ratio - 1.0).abs() < 0.05, "{alpha} {beta} {l}: {ratio}");
        }
    }
}

#[test]
fn densities_are_normalized() {
    for alpha in [1.0, 1.25, 1.5, 2.0] {
        let p = FreeStableParams::standard(alpha).unwrap();
        let l = 200.0;
        let pts: Vec<f64> = (-40..=40).map(|i| l * (i as f64 / 40.0).powi(3)).collect();
        let inner = integrate_breakpoints(|x| density(x, &p).unwrap(), &pts, QuadConfig::new(1e-10, 1e-8))
            .unwrap()
            .value;
        let tail = if alpha == 2.0 {
            0.0
        } else {
            2.0 * density_tail(l, &p) * l / alpha
        };
        assert!((inner + tail - 1.0).abs() < 1e-3, "{alpha}: {}", inner + tail);
    }
}

#[test]
fn herglotz_sign_on_skewed_laws() {
    for (alpha, beta) in [(0.5, 1.0), (0.8, -1.0), (1.2, 1.0), (1.0, -0.7), (1.9, 0.5)] {
        let p = FreeStableParams::new(alpha, beta, 1.3).unwrap();
        for i in -40..=40 {
            let g = resolvent(i as f64 * 0.25, &p, 1e-13).unwrap();
            assert!(g.im <= 1e-10, "{alpha} {beta}: {g}");
        }
    }
}

#[test]
fn density_curve_agrees_with_pointwise() {
    let p = FreeStableParams::new(1.3, 0.4, 1.0).unwrap();
    let xs: Vec<f64> = (-50..=50).map(|i| i as f64 * 0.2).collect();
    let curve = density_curve(&xs, &p).unwrap();
    for (x, d) in xs.iter().zip(curve) {
        assert!((d - density(*x, &p).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn potential_closed_forms() {
    let gauss = FreeStableParams::standard(2.0).unwrap();
    let cauchy = FreeStableParams::standard(1.0).unwrap();
    assert_eq!(potential(0.0, &gauss).unwrap(), 0.0);
    for l in [-1.7, -0.4, 0.9, 1.9] {
        assert!((potential(l, &gauss).unwrap() - l * l / 2.0).abs() < 1e-8);
    }
    for l in [-30.0, -2.0, 0.5, 8.0] {
        assert!((potential(l, &cauchy).unwrap() - (1.0 + l * l).ln()).abs() < 1e-8);
    }
}

#[test]
fn potential_large_lambda_correction() {
    // The V(0) = 0 gauge fixes an unknown constant, so compare increments.
    let p = FreeStableParams::standard(1.5).unwrap();
    let (a, b) = (50.0, 100.0);
    let numeric = (potential(a, &p).unwrap() - 2.0 * a.ln()) - (potential(b, &p).unwrap() - 2.0 * b.ln());
    let asym = (potential_asymptote(a, &p).unwrap() - 2.0 * a.ln()) - (potential_asymptote(b, &p).unwrap() - 2.0 * b.ln());
    assert!((numeric / asym - 1.0).abs() < 0.05, "{numeric} vs {asym}");
    assert!((potential(-70.0, &p).unwrap() - potential(70.0, &p).unwrap()).abs() < 1e-9);
}

fn grid_density(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> GridFunction {
    let x = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    GridFunction::from_fn(x, f).unwrap()
}

#[test]
fn green_from_density_matches_closed_forms() {
    let rho = grid_density(|x| semicircle(x, 1.0), -2.0, 2.0, 4001);
    for z in [c(0.3, 0.5), c(-1.0, -0.2), c(5.0, 0.0), c(0.0, 3.0)] {
        let exact = 0.5 * (z - (z - 2.0).sqrt() * (z + 2.0).sqrt());
        let g = green_from_density(&rho, z).unwrap();
        assert!((g - exact).norm() < 1e-4, "{z}: {g} vs {exact}");
    }
    assert!(green_from_density(&rho, c(0.5, 0.0)).is_err());
}

fn cauchy_model() -> CauchyTransform {
    let l = 100.0;
    let rho = grid_density(|x| 1.0 / (PI * (1.0 + x * x)), -l, l, 20001);
    let tail = TailModel {
        c_minus: 1.0 / PI,
        c_plus: 1.0 / PI,
        exponent: 2.0,
    };
    CauchyTransform::new(&rho, Some(tail)).unwrap()
}

#[test]
fn tail_model_completes_cauchy_transform() {
    let g = cauchy_model();
    for z in [c(0.2, 0.3), c(-3.0, 1.0), c(80.0, 5.0), c(0.5, -0.7)] {
        let exact = if z.im > 0.0 { 1.0 / (z + c(0.0, 1.0)) } else { 1.0 / (z - c(0.0, 1.0)) };
        let v = g.green(z).unwrap();
        assert!((v - exact).norm() < 1e-5, "{z}: {v} vs {exact}");
        let h = 1e-5;
        let fd = (g.green(z + h).unwrap() - g.green(z - h).unwrap()) / (2.0 * h);
        assert!((fd - g.green_deriv(z).unwrap()).norm() < 1e-5);
    }
}

#[test]
fn r_transform_round_trip() {
    let cauchy = cauchy_model();
    let p1 = FreeStableParams::standard(1.0).unwrap();
    let semi = CauchyTransform::new(&grid_density(|x| semicircle(x, 1.0), -2.0, 2.0, 4001), None).unwrap();
    let p2 = FreeStableParams::standard(2.0).unwrap();
    for r in [0.05, 0.15, 0.3] {
        for th in [-0.3, -0.5, -0.8] {
            let z = Complex64::from_polar(r, th * PI);
            let a = r_from_green(&cauchy, z, 1e-12).unwrap();
            assert!((a - stable_r_transform(z, &p1).unwrap()).norm() < 1e-4, "{z}: {a}");
            let b = r_from_green(&semi, z, 1e-12).unwrap();
            assert!((b - stable_r_transform(z, &p2).unwrap()).norm() < 1e-4, "{z}: {b}");
        }
    }
}

#[test]
fn semicircle_plus_semicircle() {
    let semi = || CauchyTransform::new(&grid_density(|x| semicircle(x, 1.0), -2.0, 2.0, 4001), None).unwrap();
    let sum = free_add(InverseGreen::new(semi(), 1e-13), InverseGreen::new(semi(), 1e-13));
    let xs: Vec<f64> = (-12..=12).map(|i| i as f64 * 0.2).collect();
    let curve = density_curve_from_r(&sum, &xs, 1e-12).unwrap();
    for (&l, &d) in xs.iter().zip(&curve) {
        assert!((d - semicircle(l, 2.0)).abs() < 1e-4, "{l}: {d} vs {}", semicircle(l, 2.0));
    }
}

#[test]
fn stable_laws_are_closed_under_free_addition() {
    // R-transforms of free stable laws add: range r₁^α + r₂^α.
    let a = FreeStableParams::new(1.5, 0.0, 1.0).unwrap();
    let b = FreeStableParams::new(1.5, 0.0, 0.5).unwrap();
    let r = (1.0f64 + 0.5f64.powf(1.5)).powf(1.0 / 1.5);
    let target = FreeStableParams::new(1.5, 0.0, r).unwrap();
    let sum = free_add(a, b);
    assert!((density_from_r(&sum, 0.7, 1e-13).unwrap() - density(0.7, &target).unwrap()).abs() < 1e-10);
    for l in [-3.0, -0.5, 0.0, 1.2, 6.0] {
        let d = density_from_r(&sum, l, 1e-13).unwrap();
        assert!((d - density(l, &target).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn zero_law_is_neutral() {
    let p = FreeStableParams::new(1.3, 0.4, 1.0).unwrap();
    let sum = free_add(p, ZeroLaw);
    for l in [-2.0, 0.0, 0.8, 10.0] {
        let g = resolvent_from_r(&sum, l, 1e-13).unwrap();
        assert!((g - resolvent(l, &p, 1e-13).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn range_rescaling_of_density() {
    let unit = FreeStableParams::new(1.4, -0.3, 1.0).unwrap();
    let wide = FreeStableParams::new(1.4, -0.3, 2.5).unwrap();
    for l in [-4.0, -1.0, 0.3, 2.0, 9.0] {
        let a = density(l, &wide).unwrap();
        let b = density(l / 2.5, &unit).unwrap() / 2.5;
        assert!((a - b).abs() < 1e-10);
    }
}
