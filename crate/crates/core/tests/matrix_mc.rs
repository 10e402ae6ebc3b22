use std::f64::consts::PI;

use heavy_rmt::free_levy::{density_curve, haar_orthogonal, DiagonalSampler, FreeStableParams};
use heavy_rmt::grid::sinh_grid;
use heavy_rmt::io::{DiagonalLaw, EnsembleConfig};
use heavy_rmt::matrix_mc::*;
use heavy_rmt::stable_dist::{self, frechet_max_check, StableParams};
use heavy_rmt::stats::{ks_statistic, mean_stderr, TabulatedCdf};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn semicircle(l: f64, radius: f64) -> f64 {
    if l.abs() >= radius {
        0.0
    } else {
        2.0 * (radius * radius - l * l).sqrt() / (PI * radius * radius)
    }
}

fn upper_triangle(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    (0..n).flat_map(|j| (0..=j).map(move |i| (i, j))).map(|(i, j)| a[(i, j)]).collect()
}

#[test]
fn wigner_levy_matrix_is_symmetric_with_stable_entries() {
    let p = StableParams::new(1.0, 0.0, 2.0).unwrap();
    let a = sample_wigner_levy(120, &p, &mut rng(1));
    assert_eq!(a, a.transpose());
    let x = upper_triangle(&a);
    let d = ks_statistic(&x, |v| 0.5 + (v / 2.0).atan() / PI);
    assert!(d < 1.36 / (x.len() as f64).sqrt(), "{d}");

    let p = StableParams::new(1.5, 0.5, 1.0).unwrap();
    let x = upper_triangle(&sample_wigner_levy(100, &p, &mut rng(2)));
    let grid = sinh_grid(2000.0, 8001, 0.05).unwrap();
    let dens: Vec<f64> = grid.iter().map(|&v| stable_dist::pdf(v, &p).unwrap()).collect();
    let tails = stable_dist::stable_tail_amplitudes(&p).unwrap();
    let mass = |c: f64| c * 2000f64.powf(-1.5) / 1.5;
    let cdf = TabulatedCdf::from_density(&grid, &dens, mass(tails.c_minus), mass(tails.c_plus)).unwrap();
    let d = ks_statistic(&x, |v| cdf.cdf(v));
    assert!(d < 1.36 / (x.len() as f64).sqrt(), "{d}");
}

#[test]
fn gaussian_entries_give_semicircle_of_sigma_root_two_range() {
    let cfg = EnsembleConfig::WignerLevy {
        n: 200,
        alpha: 2.0,
        beta: 0.0,
        range: 1.0,
        scaling_exponent: Some(0.5),
        trials: 40,
    };
    let samples = simulate(&cfg, 11, 0, false).unwrap();
    let radius = 2.0 * 2f64.sqrt();
    let edges = uniform_edges(-2.4, 2.4, 24).unwrap();
    let h = spectral_histogram(&samples, 0.0, edges.clone()).unwrap();
    let reference = bin_averages(&edges, |l| semicircle(l, radius));
    assert!(h.band_agreement(&reference, 3.0).unwrap() >= 0.9);
}

#[test]
fn goe_variances_and_semicircle() {
    let mut r = rng(3);
    let (mut diag, mut off) = (Vec::new(), Vec::new());
    for _ in 0..400 {
        let a = sample_goe(20, 1.5, &mut r);
        diag.extend((0..20).map(|i| a[(i, i)]));
        off.extend((1..20).map(|i| a[(0, i)]));
    }
    let var = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let ratio = var(&diag) / var(&off);
    assert!((ratio - 2.0).abs() < 0.15, "{ratio}");
    let single: Vec<f64> = (0..20000).map(|_| sample_goe(1, 1.5, &mut r)[(0, 0)]).collect();
    assert!((var(&single) / 4.5 - 1.0).abs() < 0.05);

    let cfg = EnsembleConfig::Goe {
        n: 200,
        sigma: 1.0,
        scaling_exponent: None,
        trials: 40,
    };
    let samples = simulate(&cfg, 5, 0, false).unwrap();
    let edges = uniform_edges(-1.8, 1.8, 18).unwrap();
    let h = spectral_histogram(&samples, 0.0, edges.clone()).unwrap();
    let reference = bin_averages(&edges, |l| semicircle(l, 2.0));
    assert!(h.band_agreement(&reference, 3.0).unwrap() >= 0.9);
}

#[test]
fn eigensolver_residual_and_traces_on_random_matrix() {
    let mut r = rng(4);
    let g = DMatrix::<f64>::from_fn(50, 50, |_, _| r.random::<f64>() - 0.5);
    let a = &g + g.transpose();
    let s = eigen_sym(&a, true).unwrap();
    assert!(s.max_residual(&a).unwrap() < 1e-10);
    assert!((s.eigenvalues.iter().sum::<f64>() - a.trace()).abs() < 1e-10);
    let v = s.eigenvectors.as_ref().unwrap();
    let e = v.transpose() * v - DMatrix::<f64>::identity(50, 50);
    assert!(e.amax() < 1e-12);
    assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn eigensolver_handles_heavy_tailed_and_degenerate_input() {
    let p = StableParams::standard(0.7).unwrap();
    let a = sample_wigner_levy(80, &p, &mut rng(6));
    let s = eigen_sym(&a, true).unwrap();
    let scale = a.amax();
    assert!(s.max_residual(&a).unwrap() < 1e-12 * scale * 80.0);
    let mut b = DMatrix::<f64>::zeros(6, 6);
    b[(0, 5)] = 1.0;
    b[(5, 0)] = 1.0;
    let s = eigen_sym(&b, true).unwrap();
    assert_eq!(s.eigenvalues.len(), 6);
    assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15 && (s.eigenvalues[5] - 1.0).abs() < 1e-15);
    assert!(s.max_residual(&b).unwrap() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn eigensolver_preserves_traces(n in 1usize..40, seed in any::<u64>(), heavy in any::<bool>()) {
        let mut r = rng(seed);
        let a = if heavy {
            sample_wigner_levy(n, &StableParams::standard(1.2).unwrap(), &mut r)
        } else {
            sample_goe(n, 1.0, &mut r)
        };
        let s = eigen_sym(&a, true).unwrap();
        let tr = a.trace();
        let tr2 = (&a * &a).trace();
        let s1: f64 = s.eigenvalues.iter().sum();
        let s2: f64 = s.eigenvalues.iter().map(|l| l * l).sum();
        let scale = a.iter().map(|x| x.abs()).sum::<f64>();
        prop_assert!((s1 - tr).abs() <= 1e-10 * scale.max(1.0));
        prop_assert!((s2 - tr2).abs() <= 1e-10 * tr2);
        prop_assert!(s.max_residual(&a).unwrap() < 1e-8 * a.amax().max(1.0));
    }

    #[test]
    fn ipr_bounds(n in 1usize..30, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = sample_wigner_levy(n, &StableParams::standard(0.8).unwrap(), &mut r);
        let y = ipr_elements(&a).unwrap();
        prop_assert!(y > 0.0 && y <= 1.0);
        let s = eigen_sym(&a, true).unwrap();
        let v = s.eigenvectors.unwrap();
        for j in 0..n {
            let col: Vec<f64> = v.column(j).iter().copied().collect();
            let y2 = ipr_eigenvector(&col).unwrap();
            prop_assert!(y2 >= 1.0 / n as f64 - 1e-12 && y2 <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn element_ipr_tracks_one_minus_alpha() {
    let p = StableParams::standard(0.5).unwrap();
    let ys: Vec<f64> = run_trials(40, 9, 0, 0, |_, _, r| ipr_elements(&sample_wigner_levy(300, &p, r))).unwrap();
    let (m, _) = mean_stderr(&ys);
    assert!((0.45..=0.55).contains(&m), "{m}");
}

#[test]
fn eigenvector_localization_grows_into_the_tail() {
    let cfg = EnsembleConfig::WignerLevy {
        n: 200,
        alpha: 1.5,
        beta: 0.0,
        range: 1.0,
        scaling_exponent: None,
        trials: 20,
    };
    let samples = simulate(&cfg, 21, 0, true).unwrap();
    let (mut centre, mut tail) = (Vec::new(), Vec::new());
    for s in &samples {
        let v = s.eigenvectors.as_ref().unwrap();
        for (j, &l) in s.eigenvalues.iter().enumerate() {
            let col: Vec<f64> = v.column(j).iter().copied().collect();
            let y = ipr_eigenvector(&col).unwrap();
            if l.abs() < 0.3 {
                centre.push(y);
            } else if l.abs() > 4.0 {
                tail.push(y);
            }
        }
    }
    let (mc, _) = mean_stderr(&centre);
    let (mt, _) = mean_stderr(&tail);
    assert!(mt > 3.0 * mc, "{mt} vs {mc}");
}

#[test]
fn poisson_input_gives_exponential_spacings() {
    let mut r = rng(12);
    let samples: Vec<SpectralSample> = (0..50)
        .map(|_| {
            let mut ev: Vec<f64> = (0..400).map(|_| r.random::<f64>().powi(2)).collect();
            ev.sort_by(f64::total_cmp);
            SpectralSample {
                eigenvalues: ev,
                eigenvectors: None,
                config: None,
                seed: None,
            }
        })
        .collect();
    let s = unfolded_spacings(&samples, 0.5).unwrap();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    assert!((mean - 1.0).abs() < 1e-2);
    assert!(ks_statistic(&s, poisson_spacing_cdf) < 0.05);
    assert!(ks_statistic(&s, wigner_surmise_cdf) > 0.1);
}

#[test]
fn goe_spacings_follow_wigner_surmise() {
    let cfg = EnsembleConfig::Goe {
        n: 200,
        sigma: 1.0,
        scaling_exponent: None,
        trials: 100,
    };
    let samples = simulate(&cfg, 13, 0, false).unwrap();
    let s = unfolded_spacings(&samples, 0.5).unwrap();
    assert!(ks_statistic(&s, wigner_surmise_cdf) < 0.05);
    let h = spacing_histogram(&samples, 0.5, uniform_edges(0.0, 4.0, 40).unwrap()).unwrap();
    let mass: f64 = h.density.iter().map(|d| d * 0.1).sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

#[test]
fn spacing_errors() {
    let tiny = SpectralSample {
        eigenvalues: vec![0.0, 1.0, 2.0],
        eigenvectors: None,
        config: None,
        seed: None,
    };
    assert!(unfolded_spacings(std::slice::from_ref(&tiny), 0.5).is_err());
    assert!(unfolded_spacings(&[], 0.5).is_err());
    assert!(unfolded_spacings(&[tiny], 0.0).is_err());
}

#[test]
fn simulation_is_deterministic_across_worker_counts() {
    let cfg = EnsembleConfig::WignerLevy {
        n: 60,
        alpha: 1.3,
        beta: 0.2,
        range: 1.0,
        scaling_exponent: None,
        trials: 12,
    };
    let a = simulate(&cfg, 77, 1, false).unwrap();
    let b = simulate(&cfg, 77, 3, false).unwrap();
    let c = simulate(&cfg, 77, 1, false).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_ne!(a, simulate(&cfg, 78, 1, false).unwrap());
    assert_eq!(a[3].seed, Some(heavy_rmt::stats::derive_seed(77, 0, 3)));
}

#[test]
fn largest_element_grows_as_two_over_alpha() {
    let p = StableParams::standard(1.5).unwrap();
    let mut r = rng(31);
    let mut pts = Vec::new();
    for n in [25, 50, 100, 200, 400] {
        for _ in 0..30 {
            let a = sample_wigner_levy(n, &p, &mut r);
            pts.push((n, a.amax()));
        }
    }
    let fit = frechet_max_check(&pts, 1.5).unwrap();
    assert!((fit.slope - fit.expected).abs() < 0.2, "{fit:?}");
}

#[test]
fn haar_second_moment() {
    let mut r = rng(41);
    let n = 8;
    let x: Vec<f64> = (0..4000).map(|_| haar_orthogonal(n, &mut r)[(0, 0)].powi(2)).collect();
    let (m, se) = mean_stderr(&x);
    assert!((m - 1.0 / n as f64).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn free_sums_keep_the_stable_density() {
    let law = DiagonalLaw::FreeStable {
        alpha: 1.5,
        beta: 0.0,
        range: 1.0,
    };
    let p = FreeStableParams::standard(1.5).unwrap();
    let grid = sinh_grid(1000.0, 8001, 1.0).unwrap();
    let dens = density_curve(&grid, &p).unwrap();
    let tail = heavy_rmt::free_levy::density_tail(1000.0, &p) * 1000.0 / 1.5;
    let cdf = TabulatedCdf::from_density(&grid, &dens, tail, tail).unwrap();
    let sampler = DiagonalSampler::new(&law).unwrap();
    let mut r = rng(51);
    let direct: Vec<f64> = (0..20000).map(|_| sampler.sample(&mut r)).collect();
    assert!(ks_statistic(&direct, |x| cdf.cdf(x)) < 1.36 / (20000f64).sqrt());
    for k in [1, 4] {
        let cfg = EnsembleConfig::FreeSumDiag {
            n: 100,
            k,
            diagonal: law.clone(),
            alpha: None,
            trials: 30,
        };
        let ev: Vec<f64> = simulate(&cfg, 52, 0, false).unwrap().into_iter().flat_map(|s| s.eigenvalues).collect();
        let d = ks_statistic(&ev, |x| cdf.cdf(x));
        assert!(d < 0.03, "K = {k}: {d}");
    }
}
