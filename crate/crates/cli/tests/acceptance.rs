//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use heavy_rmt::deformed::{self, MixtureParams, WishartConfig};
use heavy_rmt::free_levy::{self, free_add, CauchyTransform, FreeStableParams, InverseGreen};
use heavy_rmt::grid::{sinh_grid, GridFunction};
use heavy_rmt::io::ScaleModel;
use heavy_rmt::matrix_mc::{
    bin_averages, ipr_by_abs_eigenvalue, ipr_elements, run_trials, sample_wigner_levy, simulate, uniform_edges,
    Histogram,
};
use heavy_rmt::quad::{integrate_breakpoints, QuadConfig};
use heavy_rmt::stable_dist::{self, StandardDensity, StableParams};
use heavy_rmt::stats::{hill_estimator, ks_pvalue, ks_statistic, mean_stderr, ols_slope, TabulatedCdf};
use heavy_rmt::wigner_levy::{self, GridConfig};
use heavy_rmt::io::EnsembleConfig;

const BIN: &str = env!("CARGO_BIN_EXE_heavy-rmt");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn heavy_rmt(out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(BIN)
        .arg("--out")
        .arg(out)
        .args(args)
        .status()
        .map_err(|e| format!("spawn failed: {e}"))?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("heavy-rmt {args:?} exited with {status}"))
    }
}

fn summary(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("summary exists")).expect("summary parses")
}

fn band_fraction(path: &Path) -> f64 {
    summary(path)["band"]["fraction_within"].as_f64().expect("band fraction")
}

fn c1_stable_closed_forms() -> Outcome {
    let xs: Vec<f64> = (0..=2000).map(|i| -10.0 + 0.01 * i as f64).collect();
    let mut worst = (0.0f64, 0.0f64);
    for r in [1.0, 0.6] {
        let cauchy = StableParams::new(1.0, 0.0, r).unwrap();
        let gauss = StableParams::new(2.0, 0.0, r).unwrap();
        let s = 2f64.sqrt() * r;
        for &x in &xs {
            let c = r / (PI * (r * r + x * x));
            let g = (-x * x / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
            worst.0 = worst.0.max((stable_dist::pdf(x, &cauchy).unwrap() - c).abs());
            worst.1 = worst.1.max((stable_dist::pdf(x, &gauss).unwrap() - g).abs());
        }
    }
    outcome(
        worst.0 < 1e-8 && worst.1 < 1e-8,
        format!("sup error Cauchy {:.1e}, Gaussian {:.1e} on [-10, 10]", worst.0, worst.1),
    )
}

fn tabulated_cdf(p: &StableParams) -> TabulatedCdf {
    let l = 2000.0 * p.range;
    let x = sinh_grid(l, 8001, 0.05 * p.range).unwrap();
    let d: Vec<f64> = x.iter().map(|&t| stable_dist::pdf_with_tol(t, p, 1e-12).unwrap()).collect();
    let sd = StandardDensity::new(p.alpha, p.beta);
    let tail = |positive: bool| {
        let (c1, c2) = sd.tail_coefficients(positive);
        let y = l / p.range;
        c1 * y.powf(-p.alpha) / p.alpha + c2 * y.powf(-2.0 * p.alpha) / (2.0 * p.alpha)
    };
    TabulatedCdf::from_density(&x, &d, tail(false), tail(true)).unwrap()
}

fn c2_stability() -> Outcome {
    let p1 = StableParams::new(1.5, 0.4, 1.0).unwrap();
    let p2 = StableParams::new(1.5, -0.9, 0.7).unwrap();
    let sum = stable_dist::add_params(&p1, &p2).unwrap();
    let cdf = tabulated_cdf(&sum);
    let x = run_trials(1, 2024, 0, 1, |_, _, rng| {
        Ok((0..100_000)
            .map(|_| stable_dist::sample(&p1, rng) + stable_dist::sample(&p2, rng))
            .collect::<Vec<f64>>())
    })
    .unwrap()
    .remove(0);
    let d = ks_statistic(&x, |t| cdf.cdf(t));
    let p = ks_pvalue(d, x.len());
    outcome(p > 0.01, format!("KS D = {d:.4}, p = {p:.3} for 1e5 sums"))
}

fn c3_wl_peak() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [1.0, 1.25, 1.5, 1.95] {
        let t = Instant::now();
        let rp = wigner_levy::solve_running_params(alpha, &GridConfig::default(), 1e-9, 2000).unwrap();
        let got = wigner_levy::density(0.0, alpha, 1.0, &rp).unwrap();
        let want = wigner_levy::peak_density(alpha, 1.0);
        let secs = t.elapsed().as_secs_f64();
        pass &= (got - want).abs() < 1e-3 && secs < 120.0;
        parts.push(format!("a={alpha}: {got:.6} vs {want:.6} ({secs:.1} s)"));
    }
    outcome(pass, parts.join("; "))
}

fn fig_band(dir: &Path, fig: &str, alpha: f64, limit: f64) -> (bool, String) {
    let a = alpha.to_string();
    let t = Instant::now();
    if let Err(e) = heavy_rmt(dir, &[fig, "--alpha", &a, "--seed", "11"]) {
        return (false, e);
    }
    let secs = t.elapsed().as_secs_f64();
    let f = band_fraction(&dir.join(format!("{fig}_alpha{a}_summary.json")));
    (
        f >= 0.95 && secs < limit,
        format!("a={alpha}: {:.0}% of bins within 3 sigma ({secs:.1} s)", 100.0 * f),
    )
}

fn c4_fig1(dir: &Path) -> Outcome {
    let (p1, d1) = fig_band(dir, "fig1", 1.0, 600.0);
    let (p2, d2) = fig_band(dir, "fig1", 1.5, 600.0);
    outcome(p1 && p2, format!("{d1}; {d2}"))
}

fn c5_wl_tail() -> Outcome {
    let cfg = GridConfig {
        x_max: 100.0,
        nodes: 901,
        ..GridConfig::default()
    };
    let rp = wigner_levy::solve_running_params(1.25, &cfg, 1e-9, 1000).unwrap();
    let mut ratios = Vec::new();
    for l in [50.0, -50.0] {
        ratios.push(wigner_levy::density(l, 1.25, 1.0, &rp).unwrap() / wigner_levy::density_tail(l, 1.25, 1.0));
    }
    outcome(
        ratios.iter().all(|r| (0.95..=1.05).contains(r)),
        format!("ratio {:.4} at +50, {:.4} at -50", ratios[0], ratios[1]),
    )
}

fn c6_free_closed_forms() -> Outcome {
    let semi = FreeStableParams::standard(2.0).unwrap();
    let cauchy = FreeStableParams::standard(1.0).unwrap();
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let l = -5.0 + 0.1 * i as f64;
        let gs = if l.abs() < 2.0 {
            num_complex::Complex64::new(l / 2.0, -(4.0 - l * l).sqrt() / 2.0)
        } else {
            num_complex::Complex64::new((l - l.signum() * (l * l - 4.0).sqrt()) / 2.0, 0.0)
        };
        let gc = 1.0 / num_complex::Complex64::new(l, 1.0);
        worst = worst.max((free_levy::resolvent(l, &semi, 1e-14).unwrap() - gs).norm());
        worst = worst.max((free_levy::resolvent(l, &cauchy, 1e-14).unwrap() - gc).norm());
        worst = worst.max((free_levy::density(l, &semi).unwrap() - (-gs.im / PI)).abs());
        worst = worst.max((free_levy::density(l, &cauchy).unwrap() - (-gc.im / PI)).abs());
    }
    let mut pass = worst < 1e-8;
    let mut parts = vec![format!("closed-form error {worst:.1e}")];
    for alpha in [1.25, 1.5] {
        let p = FreeStableParams::standard(alpha).unwrap();
        let coef = |h: f64| (1.0 - PI * free_levy::density(h, &p).unwrap()) / (h * h);
        let est = (4.0 * coef(0.01) - coef(0.02)) / 3.0;
        let want = (3.0 - alpha) / (2.0 * alpha * alpha);
        let rel = (est / want - 1.0).abs();
        pass &= rel < 0.01;
        parts.push(format!("a={alpha}: quadratic coefficient off by {:.3}%", 100.0 * rel));
    }
    outcome(pass, parts.join("; "))
}

fn semicircle(l: f64, var: f64) -> f64 {
    let r2 = 4.0 * var;
    if l * l >= r2 {
        0.0
    } else {
        (r2 - l * l).sqrt() / (2.0 * PI * var)
    }
}

fn c7_free_round_trip() -> Outcome {
    let x: Vec<f64> = (0..4001).map(|i| -2.0 + 4.0 * i as f64 / 4000.0).collect();
    let rho = GridFunction::from_fn(x, |l| semicircle(l, 1.0)).unwrap();
    let g = free_levy::green_from_density(&rho, num_complex::Complex64::new(0.0, 4.0)).unwrap();
    let semi = || InverseGreen::new(CauchyTransform::new(&rho, None).unwrap(), 1e-13);
    let sum = free_add(semi(), semi());
    let xs: Vec<f64> = (-12..=12).map(|i| i as f64 * 0.2).collect();
    let curve = free_levy::density_curve_from_r(&sum, &xs, 1e-12).unwrap();
    let worst = xs
        .iter()
        .zip(&curve)
        .map(|(&l, &d)| (d - semicircle(l, 2.0)).abs())
        .fold(0.0, f64::max);
    let r = free_levy::r_from_green(&CauchyTransform::new(&rho, None).unwrap(), g, 1e-12).unwrap();
    let r_err = (r - g).norm();
    outcome(
        worst < 1e-4 && r_err < 1e-4,
        format!("sup error {worst:.1e} on |lambda| <= 2.4; R(G(4i)) error {r_err:.1e}"),
    )
}

fn c8_fig2(dir: &Path) -> Outcome {
    let t = Instant::now();
    if let Err(e) = heavy_rmt(dir, &["fig2", "--K", "1", "--K", "2", "--N", "200", "--trials", "100", "--seed", "5"]) {
        return outcome(false, e);
    }
    let secs = t.elapsed().as_secs_f64();
    let k1 = summary(&dir.join("fig2_K1_summary.json"))["ks_poisson"].as_f64().unwrap();
    let k2 = summary(&dir.join("fig2_K2_summary.json"))["ks_wigner_surmise"].as_f64().unwrap();
    outcome(
        k1 < 0.05 && k2 < 0.05 && secs < 300.0,
        format!("K=1 KS to Poisson {k1:.4}; K=2 KS to surmise {k2:.4} ({secs:.1} s)"),
    )
}

fn c9_fig3(dir: &Path) -> Outcome {
    let (p1, d1) = fig_band(dir, "fig3", 1.0, 600.0);
    let (p2, d2) = fig_band(dir, "fig3", 1.5, 600.0);
    outcome(p1 && p2, format!("{d1}; {d2}"))
}

fn c10_element_ipr() -> Outcome {
    let t = Instant::now();
    let p = StableParams::standard(0.5).unwrap();
    let y = run_trials(100, 10, 0, 0, |_, _, rng| ipr_elements(&sample_wigner_levy(1000, &p, rng))).unwrap();
    let (m, se) = mean_stderr(&y);
    let secs = t.elapsed().as_secs_f64();
    outcome(
        (0.45..=0.55).contains(&m) && secs < 120.0,
        format!("mean Y2 = {m:.4} +- {se:.4} over 100 matrices ({secs:.1} s)"),
    )
}

fn c11_localization() -> Outcome {
    let cfg = EnsembleConfig::WignerLevy {
        n: 400,
        alpha: 1.25,
        beta: 0.0,
        range: 1.0,
        scaling_exponent: None,
        trials: 50,
    };
    let samples = simulate(&cfg, 11, 0, true).unwrap();
    let g = ipr_by_abs_eigenvalue(&samples, 10).unwrap();
    let (centre, top) = (&g[0], &g[9]);
    outcome(
        top.mean > centre.mean,
        format!(
            "mean y2 top decile {:.4} +- {:.4}, central decile {:.5} +- {:.5}",
            top.mean, top.stderr, centre.mean, centre.stderr
        ),
    )
}

const Q: QuadConfig = QuadConfig {
    abs_tol: 1e-15,
    rel_tol: 1e-12,
    max_intervals: 4000,
};

/// `∫₀^∞ f(σ) g(σ) dσ` on `σ = e^t`.
fn sigma_mixture<G: Fn(f64) -> f64>(m: &MixtureParams, g: G, lo: f64) -> f64 {
    let pts: Vec<f64> = (0..=150).map(|i| lo.ln() + (60.0 - lo.ln()) * i as f64 / 150.0).collect();
    integrate_breakpoints(|t| t.exp() * deformed::scale_frequency_pdf(t.exp(), m).unwrap() * g(t.exp()), &pts, Q)
        .unwrap()
        .value
}

fn c12_deformed() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();

    let m5 = MixtureParams::standardized(5.0).unwrap();
    let x = run_trials(1, 12, 0, 1, |_, _, rng| {
        Ok((0..1_000_000).map(|_| deformed::sample_student(&m5, rng)).collect::<Vec<f64>>())
    })
    .unwrap()
    .remove(0);
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let (var, se) = mean_stderr(&sq);
    let want = m5.a * m5.a / (m5.alpha - 2.0);
    pass &= (var - want).abs() < 3.0 * se;
    parts.push(format!("Student variance {var:.4} vs {want:.4} (se {se:.4})"));

    let mut worst = 0.0f64;
    let mw = MixtureParams::new(3.0, 1.3).unwrap();
    for l in [0.0f64, 0.7, 2.0, 5.0, 30.0] {
        let mix = sigma_mixture(&mw, |s| deformed::semicircle_sigma(l, s), (l / 2.0).max(1e-3));
        let d = deformed::deformed_wigner_density(l, &mw).unwrap();
        worst = worst.max((d - mix).abs() / mix.max(1.0));
    }
    let m3 = MixtureParams::standardized(3.0).unwrap();
    for l in [0.1, 0.5, 1.0, 4.0, 20.0] {
        let mix = sigma_mixture(&m3, |s| deformed::marchenko_pastur_density(l / (s * s), 0.25) / (s * s), 1e-3);
        let d = deformed::deformed_wishart_density(l, 3.0, 0.25).unwrap();
        worst = worst.max((d - mix).abs() / mix.max(1.0));
    }
    pass &= worst < 1e-5;
    parts.push(format!("densities vs sigma-mixture oracles {worst:.1e}"));

    let cfg = WishartConfig {
        n: 200,
        t: 800,
        scale_model: ScaleModel::GlobalSigma,
        mixture: m3,
    };
    let spectra = run_trials(200, 12, 0, 0, |_, _, rng| Ok(deformed::sample_deformed_wishart(&cfg, rng)?.eigenvalues)).unwrap();
    let edges = uniform_edges(0.0, 5.0, 50).unwrap();
    let h = Histogram::from_trials(&spectra, edges.clone()).unwrap();
    let reference = bin_averages(&edges, |l| if l > 0.0 { deformed::deformed_wishart_density(l, 3.0, 0.25).unwrap() } else { 0.0 });
    let f = h.band_agreement(&reference, 3.0).unwrap();
    pass &= f >= 0.95;
    parts.push(format!("Wishart histogram {:.0}% of bins within 3 sigma", 100.0 * f));

    // Asserted on the density; the 200-matrix estimate is reported only.
    let ls = [100.0f64, 200.0, 400.0, 800.0];
    let lx: Vec<f64> = ls.iter().map(|l| l.ln()).collect();
    let ly: Vec<f64> = ls.iter().map(|&l| deformed::deformed_wishart_density(l, 3.0, 0.25).unwrap().ln()).collect();
    let slope = ols_slope(&lx, &ly);
    pass &= (slope + 2.5).abs() <= 0.1;
    let maxima: Vec<f64> = spectra.iter().map(|s| s.iter().copied().fold(0.0, f64::max)).collect();
    let k = 40;
    let gamma = hill_estimator(&maxima, k).unwrap();
    parts.push(format!(
        "density tail slope {slope:.4} vs -2.5; Monte Carlo slope {:.2} +- {:.2} (Hill, {k} of 200 maxima)",
        -1.0 - gamma,
        gamma / (k as f64).sqrt()
    ));
    outcome(pass, parts.join("; "))
}

fn c13_determinism(dir: &Path) -> Outcome {
    let args = ["fig2", "--K", "1", "--N", "200", "--trials", "100", "--seed", "7", "--workers", "1"];
    let (a, b) = (dir.join("first"), dir.join("second"));
    for d in [&a, &b] {
        if let Err(e) = heavy_rmt(d, &args) {
            return outcome(false, e);
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let same = names
        .iter()
        .all(|n| std::fs::read(a.join(n)).ok() == std::fs::read(b.join(n)).ok());
    outcome(same && !names.is_empty(), format!("{} files byte-identical across two runs: {same}", names.len()))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("stable-law closed forms", Box::new(c1_stable_closed_forms)),
        ("stability under addition", Box::new(c2_stability)),
        ("Wigner-Levy peak height", Box::new(c3_wl_peak)),
        ("fig1 preset", Box::new(|| c4_fig1(dir.path()))),
        ("Wigner-Levy tail", Box::new(c5_wl_tail)),
        ("free stable closed forms", Box::new(c6_free_closed_forms)),
        ("free pipeline round trip", Box::new(c7_free_round_trip)),
        ("fig2 preset", Box::new(|| c8_fig2(dir.path()))),
        ("fig3 preset", Box::new(|| c9_fig3(dir.path()))),
        ("element IPR", Box::new(c10_element_ipr)),
        ("eigenvector localization", Box::new(c11_localization)),
        ("deformed ensembles", Box::new(c12_deformed)),
        ("determinism", Box::new(|| c13_determinism(dir.path()))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {tag} {name}: {} [{:.1} s]", i + 1, o.detail, t.elapsed().as_secs_f64());
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
