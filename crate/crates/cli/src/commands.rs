use std::f64::consts::PI;
use std::path::Path;

use heavy_rmt::deformed::{self, MixtureParams};
use heavy_rmt::free_levy::{
    self, free_add, CauchyTransform, FreeStableParams, InverseGreen, RTransform, ResolventTracker,
};
use heavy_rmt::grid::GridFunction;
use heavy_rmt::io::{csv_table, load_config, DiagonalLaw, EnsembleConfig};
use heavy_rmt::matrix_mc::{
    self, bin_averages, eigen_sym, ipr_by_abs_eigenvalue, ipr_elements, poisson_spacing_cdf, run_trials,
    simulate, spectral_histogram, uniform_edges, unfolded_spacings, wigner_surmise_cdf, Histogram, IprGroup,
    SpectralSample,
};
use heavy_rmt::stable_dist::{self, StableParams};
use heavy_rmt::stats::{ks_statistic, mean_stderr};
use heavy_rmt::wigner_levy::{self, GridConfig};
use heavy_rmt::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::output::Run;
use crate::reference::{BandSummary, Reference};

struct Ctx<'a> {
    out: &'a Path,
    seed: u64,
    workers: usize,
}

impl Ctx<'_> {
    fn run<T: Serialize>(&self, stem: &str, command: &str, config: &T) -> Result<Run> {
        Run::new(self.out, stem, command, serde_json::to_value(config)?, self.seed, self.workers)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let workers = match cli.workers {
        Some(0) => return Err(Error::config("workers", "must be at least 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let ctx = Ctx {
        out: &cli.out,
        seed: cli.seed,
        workers,
    };
    match &cli.command {
        Command::StablePdf(a) => stable_pdf(&ctx, a),
        Command::WlDensity(a) => wl_density(&ctx, a),
        Command::FreeDensity(a) => free_density(&ctx, a),
        Command::FreePotential(a) => free_potential(&ctx, a),
        Command::FreeAdd(a) => free_add_laws(&ctx, a),
        Command::McSpectrum(a) => mc_spectrum(&ctx, a),
        Command::McSpacing(a) => mc_spacing(&ctx, a),
        Command::McIpr(a) => mc_ipr(&ctx, a),
        Command::DeformedDensity(a) => deformed_density(&ctx, a),
        Command::Fig1(a) => fig1(&ctx, a),
        Command::Fig2(a) => fig2(&ctx, a),
        Command::Fig3(a) => fig3(&ctx, a),
    }
}

fn grid_points(g: &Grid) -> Result<Vec<f64>> {
    if !(g.xmax > g.xmin) || !g.xmin.is_finite() || !g.xmax.is_finite() {
        return Err(Error::config("xmax", format!("[{}, {}] is not an interval", g.xmin, g.xmax)));
    }
    if g.points < 2 {
        return Err(Error::config("points", "must be at least 2"));
    }
    let h = g.xmax - g.xmin;
    Ok((0..g.points)
        .map(|i| g.xmin + h * i as f64 / (g.points - 1) as f64)
        .collect())
}

fn bin_edges(b: &Bins) -> Result<Vec<f64>> {
    if !(b.lmax > b.lmin) || b.bins == 0 {
        return Err(Error::config("bins", format!("[{}, {}] with {} bins", b.lmin, b.lmax, b.bins)));
    }
    uniform_edges(b.lmin, b.lmax, b.bins)
}

fn stable_pdf(ctx: &Ctx, a: &StablePdfArgs) -> Result<()> {
    let p = StableParams::new(a.alpha, a.beta, a.range)?;
    let xs = grid_points(&a.grid)?;
    let ys = xs.iter().map(|&x| stable_dist::pdf(x, &p)).collect::<Result<Vec<_>>>()?;
    let mut run = ctx.run("stable_pdf", "stable-pdf", &json!({ "alpha": a.alpha, "beta": a.beta, "range": a.range, "grid": grid_json(&a.grid) }))?;
    run.write_named(".csv", csv_table(&["x", "density"], &[&xs, &ys])?.as_bytes())?;
    run.finish()
}

fn grid_json(g: &Grid) -> serde_json::Value {
    json!({ "xmin": g.xmin, "xmax": g.xmax, "points": g.points })
}

fn wl_density(ctx: &Ctx, a: &WlDensityArgs) -> Result<()> {
    let cfg = GridConfig {
        x_max: a.x_max,
        nodes: a.nodes,
        ..GridConfig::default()
    };
    let xs = grid_points(&a.grid)?;
    let rp = wigner_levy::solve_running_params(a.alpha, &cfg, a.tol, a.max_iter)?;
    let ys = xs
        .iter()
        .map(|&l| wigner_levy::density_full(l, a.alpha, a.range, &rp))
        .collect::<Result<Vec<_>>>()?;
    let tail: Vec<f64> = xs.iter().map(|&l| wigner_levy::density_tail(l, a.alpha, a.range)).collect();
    let config = json!({ "alpha": a.alpha, "range": a.range, "solver": cfg, "tol": a.tol, "max_iter": a.max_iter, "grid": grid_json(&a.grid) });
    let mut run = ctx.run("wl_density", "wl-density", &config)?;
    run.write_named(".csv", csv_table(&["lambda", "density", "tail_asymptote"], &[&xs, &ys, &tail])?.as_bytes())?;
    run.write_named("_running_params.csv", rp.to_csv().as_bytes())?;
    run.finish()
}

fn free_params_json(a: &FreeArgs) -> serde_json::Value {
    json!({ "alpha": a.alpha, "beta": a.beta, "range": a.range, "grid": grid_json(&a.grid) })
}

fn free_density(ctx: &Ctx, a: &FreeArgs) -> Result<()> {
    let p = FreeStableParams::new(a.alpha, a.beta, a.range)?;
    let xs = grid_points(&a.grid)?;
    let g = ResolventTracker::new(&p, 1e-14).curve(&xs)?;
    let re: Vec<f64> = g.iter().map(|g| g.re).collect();
    let im: Vec<f64> = g.iter().map(|g| g.im).collect();
    let rho: Vec<f64> = im.iter().map(|v| (-v / PI).max(0.0)).collect();
    let mut run = ctx.run("free_density", "free-density", &free_params_json(a))?;
    let header = ["lambda", "density", "green_re", "green_im"];
    run.write_named(".csv", csv_table(&header, &[&xs, &rho, &re, &im])?.as_bytes())?;
    run.finish()
}

fn free_potential(ctx: &Ctx, a: &FreeArgs) -> Result<()> {
    let p = FreeStableParams::new(a.alpha, a.beta, a.range)?;
    let xs = grid_points(&a.grid)?;
    let v = xs.iter().map(|&l| free_levy::potential(l, &p)).collect::<Result<Vec<_>>>()?;
    let mut run = ctx.run("free_potential", "free-potential", &free_params_json(a))?;
    run.write_named(".csv", csv_table(&["lambda", "potential"], &[&xs, &v])?.as_bytes())?;
    run.finish()
}

type BoxedR = Box<dyn RTransform>;

fn parse_number(spec: &str, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::config("law", format!("{spec}: cannot parse {field:?} as a number")))
}

fn read_table(path: &Path) -> Result<GridFunction> {
    let text = std::fs::read_to_string(path)?;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::config("law", format!("{}:{}: bad number {s:?}", path.display(), i + 1)))
        };
        match fields.as_slice() {
            [""] => continue,
            [a, b, ..] => {
                x.push(parse(a)?);
                y.push(parse(b)?);
            }
            _ => return Err(Error::config("law", format!("{}:{}: expected two columns", path.display(), i + 1))),
        }
    }
    GridFunction::new(x, y)
}

fn parse_law(spec: &str, tol: f64) -> Result<(BoxedR, serde_json::Value)> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "free-stable" => {
            let f: Vec<&str> = rest.split(':').collect();
            if f.is_empty() || f.len() > 3 || f[0].is_empty() {
                return Err(Error::config("law", format!("{spec}: expected free-stable:ALPHA[:BETA[:RANGE]]")));
            }
            let alpha = parse_number(spec, f[0])?;
            let beta = f.get(1).map_or(Ok(0.0), |s| parse_number(spec, s))?;
            let range = f.get(2).map_or(Ok(1.0), |s| parse_number(spec, s))?;
            let p = FreeStableParams::new(alpha, beta, range)?;
            Ok((Box::new(p), json!({ "law": "free-stable", "alpha": alpha, "beta": beta, "range": range })))
        }
        "semicircle" => {
            let radius = parse_number(spec, rest)?;
            // Semicircle of radius 2r is the α = 2 law of range r.
            let p = FreeStableParams::new(2.0, 0.0, radius / 2.0)?;
            Ok((Box::new(p), json!({ "law": "semicircle", "radius": radius })))
        }
        "table" => {
            let rho = read_table(Path::new(rest))?;
            let g = CauchyTransform::new(&rho, None)?;
            Ok((Box::new(InverseGreen::new(g, tol)), json!({ "law": "table", "path": rest })))
        }
        _ => Err(Error::config("law", format!("{spec}: unknown law {kind:?}"))),
    }
}

fn free_add_laws(ctx: &Ctx, a: &FreeAddArgs) -> Result<()> {
    if a.laws.len() < 2 {
        return Err(Error::config("law", "give at least two laws"));
    }
    let xs = grid_points(&a.grid)?;
    let mut laws = Vec::new();
    let mut sum: Option<BoxedR> = None;
    for spec in &a.laws {
        let (r, desc) = parse_law(spec, a.tol)?;
        laws.push(desc);
        sum = Some(match sum {
            None => r,
            Some(acc) => Box::new(free_add(acc, r)),
        });
    }
    let sum = sum.expect("at least two laws");
    let rho = free_levy::density_curve_from_r(&sum, &xs, a.tol)?;
    let config = json!({ "laws": laws, "tol": a.tol, "grid": grid_json(&a.grid) });
    let mut run = ctx.run("free_add", "free-add", &config)?;
    run.write_named(".csv", csv_table(&["lambda", "density"], &[&xs, &rho])?.as_bytes())?;
    run.finish()
}

#[derive(Serialize)]
struct SpectrumSummary {
    kind: &'static str,
    trials: usize,
    band: Option<BandSummary>,
}

/// Histogram CSV (and band summary when a reference exists) of `samples`.
fn write_spectrum(run: &mut Run, cfg: &EnsembleConfig, samples: &[SpectralSample], edges: Vec<f64>) -> Result<()> {
    let h = spectral_histogram(samples, 0.0, edges)?;
    let reference = Reference::for_config(cfg)?
        .map(|r| r.bin_averages(&h.edges))
        .transpose()?;
    let centers = h.centers();
    let lo = &h.edges[..h.edges.len() - 1];
    let hi = &h.edges[1..];
    let mc = h.absolute_density();
    let se = h.absolute_stderr();
    let table = match &reference {
        Some(r) => csv_table(
            &["lambda", "bin_lo", "bin_hi", "density", "mc_density", "mc_stderr"],
            &[&centers, lo, hi, r, &mc, &se],
        )?,
        None => csv_table(&["lambda", "bin_lo", "bin_hi", "mc_density", "mc_stderr"], &[&centers, lo, hi, &mc, &se])?,
    };
    run.write_named(".csv", table.as_bytes())?;
    let summary = SpectrumSummary {
        kind: cfg.kind(),
        trials: samples.len(),
        band: reference.map(|r| BandSummary::new(&h, &r)).transpose()?,
    };
    run.write_json("_summary.json", &summary)
}

fn mc_spectrum(ctx: &Ctx, a: &McSpectrumArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let edges = bin_edges(&a.bins)?;
    let samples = simulate(&cfg, ctx.seed, ctx.workers, false)?;
    let mut run = ctx.run("mc_spectrum", "mc-spectrum", &cfg)?;
    write_spectrum(&mut run, &cfg, &samples, edges)?;
    if a.dump_eigenvalues {
        for (i, s) in samples.iter().enumerate() {
            run.write_named(&format!("_trial{i:05}.csv"), s.to_csv().as_bytes())?;
        }
    }
    run.finish()
}

#[derive(Serialize)]
struct SpacingSummary {
    spacings: usize,
    bulk_fraction: f64,
    ks_poisson: f64,
    ks_wigner_surmise: f64,
}

fn write_spacings(run: &mut Run, samples: &[SpectralSample], bulk: f64, smax: f64, bins: usize) -> Result<()> {
    if !(smax > 0.0) || bins == 0 {
        return Err(Error::config("smax", format!("need smax > 0 and bins > 0, got {smax} and {bins}")));
    }
    let s = unfolded_spacings(samples, bulk)?;
    let h = Histogram::from_values(&s, uniform_edges(0.0, smax, bins)?)?;
    let poisson = bin_averages(&h.edges, |x| (-x).exp());
    let surmise = bin_averages(&h.edges, |x| 0.5 * PI * x * (-0.25 * PI * x * x).exp());
    let header = ["s", "bin_lo", "bin_hi", "mc_density", "mc_stderr", "poisson", "wigner_surmise"];
    let table = csv_table(
        &header,
        &[
            &h.centers(),
            &h.edges[..bins],
            &h.edges[1..],
            &h.absolute_density(),
            &h.absolute_stderr(),
            &poisson,
            &surmise,
        ],
    )?;
    run.write_named(".csv", table.as_bytes())?;
    let summary = SpacingSummary {
        spacings: s.len(),
        bulk_fraction: bulk,
        ks_poisson: ks_statistic(&s, poisson_spacing_cdf),
        ks_wigner_surmise: ks_statistic(&s, wigner_surmise_cdf),
    };
    run.write_json("_summary.json", &summary)
}

fn mc_spacing(ctx: &Ctx, a: &McSpacingArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let samples = simulate(&cfg, ctx.seed, ctx.workers, false)?;
    let mut run = ctx.run("mc_spacing", "mc-spacing", &cfg)?;
    write_spacings(&mut run, &samples, a.bulk, a.smax, a.bins)?;
    run.finish()
}

#[derive(Serialize)]
struct IprSummary {
    trials: usize,
    element_ipr_mean: f64,
    element_ipr_stderr: f64,
    eigenvector_groups: Option<Vec<IprGroup>>,
}

fn mc_ipr(ctx: &Ctx, a: &McIprArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    cfg.validate()?;
    let draws = run_trials(cfg.trials(), ctx.seed, 0, ctx.workers, |_, _, rng| {
        let (m, factor) = matrix_mc::sample_matrix(&cfg, rng)?;
        let y = ipr_elements(&m)?;
        let s = if a.vectors { Some(eigen_sym(&m, true)?.scaled(factor)) } else { None };
        Ok((y, s))
    })?;
    let ipr: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let (mean, stderr) = mean_stderr(&ipr);
    let mut run = ctx.run("mc_ipr", "mc-ipr", &cfg)?;
    let index: Vec<f64> = (0..ipr.len()).map(|i| i as f64).collect();
    run.write_named("_elements.csv", csv_table(&["trial", "ipr"], &[&index, &ipr])?.as_bytes())?;
    let groups = if a.vectors {
        let samples: Vec<SpectralSample> = draws.into_iter().filter_map(|d| d.1).collect();
        let g = ipr_by_abs_eigenvalue(&samples, a.groups)?;
        let col = |f: fn(&IprGroup) -> f64| g.iter().map(f).collect::<Vec<f64>>();
        let table = csv_table(
            &["abs_lambda_lo", "abs_lambda_hi", "y2_mean", "y2_stderr", "count"],
            &[
                &col(|g| g.abs_lambda_lo),
                &col(|g| g.abs_lambda_hi),
                &col(|g| g.mean),
                &col(|g| g.stderr),
                &col(|g| g.count as f64),
            ],
        )?;
        run.write_named("_vectors.csv", table.as_bytes())?;
        Some(g)
    } else {
        None
    };
    let summary = IprSummary {
        trials: ipr.len(),
        element_ipr_mean: mean,
        element_ipr_stderr: stderr,
        eigenvector_groups: groups,
    };
    run.write_json("_summary.json", &summary)?;
    run.finish()
}

fn deformed_density(ctx: &Ctx, a: &DeformedArgs) -> Result<()> {
    let xs = grid_points(&a.grid)?;
    let m = MixtureParams::new(a.alpha, a.a.unwrap_or(a.alpha.sqrt()))?;
    let config = json!({ "ensemble": format!("{:?}", a.ensemble).to_lowercase(), "alpha": m.alpha, "a": m.a, "ratio": a.ratio, "grid": grid_json(&a.grid) });
    let mut run = ctx.run("deformed_density", "deformed-density", &config)?;
    let table = match a.ensemble {
        DeformedKind::Wigner => {
            let rho = xs
                .iter()
                .map(|&l| deformed::deformed_wigner_density(l, &m))
                .collect::<Result<Vec<_>>>()?;
            csv_table(&["lambda", "density"], &[&xs, &rho])?
        }
        DeformedKind::Wishart => {
            if a.a.is_some_and(|v| v != a.alpha.sqrt()) {
                return Err(Error::config("a", "the Wishart density is implemented for a = sqrt(alpha) only"));
            }
            let rho = xs
                .iter()
                .map(|&l| if l > 0.0 { deformed::deformed_wishart_density(l, a.alpha, a.ratio) } else { Ok(0.0) })
                .collect::<Result<Vec<_>>>()?;
            let mp: Vec<f64> = xs.iter().map(|&l| deformed::marchenko_pastur_density(l, a.ratio)).collect();
            csv_table(&["lambda", "density", "marchenko_pastur"], &[&xs, &rho, &mp])?
        }
    };
    run.write_named(".csv", table.as_bytes())?;
    run.finish()
}

fn fig1(ctx: &Ctx, a: &Fig1Args) -> Result<()> {
    let cfg = EnsembleConfig::WignerLevy {
        n: a.n,
        alpha: a.alpha,
        beta: 0.0,
        range: 1.0,
        scaling_exponent: None,
        trials: a.matrices,
    };
    cfg.validate()?;
    let edges = bin_edges(&a.bins)?;
    let samples = simulate(&cfg, ctx.seed, ctx.workers, false)?;
    let mut run = ctx.run(&format!("fig1_alpha{}", a.alpha), "fig1", &cfg)?;
    write_spectrum(&mut run, &cfg, &samples, edges)?;
    run.finish()
}

fn fig2(ctx: &Ctx, a: &Fig2Args) -> Result<()> {
    for &k in &a.k {
        let cfg = EnsembleConfig::FreeSumDiag {
            n: a.n,
            k,
            diagonal: DiagonalLaw::Semicircle { radius: a.radius },
            alpha: None,
            trials: a.trials,
        };
        cfg.validate()?;
        let samples = simulate(&cfg, ctx.seed, ctx.workers, false)?;
        let mut run = ctx.run(&format!("fig2_K{k}"), "fig2", &cfg)?;
        write_spacings(&mut run, &samples, a.bulk, a.smax, a.bins)?;
        run.finish()?;
    }
    Ok(())
}

fn fig3(ctx: &Ctx, a: &Fig3Args) -> Result<()> {
    let cfg = EnsembleConfig::FreeSumWl {
        n: a.n,
        k: a.k,
        alpha: a.alpha,
        range: Some(free_levy::matched_wl_range(a.alpha)),
        trials: a.trials,
    };
    cfg.validate()?;
    let edges = bin_edges(&a.bins)?;
    let samples = simulate(&cfg, ctx.seed, ctx.workers, false)?;
    let mut run = ctx.run(&format!("fig3_alpha{}", a.alpha), "fig3", &cfg)?;
    write_spectrum(&mut run, &cfg, &samples, edges)?;
    run.finish()
}
