//! Matrix ensemble samplers, a dense symmetric eigensolver and spectral
//! statistics.
//!
//! Trials are independent work units. Trial `i` draws from its own ChaCha8
//! stream seeded by `derive_seed(root, stream, i)`, and results are collected
//! in trial order, so outputs do not depend on scheduling or worker count.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::EnsembleConfig;
use crate::stable_dist::{self, StableParams};
use crate::stats::derive_seed;

/// Spectrum of one matrix, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector of `eigenvalues[j]`.
    #[serde(skip)]
    pub eigenvectors: Option<DMatrix<f64>>,
    pub config: Option<EnsembleConfig>,
    pub seed: Option<u64>,
}

impl SpectralSample {
    pub fn with_provenance(mut self, config: &EnsembleConfig, seed: u64) -> Self {
        self.config = Some(config.clone());
        self.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Multiply every eigenvalue by `factor > 0`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for v in &mut self.eigenvalues {
            *v *= factor;
        }
        self
    }

    /// `max ‖Av − λv‖_∞` over stored pairs.
    pub fn max_residual(&self, a: &DMatrix<f64>) -> Option<f64> {
        let v = self.eigenvectors.as_ref()?;
        let av = a * v;
        let mut worst: f64 = 0.0;
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            for i in 0..a.nrows() {
                worst = worst.max((av[(i, j)] - l * v[(i, j)]).abs());
            }
        }
        Some(worst)
    }

    /// One-column CSV dump.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eigenvalue\n");
        for &v in &self.eigenvalues {
            s.push_str(&crate::io::fmt_f64(v));
            s.push('\n');
        }
        s
    }
}

/// Symmetric matrix with i.i.d. entries `A_ij ~ p` for `i ≤ j` (unscaled).
pub fn sample_wigner_levy<R: Rng + ?Sized>(n: usize, p: &StableParams, rng: &mut R) -> DMatrix<f64> {
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = stable_dist::sample(p, rng);
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    a
}

/// GOE matrix: off-diagonal variance σ², diagonal 2σ².
pub fn sample_goe<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> DMatrix<f64> {
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let z: f64 = rng.sample(StandardNormal);
            if i == j {
                a[(i, i)] = std::f64::consts::SQRT_2 * sigma * z;
            } else {
                a[(i, j)] = sigma * z;
                a[(j, i)] = sigma * z;
            }
        }
    }
    a
}

/// Full spectrum of a symmetric matrix by Householder tridiagonalization and
/// implicit-shift QL. Only the lower triangle is read.
pub fn eigen_sym(a: &DMatrix<f64>, want_vectors: bool) -> Result<SpectralSample> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Domain(format!("{}×{} matrix is not square", n, a.ncols())));
    }
    if n == 0 {
        return Ok(SpectralSample {
            eigenvalues: Vec::new(),
            eigenvectors: want_vectors.then(|| DMatrix::zeros(0, 0)),
            config: None,
            seed: None,
        });
    }
    // Row-major working copy, symmetrized from the lower triangle.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            v[i * n + j] = a[(i, j)];
            v[j * n + i] = a[(i, j)];
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e, n);
    // Rows of `w` are the columns of the accumulated transform.
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            w[j * n + i] = v[i * n + j];
        }
    }
    drop(v);
    ql_implicit(&mut d, &mut e, want_vectors.then_some(&mut w[..]), n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigenvalues = order.iter().map(|&i| d[i]).collect();
    let eigenvectors = want_vectors.then(|| DMatrix::from_fn(n, n, |r, c| w[order[c] * n + r]));
    Ok(SpectralSample {
        eigenvalues,
        eigenvectors,
        config: None,
        seed: None,
    })
}

/// Householder reduction of the symmetric row-major `v` to tridiagonal form
/// `(d, e)`, with `e[i]` coupling `i−1` and `i`; `v` returns the orthogonal
/// transform.
fn tridiagonalize(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for dk in d[..i].iter_mut() {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = if f > 0.0 { -h.sqrt() } else { h.sqrt() };
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|x| *x = 0.0);
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    // Accumulate the transform.
    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal `(d, e)`; rotations are applied to
/// the rows of `w` when given.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut w: Option<&mut [f64]>, n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Eigensolver(l));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d[l + 2..n].iter_mut() {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(w) = w.as_deref_mut() {
                        let (lo, hi) = w.split_at_mut((i + 1) * n);
                        let row_i = &mut lo[i * n..];
                        let row_i1 = &mut hi[..n];
                        for k in 0..n {
                            let t = row_i1[k];
                            row_i1[k] = s * row_i[k] + c * t;
                            row_i[k] = c * row_i[k] - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Element inverse participation ratio `Σ w²` with `w_ij = |a_ij|/Σ|a_ij|`
/// over `i ≤ j`. This is the per-matrix statistic; callers average over the
/// ensemble.
pub fn ipr_elements(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            let x = a[(i, j)].abs();
            s1 += x;
            s2 += x * x;
        }
    }
    if !(s1 > 0.0) {
        return Err(Error::Degenerate("all matrix elements vanish".into()));
    }
    Ok(s2 / (s1 * s1))
}

/// `Σ vᵢ⁴` of a unit vector.
pub fn ipr_eigenvector(v: &[f64]) -> Result<f64> {
    let norm2: f64 = v.iter().map(|x| x * x).sum();
    if (norm2.sqrt() - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!("vector norm {} is not 1", norm2.sqrt())));
    }
    Ok(v.iter().map(|x| x.powi(4)).sum())
}

/// Eigenvector IPRs pooled over samples and split by `|λ|` rank into
/// equal-count groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IprGroup {
    pub abs_lambda_lo: f64,
    pub abs_lambda_hi: f64,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// `groups` equal-count bins of `|λ|` with the mean `y₂` of each; the samples
/// must carry eigenvectors.
pub fn ipr_by_abs_eigenvalue(samples: &[SpectralSample], groups: usize) -> Result<Vec<IprGroup>> {
    let mut pairs = Vec::new();
    for s in samples {
        let v = s
            .eigenvectors
            .as_ref()
            .ok_or_else(|| Error::Domain("eigenvector IPR needs samples with eigenvectors".into()))?;
        for (j, &l) in s.eigenvalues.iter().enumerate() {
            let col: Vec<f64> = v.column(j).iter().copied().collect();
            pairs.push((l.abs(), ipr_eigenvector(&col)?));
        }
    }
    if groups == 0 || pairs.len() < groups {
        return Err(Error::InsufficientData {
            needed: groups.max(1),
            got: pairs.len(),
        });
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok((0..groups)
        .map(|g| {
            let chunk = &pairs[g * pairs.len() / groups..(g + 1) * pairs.len() / groups];
            let y: Vec<f64> = chunk.iter().map(|p| p.1).collect();
            let (mean, stderr) = crate::stats::mean_stderr(&y);
            IprGroup {
                abs_lambda_lo: chunk[0].0,
                abs_lambda_hi: chunk[chunk.len() - 1].0,
                mean,
                stderr,
                count: chunk.len(),
            }
        })
        .collect())
}

/// Binned density estimate.
///
/// `density` is normalized over the counts inside the edges, so
/// `Σ density·width = 1`; `outside` counts values beyond the edges.
/// `stderr = √count/(inside·width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    pub outside: u64,
    /// Standard error of the per-trial estimates of the absolute density
    /// (see [`Histogram::absolute_density`]), when built from trials.
    #[serde(default)]
    pub trial_stderr: Option<Vec<f64>>,
}

pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if !(hi > lo) || bins == 0 {
        return Err(Error::Domain(format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
    }
    Ok((0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect())
}

fn bin_index(edges: &[f64], x: f64) -> Option<usize> {
    let nb = edges.len() - 1;
    if !(x >= edges[0] && x <= edges[nb]) {
        return None;
    }
    Some((edges.partition_point(|&e| e <= x).max(1) - 1).min(nb - 1))
}

impl Histogram {
    pub fn from_values(values: &[f64], edges: Vec<f64>) -> Result<Self> {
        Self::from_groups(&[values], edges, false)
    }

    /// Pooled histogram of several trials, with trial-level standard errors.
    pub fn from_trials<T: AsRef<[f64]>>(trials: &[T], edges: Vec<f64>) -> Result<Self> {
        Self::from_groups(trials, edges, true)
    }

    fn from_groups<T: AsRef<[f64]>>(groups: &[T], edges: Vec<f64>, per_trial: bool) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("histogram edges must be strictly ascending".into()));
        }
        let nb = edges.len() - 1;
        let widths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
        let mut counts = vec![0u64; nb];
        let mut outside = 0u64;
        let mut sum = vec![0.0; nb];
        let mut sum2 = vec![0.0; nb];
        for g in groups {
            let g = g.as_ref();
            let mut local = vec![0u64; nb];
            for &x in g {
                match bin_index(&edges, x) {
                    Some(b) => local[b] += 1,
                    None => outside += 1,
                }
            }
            for b in 0..nb {
                counts[b] += local[b];
                if !g.is_empty() {
                    let est = local[b] as f64 / (g.len() as f64 * widths[b]);
                    sum[b] += est;
                    sum2[b] += est * est;
                }
            }
        }
        let inside: u64 = counts.iter().sum();
        let norm = inside.max(1) as f64;
        let density = counts.iter().zip(&widths).map(|(&c, w)| c as f64 / (norm * w)).collect();
        let stderr = counts.iter().zip(&widths).map(|(&c, w)| (c as f64).sqrt() / (norm * w)).collect();
        let trial_stderr = (per_trial && groups.len() > 1).then(|| {
            let t = groups.len() as f64;
            (0..nb)
                .map(|b| {
                    let mean = sum[b] / t;
                    let var = ((sum2[b] - t * mean * mean) / (t - 1.0)).max(0.0);
                    (var / t).sqrt()
                })
                .collect()
        });
        Ok(Self {
            edges,
            counts,
            density,
            stderr,
            outside,
            trial_stderr,
        })
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.outside
    }

    /// Fraction of all values per unit length, comparable with a density on
    /// the whole line.
    pub fn absolute_density(&self) -> Vec<f64> {
        let f = self.counts.iter().sum::<u64>() as f64 / self.total().max(1) as f64;
        self.density.iter().map(|d| d * f).collect()
    }

    /// Band widths for [`Self::absolute_density`]: trial-level when
    /// available, Poisson otherwise.
    pub fn absolute_stderr(&self) -> Vec<f64> {
        if let Some(t) = &self.trial_stderr {
            return t.clone();
        }
        let f = self.counts.iter().sum::<u64>() as f64 / self.total().max(1) as f64;
        self.stderr.iter().map(|s| s * f).collect()
    }

    /// Fraction of bins with `|mc − reference| ≤ k·stderr`, where `reference`
    /// holds the bin averages of the target density.
    pub fn band_agreement(&self, reference: &[f64], k: f64) -> Result<f64> {
        if reference.len() != self.counts.len() {
            return Err(Error::Domain("reference length differs from bin count".into()));
        }
        let d = self.absolute_density();
        let s = self.absolute_stderr();
        let ok = d.iter().zip(&s).zip(reference).filter(|((d, s), r)| (*d - *r).abs() <= k * *s).count();
        Ok(ok as f64 / reference.len() as f64)
    }
}

/// Bin averages of `f` over `edges` by 8-point Gauss–Legendre per bin.
pub fn bin_averages<F: FnMut(f64) -> f64>(edges: &[f64], mut f: F) -> Vec<f64> {
    let gl = crate::quad::GaussLegendre::new(8);
    edges.windows(2).map(|w| gl.integrate(&mut f, w[0], w[1]) / (w[1] - w[0])).collect()
}

/// [`bin_averages`] for evaluators that take every quadrature node in one
/// ascending batch.
pub fn bin_averages_batch<F>(edges: &[f64], f: F) -> Result<Vec<f64>>
where
    F: FnOnce(&[f64]) -> Result<Vec<f64>>,
{
    let gl = crate::quad::GaussLegendre::new(8);
    let nodes: Vec<f64> = edges
        .windows(2)
        .flat_map(|w| {
            let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            gl.nodes.iter().map(move |x| c + h * x)
        })
        .collect();
    let values = f(&nodes)?;
    if values.len() != nodes.len() {
        return Err(Error::Domain("batch evaluator returned the wrong number of values".into()));
    }
    Ok(values
        .chunks(gl.nodes.len())
        .map(|v| 0.5 * v.iter().zip(&gl.weights).map(|(y, w)| y * w).sum::<f64>())
        .collect())
}

/// Pooled spectral histogram of `A/N^{scaling_exponent}`.
///
/// The samples hold unscaled spectra of `N×N` matrices; every sample must
/// carry the same config when configs are present.
pub fn spectral_histogram(samples: &[SpectralSample], scaling_exponent: f64, edges: Vec<f64>) -> Result<Histogram> {
    if let Some(first) = samples.first() {
        if samples.iter().any(|s| s.config != first.config) {
            return Err(Error::Domain("samples do not share a config".into()));
        }
    }
    let scaled: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let f = (s.len() as f64).powf(-scaling_exponent);
            s.eigenvalues.iter().map(|v| v * f).collect()
        })
        .collect();
    Histogram::from_trials(&scaled, edges)
}

/// Nearest-neighbour spacings from the central `bulk_fraction` of each
/// spectrum, each divided by the local mean spacing over a window of
/// `2⌈√N⌉` neighbours, then rescaled to unit mean.
pub fn unfolded_spacings(samples: &[SpectralSample], bulk_fraction: f64) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(bulk_fraction > 0.0 && bulk_fraction <= 1.0) {
        return Err(Error::config("bulk_fraction", format!("{bulk_fraction} not in (0, 1]")));
    }
    let mut out = Vec::new();
    for s in samples {
        let ev = &s.eigenvalues;
        let n = ev.len();
        let w = (n as f64).sqrt().ceil() as usize;
        if n < 2 * w + 2 {
            return Err(Error::config("N", format!("{n} eigenvalues are too few for a window of {}", 2 * w)));
        }
        let keep = ((bulk_fraction * n as f64).round() as usize).clamp(2, n);
        let start = (n - keep) / 2;
        for i in start..start + keep - 1 {
            let lo = i.saturating_sub(w).min(n - 1 - 2 * w);
            let hi = lo + 2 * w;
            let local = (ev[hi] - ev[lo]) / (2 * w) as f64;
            if local > 0.0 {
                out.push((ev[i + 1] - ev[i]) / local);
            }
        }
    }
    let mean = out.iter().sum::<f64>() / out.len().max(1) as f64;
    if !(mean > 0.0) {
        return Err(Error::Degenerate("all spacings vanish".into()));
    }
    out.iter_mut().for_each(|s| *s /= mean);
    Ok(out)
}

pub fn spacing_histogram(samples: &[SpectralSample], bulk_fraction: f64, edges: Vec<f64>) -> Result<Histogram> {
    Histogram::from_values(&unfolded_spacings(samples, bulk_fraction)?, edges)
}

/// Poisson spacing CDF `1 − e^{−s}`.
pub fn poisson_spacing_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        -(-s).exp_m1()
    }
}

/// Wigner surmise CDF `1 − e^{−πs²/4}`.
pub fn wigner_surmise_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        -(-std::f64::consts::PI * s * s / 4.0).exp_m1()
    }
}

/// Run `trials` independent work units on `workers` threads (0 = all cores)
/// and return their results in trial order.
pub fn run_trials<T, F>(trials: usize, root_seed: u64, stream: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("worker pool: {e}")))?;
    pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(root_seed, stream, i as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                f(i, seed, &mut rng)
            })
            .collect()
    })
}

/// One draw of the ensemble matrix together with the factor that maps its
/// spectrum onto the ensemble's normalization.
pub fn sample_matrix<R: Rng + ?Sized>(cfg: &EnsembleConfig, rng: &mut R) -> Result<(DMatrix<f64>, f64)> {
    match *cfg {
        EnsembleConfig::WignerLevy {
            n,
            alpha,
            beta,
            range,
            scaling_exponent,
            ..
        } => {
            let p = StableParams::new(alpha, beta, range)?;
            let e = scaling_exponent.unwrap_or(1.0 / alpha);
            Ok((sample_wigner_levy(n, &p, rng), (n as f64).powf(-e)))
        }
        EnsembleConfig::Goe {
            n,
            sigma,
            scaling_exponent,
            ..
        } => Ok((sample_goe(n, sigma, rng), (n as f64).powf(-scaling_exponent.unwrap_or(0.5)))),
        EnsembleConfig::FreeSumDiag { .. } | EnsembleConfig::FreeSumWl { .. } => {
            Ok((crate::free_levy::free_sum_matrix(cfg, rng)?, 1.0))
        }
        EnsembleConfig::DeformedWigner { .. } | EnsembleConfig::WishartStudent { .. } => {
            Ok((crate::deformed::sample_matrix(cfg, rng)?, 1.0))
        }
    }
}

/// Spectrum of one draw of `cfg` seeded by `seed`, already multiplied by the
/// ensemble's normalization factor.
pub fn sample_spectrum(cfg: &EnsembleConfig, seed: u64, want_vectors: bool) -> Result<SpectralSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, factor) = sample_matrix(cfg, &mut rng)?;
    let s = eigen_sym(&a, want_vectors)?;
    Ok(scale_spectrum(s, factor).with_provenance(cfg, seed))
}

fn scale_spectrum(s: SpectralSample, factor: f64) -> SpectralSample {
    // Eigenvectors are unchanged by a positive rescaling.
    s.scaled(factor)
}

/// All trials of `cfg`, seeded from `root_seed`.
pub fn simulate(cfg: &EnsembleConfig, root_seed: u64, workers: usize, want_vectors: bool) -> Result<Vec<SpectralSample>> {
    cfg.validate()?;
    run_trials(cfg.trials(), root_seed, 0, workers, |_, seed, _| sample_spectrum(cfg, seed, want_vectors))
}
