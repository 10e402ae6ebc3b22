//! Scale-mixture deformations of Gaussian and Wishart ensembles.
//!
//! A random scale σ with density `f(σ) ∝ σ^{−1}(a²/2σ²)^{α/2}e^{−a²/2σ²}`
//! (so `ζ = a²/2σ²` is Gamma(α/2, 1)) multiplies Gaussian variables. The
//! element law becomes Student's, the Wigner density an average of
//! semicircles and the Wishart density an average of Marčenko–Pastur laws.
//!
//! The Wishart mixture density is a-free only for `a² = α`, the
//! standardization under which the element law is the unit Student-t law with
//! α degrees of freedom; samplers default to it. Marčenko–Pastur edges are
//! `(1 ± √r)²` with `r = N/T ≤ 1`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::io::{EnsembleConfig, ScaleModel};
use crate::matrix_mc::{eigen_sym, SpectralSample};
use crate::quad::{integrate, integrate_breakpoints, QuadConfig};

/// Tail index α and scale constant a of the scale-frequency density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureParams {
    pub alpha: f64,
    pub a: f64,
}

impl MixtureParams {
    pub fn new(alpha: f64, a: f64) -> Result<Self> {
        let m = Self { alpha, a };
        m.validate()?;
        Ok(m)
    }

    /// `a = √α`.
    pub fn standardized(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha.sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha = {} must be positive", self.alpha)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::Domain(format!("a = {} must be positive", self.a)));
        }
        Ok(())
    }

    /// One draw of σ: `a/√(2ζ)` with `ζ ~ Gamma(α/2, 1)`.
    pub fn sample_sigma<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = Gamma::new(self.alpha / 2.0, 1.0).expect("validated shape");
        let z: f64 = g.sample(rng);
        self.a / (2.0 * z).sqrt()
    }
}

const QUAD: QuadConfig = QuadConfig {
    abs_tol: 1e-14,
    rel_tol: 1e-11,
    max_intervals: 2000,
};

/// Scale-frequency density `f(σ)`.
pub fn scale_frequency_pdf(sigma: f64, m: &MixtureParams) -> Result<f64> {
    m.validate()?;
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma = {sigma} must be positive")));
    }
    let z = m.a * m.a / (2.0 * sigma * sigma);
    let h = m.alpha / 2.0;
    Ok((2.0f64.ln() - ln_gamma(h) + h * z.ln() - z - sigma.ln()).exp())
}

/// Student density `Γ((α+1)/2)/(a√π Γ(α/2))·(1 + (x/a)²)^{−(α+1)/2}`.
pub fn student_pdf(x: f64, m: &MixtureParams) -> f64 {
    let (al, a) = (m.alpha, m.a);
    let c = (ln_gamma((al + 1.0) / 2.0) - ln_gamma(al / 2.0)).exp() / (a * PI.sqrt());
    c * (1.0 + (x / a).powi(2)).powf(-(al + 1.0) / 2.0)
}

/// One Student draw `σ·ξ`.
pub fn sample_student<R: Rng + ?Sized>(m: &MixtureParams, rng: &mut R) -> f64 {
    let xi: f64 = rng.sample(StandardNormal);
    m.sample_sigma(rng) * xi
}

/// Log of the normalizing constant of the multivariate Student measure on
/// `NT` variables, `ln Γ((α+NT)/2) − NT ln(a√π) − ln Γ(α/2)`.
pub fn multivariate_student_log_norm(nt: usize, m: &MixtureParams) -> f64 {
    let k = nt as f64;
    ln_gamma((m.alpha + k) / 2.0) - k * (m.a * PI.sqrt()).ln() - ln_gamma(m.alpha / 2.0)
}

/// Semicircle of radius `2σ`.
pub fn semicircle_sigma(lambda: f64, sigma: f64) -> f64 {
    let r2 = 4.0 * sigma * sigma;
    if lambda * lambda >= r2 {
        0.0
    } else {
        (r2 - lambda * lambda).sqrt() / (2.0 * PI * sigma * sigma)
    }
}

/// Average of semicircles over σ:
/// `√2/(aπΓ(α/2)) ∫₀^{2a²/λ²} ζ^{(α−1)/2} e^{−ζ} √(1 − ζλ²/2a²) dζ`.
pub fn deformed_wigner_density(lambda: f64, m: &MixtureParams) -> Result<f64> {
    m.validate()?;
    let (al, a) = (m.alpha, m.a);
    let pref = 2f64.sqrt() / (a * PI * gamma(al / 2.0));
    let p = (al - 1.0) / 2.0;
    if lambda == 0.0 {
        return Ok(pref * gamma(p + 1.0));
    }
    let zmax = 2.0 * a * a / (lambda * lambda);
    let value = if zmax <= 100.0 {
        // ζ = Z(1 − s²) removes the square-root endpoint.
        let f = |s: f64| {
            let z = zmax * (1.0 - s * s);
            if z <= 0.0 {
                return 0.0;
            }
            2.0 * zmax * s * s * (p * z.ln() - z).exp()
        };
        integrate(f, 0.0, 1.0, QUAD)?.value
    } else {
        let f = |z: f64| {
            if z <= 0.0 {
                return 0.0;
            }
            (p * z.ln() - z).exp() * (1.0 - z / zmax).max(0.0).sqrt()
        };
        let mut pts = vec![0.0, 1.0, 5.0, 20.0, 60.0, 100.0];
        pts.push(zmax);
        integrate_breakpoints(f, &pts, QUAD)?.value
    };
    Ok(pref * value)
}

/// Marčenko–Pastur edges `(1 ± √r)²`; the form `(1 ± r)²` sometimes quoted
/// for the edges is not the support of this law.
pub fn marchenko_pastur_edges(ratio: f64) -> (f64, f64) {
    let s = ratio.sqrt();
    ((1.0 - s).powi(2), (1.0 + s).powi(2))
}

/// Marčenko–Pastur density of `(1/T)ξξᵀ` for `r = N/T ∈ (0, 1]`.
pub fn marchenko_pastur_density(lambda: f64, ratio: f64) -> f64 {
    let (lo, hi) = marchenko_pastur_edges(ratio);
    if !(ratio > 0.0 && ratio <= 1.0) || lambda <= lo || lambda >= hi {
        return 0.0;
    }
    ((hi - lambda) * (lambda - lo)).sqrt() / (2.0 * PI * ratio * lambda)
}

/// Deformed Wishart density:
/// `(α/2)^{α/2}/(2πrΓ(α/2))·λ^{−α/2−1} ∫_{λ₋}^{λ₊} √((λ₊−ζ)(ζ−λ₋)) e^{−αζ/2λ} ζ^{α/2−1} dζ`.
pub fn deformed_wishart_density(lambda: f64, alpha: f64, ratio: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Domain(format!("ratio = {ratio} not in (0, 1]")));
    }
    let h = alpha / 2.0;
    let (lo, hi) = marchenko_pastur_edges(ratio);
    let (c, w) = (0.5 * (hi + lo), 0.5 * (hi - lo));
    let log_pref = h * h.ln() - (2.0 * PI * ratio).ln() - ln_gamma(h) - (h + 1.0) * lambda.ln();
    // ζ = c + w cos θ; the exponential is factored relative to its value at λ₋.
    let shift = alpha * lo / (2.0 * lambda);
    let f = |t: f64| {
        let z = c + w * t.cos();
        if z <= 0.0 {
            return 0.0;
        }
        let s = t.sin();
        w * w * s * s * (-(alpha * z / (2.0 * lambda)) + shift + (h - 1.0) * z.ln()).exp()
    };
    let q = integrate_breakpoints(f, &[0.0, 0.5 * PI, 0.9 * PI, PI], QUAD)?;
    Ok((log_pref - shift).exp() * q.value)
}

/// Rows, columns and scale model of a deformed Wishart ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WishartConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub scale_model: ScaleModel,
    pub mixture: MixtureParams,
}

impl WishartConfig {
    pub fn ratio(&self) -> f64 {
        self.n as f64 / self.t as f64
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = EnsembleConfig::WishartStudent {
            n: self.n,
            t: self.t,
            alpha: self.mixture.alpha,
            a: Some(self.mixture.a),
            scale_model: self.scale_model.clone(),
            trials: 1,
        };
        cfg.validate()
    }
}

/// Data matrix `A` (N×T) of a deformed Wishart draw.
pub fn sample_wishart_data<R: Rng + ?Sized>(cfg: &WishartConfig, rng: &mut R) -> DMatrix<f64> {
    let (n, t) = (cfg.n, cfg.t);
    let xi = DMatrix::<f64>::from_fn(n, t, |_, _| rng.sample(StandardNormal));
    match &cfg.scale_model {
        ScaleModel::GlobalSigma => xi * cfg.mixture.sample_sigma(rng),
        ScaleModel::PerRowSigma => {
            let mut a = xi;
            for i in 0..n {
                let s = cfg.mixture.sample_sigma(rng);
                a.row_mut(i).scale_mut(s);
            }
            a
        }
        ScaleModel::RotatedScales { s, o } => {
            let sigma = cfg.mixture.sample_sigma(rng);
            let mut a = match o {
                Some(o) => DMatrix::from_fn(n, n, |i, j| o[i][j]) * xi,
                None => xi,
            };
            for (i, si) in s.iter().enumerate() {
                a.row_mut(i).scale_mut(sigma * si);
            }
            a
        }
    }
}

/// Spectrum of `W = AAᵀ/T` for one deformed Wishart draw.
pub fn sample_deformed_wishart<R: Rng + ?Sized>(cfg: &WishartConfig, rng: &mut R) -> Result<SpectralSample> {
    cfg.validate()?;
    eigen_sym(&wishart_matrix(&sample_wishart_data(cfg, rng)), false)
}

fn wishart_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a * a.transpose()) / a.ncols() as f64
}

/// Symmetric Gaussian matrix times one σ, divided by `√N`.
pub fn deformed_wigner_matrix<R: Rng + ?Sized>(n: usize, m: &MixtureParams, rng: &mut R) -> DMatrix<f64> {
    let sigma = m.sample_sigma(rng);
    scaled_wigner_matrix(n, sigma, rng)
}

/// Symmetric matrix of i.i.d. `N(0, σ²)` entries divided by `√N`.
pub fn scaled_wigner_matrix<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> DMatrix<f64> {
    symmetric_from(n, rng, |rng| sigma * rng.sample::<f64, _>(StandardNormal)) / (n as f64).sqrt()
}

/// Spectrum of one deformed Wigner draw.
pub fn deformed_wigner_sample<R: Rng + ?Sized>(n: usize, m: &MixtureParams, rng: &mut R) -> Result<SpectralSample> {
    m.validate()?;
    eigen_sym(&deformed_wigner_matrix(n, m, rng), false)
}

/// Independent σ per element (Student entries), divided by `√N`: a
/// Wigner-class matrix.
pub fn elementwise_student_matrix<R: Rng + ?Sized>(n: usize, m: &MixtureParams, rng: &mut R) -> DMatrix<f64> {
    symmetric_from(n, rng, |rng| sample_student(m, rng)) / (n as f64).sqrt()
}

fn symmetric_from<R: Rng + ?Sized, F: FnMut(&mut R) -> f64>(n: usize, rng: &mut R, mut f: F) -> DMatrix<f64> {
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = f(rng);
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    a
}

/// One matrix of a `deformed-wigner` or `wishart-student` config, already
/// normalized.
pub fn sample_matrix<R: Rng + ?Sized>(cfg: &EnsembleConfig, rng: &mut R) -> Result<DMatrix<f64>> {
    match cfg {
        EnsembleConfig::DeformedWigner { n, alpha, a, .. } => {
            let m = MixtureParams::new(*alpha, a.unwrap_or(alpha.sqrt()))?;
            Ok(deformed_wigner_matrix(*n, &m, rng))
        }
        EnsembleConfig::WishartStudent {
            n,
            t,
            alpha,
            a,
            scale_model,
            ..
        } => {
            let w = WishartConfig {
                n: *n,
                t: *t,
                scale_model: scale_model.clone(),
                mixture: MixtureParams::new(*alpha, a.unwrap_or(alpha.sqrt()))?,
            };
            Ok(wishart_matrix(&sample_wishart_data(&w, rng)))
        }
        other => Err(Error::config("kind", format!("{} is not a deformed ensemble", other.kind()))),
    }
}
