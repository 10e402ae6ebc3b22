use heavy_rmt::deformed::{self, MixtureParams};
use heavy_rmt::free_levy::{self, FreeStableParams};
use heavy_rmt::io::{DiagonalLaw, EnsembleConfig, ScaleModel};
use heavy_rmt::matrix_mc::{bin_averages_batch, Histogram};
use heavy_rmt::wigner_levy::{self, GridConfig};
use heavy_rmt::Result;
use serde::Serialize;

pub const BAND_SIGMAS: f64 = 3.0;

/// Limiting spectral density of `cfg`, when one is implemented.
pub enum Reference {
    WignerLevy { alpha: f64, range: f64 },
    Semicircle { sigma: f64 },
    FreeStable(FreeStableParams),
    DeformedWigner(MixtureParams),
    DeformedWishart { alpha: f64, ratio: f64 },
}

impl Reference {
    pub fn for_config(cfg: &EnsembleConfig) -> Result<Option<Self>> {
        Ok(match cfg {
            EnsembleConfig::WignerLevy {
                alpha,
                beta,
                range,
                scaling_exponent,
                ..
            } => (*alpha < 2.0 && *beta == 0.0 && scaling_exponent.is_none_or(|e| e == 1.0 / alpha)).then_some(
                Self::WignerLevy {
                    alpha: *alpha,
                    range: *range,
                },
            ),
            EnsembleConfig::Goe {
                sigma, scaling_exponent, ..
            } => scaling_exponent
                .is_none_or(|e| e == 0.5)
                .then_some(Self::Semicircle { sigma: *sigma }),
            EnsembleConfig::FreeSumDiag { diagonal, alpha, .. } => match *diagonal {
                DiagonalLaw::Semicircle { radius } => alpha
                    .is_none_or(|a| a == 2.0)
                    .then_some(Self::Semicircle { sigma: radius / 2.0 }),
                DiagonalLaw::FreeStable {
                    alpha: a,
                    beta,
                    range,
                } => match alpha.is_none_or(|e| e == a) {
                    true => Some(Self::FreeStable(FreeStableParams::new(a, beta, range)?)),
                    false => None,
                },
            },
            EnsembleConfig::FreeSumWl { alpha, range, .. } => {
                let r = range.map_or(1.0, |r| r / free_levy::matched_wl_range(*alpha));
                Some(Self::FreeStable(FreeStableParams::new(*alpha, 0.0, r)?))
            }
            EnsembleConfig::DeformedWigner { alpha, a, .. } => {
                Some(Self::DeformedWigner(MixtureParams::new(*alpha, a.unwrap_or(alpha.sqrt()))?))
            }
            EnsembleConfig::WishartStudent {
                n,
                t,
                alpha,
                a,
                scale_model,
                ..
            } => (matches!(scale_model, ScaleModel::GlobalSigma) && a.is_none_or(|a| a == alpha.sqrt()) && n <= t)
                .then_some(Self::DeformedWishart {
                    alpha: *alpha,
                    ratio: *n as f64 / *t as f64,
                }),
        })
    }

    /// Bin averages of the density over `edges`.
    pub fn bin_averages(&self, edges: &[f64]) -> Result<Vec<f64>> {
        bin_averages_batch(edges, |xs| self.curve(xs))
    }

    /// Density at ascending `xs`.
    pub fn curve(&self, xs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::WignerLevy { alpha, range } => {
                let rp = wigner_levy::solve_running_params(*alpha, &GridConfig::default(), 1e-9, 1000)?;
                xs.iter().map(|&l| wigner_levy::density_full(l, *alpha, *range, &rp)).collect()
            }
            Self::Semicircle { sigma } => Ok(xs.iter().map(|&l| deformed::semicircle_sigma(l, *sigma)).collect()),
            Self::FreeStable(p) => free_levy::density_curve(xs, p),
            Self::DeformedWigner(m) => xs.iter().map(|&l| deformed::deformed_wigner_density(l, m)).collect(),
            Self::DeformedWishart { alpha, ratio } => xs
                .iter()
                .map(|&l| {
                    if l > 0.0 {
                        deformed::deformed_wishart_density(l, *alpha, *ratio)
                    } else {
                        Ok(0.0)
                    }
                })
                .collect(),
        }
    }
}

/// Agreement of a Monte Carlo histogram with a reference density.
#[derive(Debug, Serialize)]
pub struct BandSummary {
    pub bins: usize,
    pub sigmas: f64,
    pub fraction_within: f64,
    pub outside: u64,
    pub total: u64,
}

impl BandSummary {
    pub fn new(h: &Histogram, reference: &[f64]) -> Result<Self> {
        Ok(Self {
            bins: reference.len(),
            sigmas: BAND_SIGMAS,
            fraction_within: h.band_agreement(reference, BAND_SIGMAS)?,
            outside: h.outside,
            total: h.total(),
        })
    }
}
