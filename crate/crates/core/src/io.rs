//! Ensemble configs, CSV/JSON emission and run manifests.
//!
//! Configs are JSON objects tagged by `kind`; unknown keys are rejected and
//! every validation error names the offending key.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Law of the diagonal entries in `free-sum-diag` ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiagonalLaw {
    /// Semicircle of the given radius.
    Semicircle { radius: f64 },
    /// Free stable law.
    FreeStable {
        alpha: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default = "one")]
        range: f64,
    },
}

/// How the rows of a Wishart data matrix are scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScaleModel {
    /// One σ per matrix.
    GlobalSigma,
    /// Independent σᵢ per row.
    PerRowSigma,
    /// One σ per matrix and fixed axes: `A = σ·diag(S)·O·ξ`. `O` is row-major
    /// and defaults to the identity.
    RotatedScales {
        s: Vec<f64>,
        #[serde(default)]
        o: Option<Vec<Vec<f64>>>,
    },
}

/// One Monte Carlo ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnsembleConfig {
    /// Symmetric matrix of i.i.d. stable entries, spectrum of `A/N^{scaling_exponent}`.
    WignerLevy {
        #[serde(rename = "N")]
        n: usize,
        alpha: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default = "one")]
        range: f64,
        /// Defaults to `1/α`.
        #[serde(default)]
        scaling_exponent: Option<f64>,
        trials: usize,
    },
    /// Gaussian orthogonal ensemble, spectrum of `A/N^{scaling_exponent}`.
    Goe {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default = "one")]
        sigma: f64,
        /// Defaults to `1/2`.
        #[serde(default)]
        scaling_exponent: Option<f64>,
        trials: usize,
    },
    /// `K^{−1/α} Σₖ Oₖ Dₖ Oₖᵀ` with i.i.d. diagonal entries and Haar `Oₖ`.
    FreeSumDiag {
        #[serde(rename = "N")]
        n: usize,
        #[serde(rename = "K")]
        k: usize,
        diagonal: DiagonalLaw,
        /// Exponent of the `K` normalization; defaults to 2 for the
        /// semicircle and to α for free stable diagonals.
        #[serde(default)]
        alpha: Option<f64>,
        trials: usize,
    },
    /// `K^{−1/α} Σₖ Oₖ (Aₖ/N^{1/α}) Oₖᵀ` with Wigner–Lévy `Aₖ`.
    FreeSumWl {
        #[serde(rename = "N")]
        n: usize,
        #[serde(rename = "K")]
        k: usize,
        alpha: f64,
        /// Entry range; defaults to `Γ(1+α)^{−1/α}`.
        #[serde(default)]
        range: Option<f64>,
        trials: usize,
    },
    /// Gaussian Wigner matrix with one random scale σ per matrix.
    DeformedWigner {
        #[serde(rename = "N")]
        n: usize,
        alpha: f64,
        /// Defaults to `√α`.
        #[serde(default)]
        a: Option<f64>,
        trials: usize,
    },
    /// `W = AAᵀ/T` for scale-mixed Gaussian data.
    WishartStudent {
        #[serde(rename = "N")]
        n: usize,
        #[serde(rename = "T")]
        t: usize,
        alpha: f64,
        /// Defaults to `√α`.
        #[serde(default)]
        a: Option<f64>,
        scale_model: ScaleModel,
        trials: usize,
    },
}

fn one() -> f64 {
    1.0
}

fn check(ok: bool, key: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, message()))
    }
}

fn positive(x: f64, key: &str) -> Result<()> {
    check(x > 0.0 && x.is_finite(), key, || format!("{x} must be positive"))
}

fn count(x: usize, key: &str) -> Result<()> {
    check(x >= 1, key, || "must be at least 1".into())
}

fn stable_index(alpha: f64, key: &str) -> Result<()> {
    check(alpha > 0.0 && alpha <= 2.0, key, || format!("{alpha} not in (0, 2]"))
}

fn asymmetry(beta: f64, key: &str) -> Result<()> {
    check((-1.0..=1.0).contains(&beta), key, || format!("{beta} not in [-1, 1]"))
}

impl EnsembleConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::WignerLevy { .. } => "wigner-levy",
            Self::Goe { .. } => "goe",
            Self::FreeSumDiag { .. } => "free-sum-diag",
            Self::FreeSumWl { .. } => "free-sum-wl",
            Self::DeformedWigner { .. } => "deformed-wigner",
            Self::WishartStudent { .. } => "wishart-student",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            Self::WignerLevy { n, .. }
            | Self::Goe { n, .. }
            | Self::FreeSumDiag { n, .. }
            | Self::FreeSumWl { n, .. }
            | Self::DeformedWigner { n, .. }
            | Self::WishartStudent { n, .. } => n,
        }
    }

    pub fn trials(&self) -> usize {
        match *self {
            Self::WignerLevy { trials, .. }
            | Self::Goe { trials, .. }
            | Self::FreeSumDiag { trials, .. }
            | Self::FreeSumWl { trials, .. }
            | Self::DeformedWigner { trials, .. }
            | Self::WishartStudent { trials, .. } => trials,
        }
    }

    pub fn validate(&self) -> Result<()> {
        count(self.n(), "N")?;
        count(self.trials(), "trials")?;
        match self {
            Self::WignerLevy {
                alpha,
                beta,
                range,
                scaling_exponent,
                ..
            } => {
                stable_index(*alpha, "alpha")?;
                asymmetry(*beta, "beta")?;
                positive(*range, "range")?;
                if let Some(e) = scaling_exponent {
                    check(e.is_finite(), "scaling_exponent", || format!("{e} is not finite"))?;
                }
            }
            Self::Goe { sigma, scaling_exponent, .. } => {
                positive(*sigma, "sigma")?;
                if let Some(e) = scaling_exponent {
                    check(e.is_finite(), "scaling_exponent", || format!("{e} is not finite"))?;
                }
            }
            Self::FreeSumDiag { k, diagonal, alpha, .. } => {
                count(*k, "K")?;
                match diagonal {
                    DiagonalLaw::Semicircle { radius } => positive(*radius, "diagonal.radius")?,
                    DiagonalLaw::FreeStable { alpha, beta, range } => {
                        stable_index(*alpha, "diagonal.alpha")?;
                        asymmetry(*beta, "diagonal.beta")?;
                        positive(*range, "diagonal.range")?;
                    }
                }
                if let Some(a) = alpha {
                    stable_index(*a, "alpha")?;
                }
            }
            Self::FreeSumWl { k, alpha, range, .. } => {
                count(*k, "K")?;
                stable_index(*alpha, "alpha")?;
                if let Some(r) = range {
                    positive(*r, "range")?;
                }
            }
            Self::DeformedWigner { alpha, a, .. } => {
                positive(*alpha, "alpha")?;
                if let Some(a) = a {
                    positive(*a, "a")?;
                }
            }
            Self::WishartStudent {
                n, t, alpha, a, scale_model, ..
            } => {
                count(*t, "T")?;
                check(n <= t, "T", || format!("ratio N/T = {n}/{t} exceeds 1"))?;
                positive(*alpha, "alpha")?;
                if let Some(a) = a {
                    positive(*a, "a")?;
                }
                if let ScaleModel::RotatedScales { s, o } = scale_model {
                    check(s.len() == *n, "scale_model.s", || format!("has {} entries, expected N = {n}", s.len()))?;
                    for v in s {
                        positive(*v, "scale_model.s")?;
                    }
                    if let Some(o) = o {
                        check(o.len() == *n && o.iter().all(|r| r.len() == *n), "scale_model.o", || {
                            format!("must be {n}×{n}")
                        })?;
                        let mut worst: f64 = 0.0;
                        for i in 0..*n {
                            for j in 0..*n {
                                let dot: f64 = (0..*n).map(|k| o[i][k] * o[j][k]).sum();
                                worst = worst.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
                            }
                        }
                        check(worst < 1e-8, "scale_model.o", || format!("not orthogonal (deviation {worst:e})"))?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(json_config_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Map a serde error to a config error naming the key when serde reports one.
fn json_config_error(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    let key = ["unknown field `", "missing field `", "unknown variant `"]
        .iter()
        .find_map(|pat| {
            let start = msg.find(pat)? + pat.len();
            let end = msg[start..].find('`')?;
            Some(msg[start..start + end].to_string())
        })
        .unwrap_or_else(|| if msg.contains("kind") { "kind".into() } else { "<document>".into() });
    Error::config(key, msg)
}

pub fn load_config(path: &Path) -> Result<EnsembleConfig> {
    EnsembleConfig::from_json(&std::fs::read_to_string(path)?)
}

pub fn save_config(cfg: &EnsembleConfig, path: &Path) -> Result<()> {
    std::fs::write(path, cfg.to_json()? + "\n")?;
    Ok(())
}

/// Decimal rendering with 17 significant digits (lossless for `f64`).
///
/// Positional notation for magnitudes in `[1e-5, 1e17)`, scientific
/// otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..17).contains(&e) {
        format!("{:.*}", (16 - e).max(0) as usize, x)
    } else {
        format!("{x:.16e}")
    }
}

/// CSV text with a header row; every column must have the same length.
pub fn csv_table(header: &[&str], columns: &[&[f64]]) -> Result<String> {
    if header.len() != columns.len() {
        return Err(Error::Domain(format!("{} headers for {} columns", header.len(), columns.len())));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::Domain("CSV columns differ in length".into()));
    }
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        for (j, c) in columns.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(c[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// One written file and its SHA-256.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputEntry {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to reproduce a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    /// Ensemble config or analytic parameters of the run.
    pub config: serde_json::Value,
    pub seed: u64,
    pub workers: usize,
    pub tool_version: String,
    /// How per-trial seeds derive from `seed`.
    pub seed_scheme: String,
    pub outputs: Vec<OutputEntry>,
}

pub const SEED_SCHEME: &str = "trial seed = splitmix64-mix(root, stream, trial index)";

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value, seed: u64, workers: usize) -> Self {
        Self {
            command: command.into(),
            config,
            seed,
            workers,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed_scheme: SEED_SCHEME.to_string(),
            outputs: Vec::new(),
        }
    }

    /// Write `contents` to `path` and record its hash.
    pub fn write_output(&mut self, path: &Path, contents: &[u8]) -> Result<()> {
        std::fs::write(path, contents)?;
        self.outputs.push(OutputEntry {
            path: path.to_path_buf(),
            sha256: sha256_hex(contents),
        });
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
