//! Small statistics toolbox shared by the Monte Carlo checks.

use crate::error::{Error, Result};

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` in stream `stream` under `root`:
/// `splitmix64(splitmix64(root ^ splitmix64(stream)) + index)`.
pub fn derive_seed(root: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ splitmix64(stream)).wrapping_add(index))
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, f64::NAN);
    }
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Two-sided one-sample Kolmogorov–Smirnov statistic `D = sup|F_n − F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of `D` for `n` samples, with Stephens' small-n
/// correction `λ = (√n + 0.12 + 0.11/√n)·D`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Hill estimator of the tail index from the `k` largest values of `|x|`.
pub fn hill_estimator(samples: &[f64], k: usize) -> Result<f64> {
    if k < 2 || samples.len() <= k {
        return Err(Error::InsufficientData {
            needed: k.max(2) + 1,
            got: samples.len(),
        });
    }
    let mut a: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    a.sort_by(|p, q| q.total_cmp(p));
    let threshold = a[k].ln();
    let mean = a[..k].iter().map(|v| v.ln() - threshold).sum::<f64>() / k as f64;
    Ok(1.0 / mean)
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Piecewise-linear CDF built from density samples, with optional tail mass
/// outside the tabulated range.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    x: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedCdf {
    /// Trapezoidal CDF of `density` on `x`, offset by `left_mass` and scaled so
    /// that the table ends at `1 − right_mass`.
    pub fn from_density(x: &[f64], density: &[f64], left_mass: f64, right_mass: f64) -> Result<Self> {
        if x.len() != density.len() || x.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: x.len().min(density.len()) });
        }
        let mut c = Vec::with_capacity(x.len());
        let mut acc = 0.0;
        c.push(0.0);
        for i in 1..x.len() {
            acc += 0.5 * (x[i] - x[i - 1]) * (density[i] + density[i - 1]);
            c.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Degenerate("density has no mass on the grid".into()));
        }
        let inner = 1.0 - left_mass - right_mass;
        let cdf = c.iter().map(|v| left_mass + inner * v / acc).collect();
        Ok(Self { x: x.to_vec(), cdf })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.cdf[0];
        }
        if x >= self.x[n - 1] {
            return self.cdf[n - 1];
        }
        let i = self.x.partition_point(|&g| g <= x) - 1;
        let t = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }

    /// Inverse CDF, clamped to the tabulated range.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.x.len();
        if p <= self.cdf[0] {
            return self.x[0];
        }
        if p >= self.cdf[n - 1] {
            return self.x[n - 1];
        }
        let i = self.cdf.partition_point(|&c| c <= p).clamp(1, n - 1) - 1;
        let dc = self.cdf[i + 1] - self.cdf[i];
        if dc <= 0.0 {
            return self.x[i];
        }
        self.x[i] + (p - self.cdf[i]) / dc * (self.x[i + 1] - self.x[i])
    }
}
