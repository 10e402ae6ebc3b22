//! One-dimensional α-stable (Lévy) laws.
//!
//! # Parameterization
//!
//! A law is described by the triple `(alpha, beta, range)`. Its c-transform
//! (log characteristic function) is
//!
//! ```text
//! c(k) = -R^α |k|^α (1 + i β sgn(k) tan(πα/2))          α ≠ 1
//! c(k) = -R |k| (1 + i (2β/π) sgn(k) ln|Rk|)              α = 1
//! ```
//!
//! as returned by [`c_transform`]. The densities evaluated by [`pdf`] are
//! those of the Samorodnitsky–Taqqu "S1" family with σ = R, i.e. Nolan's
//! `S(α, β, R, 0; 1)`: for β > 0 the right tail is the heavier one, and
//! `L(x; R) = L(x/R; 1)/R` holds for every α including α = 1 (so at α = 1
//! the law is the pure scale family `R·X₁`, not the S1 law with its
//! `β R ln R` drift). [`c_transform`] as written corresponds to
//! `ln E[exp(-ikX)]` for α ≠ 1; at α = 1 with β ≠ 0 its imaginary sign
//! matches `ln E[exp(ikX)]` instead. The two conventions differ only by the
//! sign of the imaginary part, which is why the density and the sampler are
//! pinned to the tail behaviour
//! `L(x) → (1 ± β) γ_α R^α / |x|^{α+1}` as `x → ±∞`.
//!
//! At α = 2 the law is Gaussian with standard deviation `√2·R` for any β.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};

/// Default absolute accuracy of [`pdf`].
pub const PDF_TOL: f64 = 1e-8;

/// Stability index, asymmetry and range of a Lévy law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StableParams {
    pub alpha: f64,
    pub beta: f64,
    pub range: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, range: f64) -> Result<Self> {
        let p = Self { alpha, beta, range };
        p.validate()?;
        Ok(p)
    }

    /// Symmetric law with unit range.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::Domain(format!("alpha = {} not in (0, 2]", self.alpha)));
        }
        if !(-1.0..=1.0).contains(&self.beta) {
            return Err(Error::Domain(format!("beta = {} not in [-1, 1]", self.beta)));
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::Domain(format!("range = {} must be positive", self.range)));
        }
        Ok(())
    }
}

/// Power-law tail amplitudes `p(x) ≈ C± / |x|^{1+α}` as `x → ±∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailAmplitudes {
    pub c_plus: f64,
    pub c_minus: f64,
}

/// `γ_α = Γ(1+α) sin(πα/2) / π`.
pub fn gamma_alpha(alpha: f64) -> f64 {
    gamma(1.0 + alpha) * (PI * alpha / 2.0).sin() / PI
}

/// Logarithm of the characteristic function.
pub fn c_transform(k: f64, p: &StableParams) -> Result<Complex64> {
    p.validate()?;
    if k == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let sgn = k.signum();
    let ak = k.abs();
    if p.alpha == 1.0 {
        // ln|Rk|: the printed form omits the absolute value; sgn(k) carries the sign.
        let log = (p.range * ak).ln();
        let re = -p.range * ak;
        return Ok(Complex64::new(re, re * 2.0 * p.beta / PI * sgn * log));
    }
    let re = -(p.range * ak).powf(p.alpha);
    let im = re * p.beta * sgn * (PI * p.alpha / 2.0).tan();
    // tan(π) is not exactly zero in floating point.
    let im = if p.alpha == 2.0 { 0.0 } else { im };
    Ok(Complex64::new(re, im))
}

/// Density `L^{R,β}_α(x)` to absolute accuracy [`PDF_TOL`].
pub fn pdf(x: f64, p: &StableParams) -> Result<f64> {
    pdf_with_tol(x, p, PDF_TOL)
}

/// Density with a caller-chosen absolute tolerance.
pub fn pdf_with_tol(x: f64, p: &StableParams, tol: f64) -> Result<f64> {
    p.validate()?;
    let d = StandardDensity::new(p.alpha, p.beta);
    Ok(d.try_eval(x / p.range, tol * p.range)? / p.range)
}

/// Evaluator for the unit-range density of a fixed `(α, β)` pair.
///
/// Uses Nolan's real-integral representation: for `y > 0` and α ≠ 1,
/// `f(y) = α / (π |α−1| y) ∫ g(θ) e^{−g(θ)} dθ` over `(−θ₀, π/2)` with
/// `g = y^{α/(α−1)} V(θ)`; negative arguments use `f(−y; α, −β)`. The
/// integrand is unimodal with its peak where `g = 1`, so the integral is
/// split there before adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct StandardDensity {
    alpha: f64,
    beta: f64,
    right: Branch,
    left: Branch,
    at_zero: f64,
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    // α ≠ 1: θ₀; α = 1: the signed β of this side.
    theta0: f64,
    log_cos_a_theta0: f64,
    empty: bool,
}

impl StandardDensity {
    pub fn new(alpha: f64, beta: f64) -> Self {
        let make = |b: f64| -> Branch {
            if alpha == 1.0 {
                return Branch {
                    theta0: b,
                    log_cos_a_theta0: 0.0,
                    empty: false,
                };
            }
            let t = if alpha == 2.0 { 0.0 } else { (PI * alpha / 2.0).tan() };
            let theta0 = (b * t).atan() / alpha;
            Branch {
                theta0,
                log_cos_a_theta0: (alpha * theta0).cos().ln(),
                empty: theta0 <= -FRAC_PI_2 + 1e-15,
            }
        };
        let at_zero = if alpha == 1.0 {
            f64::NAN
        } else {
            let t = if alpha == 2.0 { 0.0 } else { (PI * alpha / 2.0).tan() };
            let zeta = -beta * t;
            let theta0 = (beta * t).atan() / alpha;
            gamma(1.0 + 1.0 / alpha) * theta0.cos() / (PI * (1.0 + zeta * zeta).powf(0.5 / alpha))
        };
        Self {
            alpha,
            beta,
            right: make(beta),
            left: make(-beta),
            at_zero,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Density at `y`; quadrature failures fall back to the best estimate.
    pub fn eval(&self, y: f64, tol: f64) -> f64 {
        match self.eval_inner(y, tol) {
            Ok(v) | Err((v, _)) => v,
        }
    }

    pub fn try_eval(&self, y: f64, tol: f64) -> Result<f64> {
        self.eval_inner(y, tol).map_err(|(_, e)| e)
    }

    fn eval_inner(&self, y: f64, tol: f64) -> std::result::Result<f64, (f64, Error)> {
        if !y.is_finite() {
            return Ok(0.0);
        }
        if self.alpha == 1.0 {
            if self.beta == 0.0 {
                return Ok(1.0 / (PI * (1.0 + y * y)));
            }
            return self.eval_alpha_one(y, tol);
        }
        if y.abs() < 1e-12 {
            return Ok(self.at_zero);
        }
        let (branch, x) = if y > 0.0 { (self.right, y) } else { (self.left, -y) };
        if branch.empty {
            return Ok(0.0);
        }
        self.eval_branch(branch, x, tol)
    }

    fn eval_branch(&self, b: Branch, x: f64, tol: f64) -> std::result::Result<f64, (f64, Error)> {
        let a = self.alpha;
        let am1 = a - 1.0;
        let theta0 = b.theta0;
        let log_x = x.ln();
        let pow = a / am1;
        let log_g = |th: f64| -> f64 {
            let c = th.cos();
            let s = (a * (theta0 + th)).sin();
            let c2 = (a * theta0 + am1 * th).cos();
            if c <= 0.0 || s <= 0.0 || c2 <= 0.0 {
                // Endpoint limits: g → 0 for α < 1 at −θ₀, ∞ at π/2; reversed for α > 1.
                let upper_end = th > 0.5 * (FRAC_PI_2 - theta0);
                return if upper_end == (a < 1.0) { f64::INFINITY } else { f64::NEG_INFINITY };
            }
            pow * log_x + b.log_cos_a_theta0 / am1 + pow * (c.ln() - s.ln()) + c2.ln() - c.ln()
        };
        let pref = a / (PI * am1.abs() * x);
        let (value, err) = integrate_peaked(log_g, -theta0, FRAC_PI_2, a < 1.0, tol / pref);
        finish(pref * value, err)
    }

    fn eval_alpha_one(&self, y: f64, tol: f64) -> std::result::Result<f64, (f64, Error)> {
        let beta = self.beta;
        let shift = -PI * y / (2.0 * beta);
        let log_g = |th: f64| -> f64 {
            let c = th.cos();
            let w = FRAC_PI_2 + beta * th;
            if c <= 0.0 || w <= 0.0 {
                // β > 0: g → 0 at −π/2, ∞ at π/2.
                return if (th > 0.0) == (beta > 0.0) { f64::INFINITY } else { f64::NEG_INFINITY };
            }
            shift + (2.0 / PI).ln() + w.ln() - c.ln() + w * th.tan() / beta
        };
        let pref = 1.0 / (2.0 * beta.abs());
        let (value, err) = integrate_peaked(log_g, -FRAC_PI_2, FRAC_PI_2, beta > 0.0, tol / pref);
        finish(pref * value, err)
    }

    /// Leading and next-to-leading tail coefficients for `y → +∞`
    /// (`f ≈ c₁ y^{−α−1} + c₂ y^{−2α−1}`); α ≠ 1, α < 2.
    pub fn tail_coefficients(&self, positive: bool) -> (f64, f64) {
        let a = self.alpha;
        let b = if positive { self.beta } else { -self.beta };
        if a == 1.0 {
            return ((1.0 + b) / PI, 0.0);
        }
        let t = (PI * a / 2.0).tan();
        let shift = (b * t).atan();
        let amp = (1.0 + b * b * t * t).sqrt();
        let ang = PI * a / 2.0 + shift;
        let c1 = gamma(a + 1.0) * amp * ang.sin() / PI;
        let c2 = -gamma(2.0 * a + 1.0) / 2.0 * amp * amp * (2.0 * ang).sin() / PI;
        (c1, c2)
    }
}

fn finish(v: f64, err: Option<Error>) -> std::result::Result<f64, (f64, Error)> {
    let v = v.max(0.0);
    match err {
        None => Ok(v),
        Some(e) => Err((v, e)),
    }
}

/// `∫ g e^{−g} dθ` over `(lo, hi)` for monotone `g` given as `ln g`.
///
/// The integrand peaks where `g = 1` and can be arbitrarily narrow there, so
/// each side of the peak is cut into panels whose distance to the peak
/// shrinks by a factor 4 per panel, and panels where `g e^{−g}` is below
/// roughly 1e-14 are dropped.
fn integrate_peaked<F: Fn(f64) -> f64>(log_g: F, lo: f64, hi: f64, increasing: bool, tol: f64) -> (f64, Option<Error>) {
    let oriented = |th: f64| if increasing { log_g(th) } else { -log_g(th) };
    let peak = quad::bisect(oriented, lo, hi, 1e-13 * (hi - lo).max(1.0));
    let integrand = |th: f64| -> f64 {
        let lg = log_g(th);
        if !(-33.0..=3.7).contains(&lg) {
            0.0
        } else {
            (lg - lg.exp()).exp()
        }
    };
    let mut breaks: Vec<f64> = Vec::with_capacity(64);
    for end in [lo, hi] {
        let span = end - peak;
        let mut side = Vec::with_capacity(32);
        let mut d = 1.0;
        let mut outer_cut = false;
        for _ in 0..27 {
            let th = peak + span * d;
            let lg = log_g(th);
            if !(-33.0..=3.7).contains(&lg) {
                // Everything farther out is negligible.
                side.clear();
                outer_cut = true;
                side.push(th);
            } else {
                if !outer_cut && side.is_empty() {
                    side.push(end);
                }
                side.push(th);
                if lg.abs() < 0.05 {
                    break;
                }
            }
            d *= 0.25;
        }
        if side.is_empty() {
            side.push(end);
        }
        side.dedup();
        if end == lo {
            breaks.extend(side.iter().copied());
        } else {
            breaks.push(peak);
            breaks.extend(side.iter().rev().copied());
        }
    }
    breaks.dedup();
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    let cfg = QuadConfig::new(0.5 * tol / pieces, 1e-11).with_max_intervals(60);
    let mut total = 0.0;
    let mut failure = None;
    for w in breaks.windows(2) {
        let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
        match quad::integrate(integrand, a, b, cfg) {
            Ok(q) => total += q.value,
            Err(e) => failure = Some(e),
        }
    }
    (total, failure)
}

/// Leading tail `(1 ± β) γ_α R^α / |x|^{α+1}`.
pub fn tail_asymptote(x: f64, p: &StableParams) -> Result<f64> {
    p.validate()?;
    if p.alpha >= 2.0 {
        return Err(Error::TailUndefined);
    }
    if x == 0.0 {
        return Err(Error::Domain("tail asymptote undefined at x = 0".into()));
    }
    let side = 1.0 + x.signum() * p.beta;
    Ok(side * gamma_alpha(p.alpha) * p.range.powf(p.alpha) / x.abs().powf(p.alpha + 1.0))
}

/// Tail amplitudes `C± = (1 ± β) γ_α R^α` of a law.
pub fn stable_tail_amplitudes(p: &StableParams) -> Result<TailAmplitudes> {
    p.validate()?;
    if p.alpha >= 2.0 {
        return Err(Error::TailUndefined);
    }
    let g = gamma_alpha(p.alpha) * p.range.powf(p.alpha);
    Ok(TailAmplitudes {
        c_plus: (1.0 + p.beta) * g,
        c_minus: (1.0 - p.beta) * g,
    })
}

/// One draw by the Chambers–Mallows–Stuck transformation.
pub fn sample<R: Rng + ?Sized>(p: &StableParams, rng: &mut R) -> f64 {
    p.range * sample_standard(p.alpha, p.beta, rng)
}

/// Unit-range draw; consumes exactly two uniforms.
pub fn sample_standard<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let e: f64 = rng.sample(Open01);
    let v = PI * (u - 0.5);
    let w = -e.ln();
    if alpha == 1.0 {
        let h = FRAC_PI_2 + beta * v;
        return (2.0 / PI) * (h * v.tan() - beta * ((FRAC_PI_2 * w * v.cos()) / h).ln());
    }
    if alpha == 2.0 {
        // Exact Gaussian branch of the transform; avoids tan(π) round-off.
        return 2.0 * v.sin() * w.sqrt();
    }
    let t = beta * (PI * alpha / 2.0).tan();
    let b = t.atan() / alpha;
    let s = (1.0 + t * t).powf(0.5 / alpha);
    let num = (alpha * (v + b)).sin();
    let den = v.cos().powf(1.0 / alpha);
    let tail = ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha);
    s * num / den * tail
}

/// Parameters of the sum of two independent laws with the same α.
///
/// At α = 1 with β ≠ 0 the sum also picks up a deterministic drift that the
/// `(α, β, R)` triple cannot represent; only the range and asymmetry are
/// returned.
pub fn add_params(p1: &StableParams, p2: &StableParams) -> Result<StableParams> {
    p1.validate()?;
    p2.validate()?;
    if p1.alpha != p2.alpha {
        return Err(Error::StabilityMismatch(p1.alpha, p2.alpha));
    }
    let a = p1.alpha;
    let w1 = p1.range.powf(a);
    let w2 = p2.range.powf(a);
    let total = w1 + w2;
    StableParams::new(a, (p1.beta * w1 + p2.beta * w2) / total, total.powf(1.0 / a))
}

/// Stable law sharing the tail amplitudes `C±` of a basin-of-attraction density.
pub fn tail_to_stable_params(alpha: f64, t: &TailAmplitudes) -> Result<StableParams> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("alpha = {alpha} not in (0, 2)")));
    }
    if t.c_plus < 0.0 || t.c_minus < 0.0 {
        return Err(Error::Domain("tail amplitudes must be nonnegative".into()));
    }
    let sum = t.c_plus + t.c_minus;
    if sum <= 0.0 {
        return Err(Error::DegenerateTail);
    }
    let range = (sum / (2.0 * gamma_alpha(alpha))).powf(1.0 / alpha);
    StableParams::new(alpha, (t.c_plus - t.c_minus) / sum, range)
}

/// Fit of `log|a_max|` against `log N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxScaling {
    /// Least-squares slope.
    pub slope: f64,
    /// Heavy-tail prediction `2/α`.
    pub expected: f64,
}

/// Least-squares exponent of the growth of the largest matrix element.
///
/// `samples` holds `(N, |a_max|)` pairs, several per size allowed.
pub fn frechet_max_check(samples: &[(usize, f64)], alpha: f64) -> Result<MaxScaling> {
    let mut sizes: Vec<usize> = samples.iter().map(|s| s.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: sizes.len(),
        });
    }
    if samples.iter().any(|s| !(s.1 > 0.0)) {
        return Err(Error::Domain("maxima must be positive".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| (s.0 as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    Ok(MaxScaling {
        slope: crate::stats::ols_slope(&xs, &ys),
        expected: 2.0 / alpha,
    })
}
