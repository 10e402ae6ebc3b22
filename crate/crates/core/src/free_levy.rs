//! Free probability: resolvents, R-transforms, free stable laws and free
//! addition.
//!
//! Conventions: `G(z) = ∫ ρ(t)/(z − t) dt`, `z = R(G(z)) + 1/G(z)`,
//! `ρ(λ) = −Im G(λ + i0⁺)/π`. Powers and logarithms use the principal branch
//! with arguments in `(−π, π]`. Boundary values `G(λ + i0⁺)` are tracked at
//! `λ + i·10⁻⁸` by Newton continuation from large `|λ|` (where `G ≈ 1/z`) and
//! then polished at `Im z = 0` when Newton converges there to a nearby root.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sinh_grid, GridFunction};
use crate::io::{DiagonalLaw, EnsembleConfig};
use crate::matrix_mc::sample_wigner_levy;
use crate::stable_dist::StableParams;
use crate::stats::TabulatedCdf;
use crate::quad::{self, QuadConfig};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Imaginary offset standing in for `i0⁺`.
pub const EPS_OFFSET: f64 = 1e-8;

/// Largest tolerated `Im G(λ + i0⁺)`.
pub const HERGLOTZ_TOL: f64 = 1e-10;

/// Index, asymmetry and range of a free stable law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeStableParams {
    pub alpha: f64,
    pub beta: f64,
    pub range: f64,
}

impl FreeStableParams {
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

/// Unit-modulus coefficient `b` of the stable R-transform `b z^{α−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BCoefficient {
    pub value: Complex64,
}

impl BCoefficient {
    /// `−e^{iα(1+β)π/2}` for α < 1, `e^{i(α−2)(1+β)π/2}` for 1 < α ≤ 2.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let value = if alpha > 0.0 && alpha < 1.0 {
            -Complex64::from_polar(1.0, alpha * (1.0 + beta) * PI / 2.0)
        } else if alpha > 1.0 && alpha <= 2.0 {
            Complex64::from_polar(1.0, (alpha - 2.0) * (1.0 + beta) * PI / 2.0)
        } else {
            return Err(Error::Domain(format!("no b coefficient for alpha = {alpha}")));
        };
        Ok(Self { value })
    }
}

/// A free cumulant generating function with its derivative.
pub trait RTransform: Send + Sync {
    fn eval(&self, z: Complex64) -> Result<Complex64>;
    fn deriv(&self, z: Complex64) -> Result<Complex64>;
    /// `(R(z), R′(z))` in one call.
    fn eval_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        Ok((self.eval(z)?, self.deriv(z)?))
    }
}

impl<T: RTransform + ?Sized> RTransform for &T {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        (**self).eval(z)
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        (**self).deriv(z)
    }
    fn eval_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        (**self).eval_deriv(z)
    }
}

impl<T: RTransform + ?Sized> RTransform for Box<T> {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        (**self).eval(z)
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        (**self).deriv(z)
    }
    fn eval_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        (**self).eval_deriv(z)
    }
}

/// Stable R-transform on the principal branch, rescaled by the range:
/// `R_r(z) = r R(r z)`.
impl RTransform for FreeStableParams {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        let (a, r) = (self.alpha, self.range);
        if a == 1.0 {
            if self.beta == 0.0 {
                return Ok(-I * r);
            }
            if z == Complex64::new(0.0, 0.0) {
                return Err(Error::Domain("ln z at z = 0".into()));
            }
            return Ok(r * (-I * (1.0 + self.beta) - (2.0 * self.beta / PI) * (r * z).ln()));
        }
        if a == 2.0 {
            return Ok(r * r * z);
        }
        if z == Complex64::new(0.0, 0.0) && a < 1.0 {
            return Err(Error::Domain("z^(alpha-1) at z = 0 for alpha < 1".into()));
        }
        let b = BCoefficient::new(a, self.beta)?.value;
        Ok(b * r.powf(a) * z.powf(a - 1.0))
    }

    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        let (a, r) = (self.alpha, self.range);
        if a == 1.0 {
            if self.beta == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            return Ok(-(2.0 * self.beta / PI) * r / z);
        }
        if a == 2.0 {
            return Ok(Complex64::new(r * r, 0.0));
        }
        let b = BCoefficient::new(a, self.beta)?.value;
        Ok(b * r.powf(a) * (a - 1.0) * z.powf(a - 2.0))
    }
}

/// `R(z)` of a free stable law. Arguments on the negative real axis, where
/// the principal branch of `z^{α−1}` or `ln z` is ambiguous, are rejected.
pub fn stable_r_transform(z: Complex64, p: &FreeStableParams) -> Result<Complex64> {
    p.validate()?;
    let branched = (p.alpha != 1.0 && p.alpha != 2.0) || (p.alpha == 1.0 && p.beta != 0.0);
    if branched && z.im == 0.0 && z.re < 0.0 {
        return Err(Error::Branch(format!("z = {z} lies on the branch cut")));
    }
    p.eval(z)
}

/// The zero law (`R ≡ 0`), neutral for free addition.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroLaw;

impl RTransform for ZeroLaw {
    fn eval(&self, _z: Complex64) -> Result<Complex64> {
        Ok(Complex64::new(0.0, 0.0))
    }
    fn deriv(&self, _z: Complex64) -> Result<Complex64> {
        Ok(Complex64::new(0.0, 0.0))
    }
}

/// Pointwise sum of two R-transforms.
#[derive(Debug, Clone)]
pub struct FreeSum<A, B> {
    pub first: A,
    pub second: B,
}

impl<A: RTransform, B: RTransform> RTransform for FreeSum<A, B> {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.first.eval(z)? + self.second.eval(z)?)
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.first.deriv(z)? + self.second.deriv(z)?)
    }
    fn eval_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (a, da) = self.first.eval_deriv(z)?;
        let (b, db) = self.second.eval_deriv(z)?;
        Ok((a + b, da + db))
    }
}

/// R-transform of the free sum: `R₁ + R₂`.
pub fn free_add<A: RTransform, B: RTransform>(first: A, second: B) -> FreeSum<A, B> {
    FreeSum { first, second }
}

/// Newton solve of `G R(G) + 1 − z G = 0` from `seed`.
fn newton_resolvent<R: RTransform + ?Sized>(r: &R, z: Complex64, seed: Complex64, tol: f64) -> Option<Complex64> {
    let mut g = seed;
    for _ in 0..60 {
        let (rv, rd) = r.eval_deriv(g).ok()?;
        let h = g * rv + 1.0 - z * g;
        let dh = rv + g * rd - z;
        if !(dh.norm() > 0.0) {
            return None;
        }
        let mut step = h / dh;
        // Keep iterates off the branch cut side opposite to the seed.
        let mut tries = 0;
        while (g - step).im > 0.0 && z.im >= 0.0 && tries < 30 {
            step *= 0.5;
            tries += 1;
        }
        g -= step;
        if !g.re.is_finite() || !g.im.is_finite() {
            return None;
        }
        if step.norm() <= tol * g.norm().max(1e-300) {
            let rv = r.eval(g).ok()?;
            let res = (g * rv + 1.0 - z * g).norm();
            return (res <= 1e3 * tol.max(1e-15)).then_some(g);
        }
    }
    None
}

/// Continuation solver for boundary values of the resolvent of an
/// R-transform.
pub struct ResolventTracker<'a, R: RTransform + ?Sized> {
    r: &'a R,
    tol: f64,
    /// Magnitude from which continuation starts.
    pub far: f64,
}

impl<'a, R: RTransform + ?Sized> ResolventTracker<'a, R> {
    pub fn new(r: &'a R, tol: f64) -> Self {
        Self { r, tol, far: 1e3 }
    }

    fn far_root(&self, lambda: f64) -> Result<Complex64> {
        let z = Complex64::new(lambda, EPS_OFFSET);
        let mut seed = 1.0 / z;
        // Refine the seed with one fixed-point step of G = 1/(z − R(G)).
        if let Ok(rv) = self.r.eval(seed) {
            let s = 1.0 / (z - rv);
            if s.im <= 0.0 && s.re.is_finite() {
                seed = s;
            }
        }
        newton_resolvent(self.r, z, seed, self.tol).ok_or(Error::RootTracking {
            last: seed,
            residual: f64::NAN,
        })
    }

    /// Move from the root `g` at `from` to `to`, halving steps on failure.
    fn track(&self, from: f64, g: Complex64, to: f64) -> Result<Complex64> {
        let mut stack = vec![to];
        let (mut x, mut g) = (from, g);
        let mut halvings = 0;
        while let Some(&target) = stack.last() {
            let z = Complex64::new(target, EPS_OFFSET);
            match newton_resolvent(self.r, z, g, self.tol).filter(|r| r.im <= HERGLOTZ_TOL && (r - g).norm() <= 0.5 * (1.0 + g.norm())) {
                Some(root) => {
                    x = target;
                    g = root;
                    stack.pop();
                }
                None => {
                    halvings += 1;
                    if halvings > 200 || (target - x).abs() < 1e-12 * (1.0 + x.abs()) {
                        return Err(Error::RootTracking { last: g, residual: f64::NAN });
                    }
                    stack.push(0.5 * (x + target));
                }
            }
        }
        Ok(g)
    }

    fn path(&self, lambda: f64) -> Vec<f64> {
        let sign = if lambda < 0.0 { -1.0 } else { 1.0 };
        let target = lambda.abs();
        let mut pts = Vec::new();
        let mut x = self.far;
        let near = target.max(2.0);
        while x > near {
            x = (x * 0.8).max(near);
            pts.push(x);
        }
        while x - target > 0.05 {
            x -= 0.05;
            pts.push(x.max(target));
        }
        pts.push(target);
        pts.iter().map(|v| sign * v).collect()
    }

    /// `G(λ + i0⁺)`.
    pub fn resolvent(&self, lambda: f64) -> Result<Complex64> {
        if !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda = {lambda}")));
        }
        let g = self.tracked(lambda)?;
        self.finish(lambda, g)
    }

    /// Boundary values along `lambdas`, continuing from point to point.
    pub fn curve(&self, lambdas: &[f64]) -> Result<Vec<Complex64>> {
        let mut order: Vec<usize> = (0..lambdas.len()).collect();
        order.sort_by(|&i, &j| lambdas[i].total_cmp(&lambdas[j]));
        let mut out = vec![Complex64::new(0.0, 0.0); lambdas.len()];
        let split = order.partition_point(|&i| lambdas[i] < 0.0);
        // Negative side from −far upwards, non-negative side from +far downwards.
        for (side, idx) in [(-1.0, &order[..split]), (1.0, &order[split..])] {
            let seq: Vec<usize> = if side < 0.0 { idx.to_vec() } else { idx.iter().rev().copied().collect() };
            let mut state: Option<(f64, Complex64)> = None;
            for i in seq {
                let l = lambdas[i];
                let g = match state {
                    None => self.tracked(l)?,
                    Some((x, g)) => self.track(x, g, l)?,
                };
                state = Some((l, g));
                out[i] = self.finish(l, g)?;
            }
        }
        Ok(out)
    }

    fn tracked(&self, lambda: f64) -> Result<Complex64> {
        if lambda.abs() >= self.far {
            return self.far_root(lambda);
        }
        let start = if lambda < 0.0 { -self.far } else { self.far };
        let mut g = self.far_root(start)?;
        let mut x = start;
        for p in self.path(lambda) {
            g = self.track(x, g, p)?;
            x = p;
        }
        Ok(g)
    }

    /// Polish at `Im z = 0` and apply the Herglotz check.
    fn finish(&self, lambda: f64, g: Complex64) -> Result<Complex64> {
        let z = Complex64::new(lambda, 0.0);
        let g = match newton_resolvent(self.r, z, g, self.tol) {
            Some(p) if p.im <= HERGLOTZ_TOL && (p - g).norm() <= 1e-4 * (1.0 + g.norm()) => p,
            _ => g,
        };
        if g.im > HERGLOTZ_TOL {
            return Err(Error::Branch(format!("Im G({lambda} + i0) = {} > 0", g.im)));
        }
        Ok(g)
    }
}

/// `G(λ + i0⁺)` of a free stable law.
pub fn resolvent(lambda: f64, p: &FreeStableParams, tol: f64) -> Result<Complex64> {
    p.validate()?;
    ResolventTracker::new(p, tol).resolvent(lambda)
}

/// `G(λ + i0⁺)` for an arbitrary R-transform.
pub fn resolvent_from_r<R: RTransform + ?Sized>(r: &R, lambda: f64, tol: f64) -> Result<Complex64> {
    ResolventTracker::new(r, tol).resolvent(lambda)
}

/// Density `−Im G(λ + i0⁺)/π` for an arbitrary R-transform.
pub fn density_from_r<R: RTransform + ?Sized>(r: &R, lambda: f64, tol: f64) -> Result<f64> {
    Ok((-resolvent_from_r(r, lambda, tol)?.im / PI).max(0.0))
}

/// Densities along `lambdas` for an arbitrary R-transform (one
/// continuation sweep per side).
pub fn density_curve_from_r<R: RTransform + ?Sized>(r: &R, lambdas: &[f64], tol: f64) -> Result<Vec<f64>> {
    let g = ResolventTracker::new(r, tol).curve(lambdas)?;
    Ok(g.iter().map(|g| (-g.im / PI).max(0.0)).collect())
}

/// Free stable density.
pub fn density(lambda: f64, p: &FreeStableParams) -> Result<f64> {
    Ok((-resolvent(lambda, p, 1e-14)?.im / PI).max(0.0))
}

/// Free stable density on a grid (one continuation sweep per side).
pub fn density_curve(lambdas: &[f64], p: &FreeStableParams) -> Result<Vec<f64>> {
    p.validate()?;
    let g = ResolventTracker::new(p, 1e-14).curve(lambdas)?;
    Ok(g.iter().map(|g| (-g.im / PI).max(0.0)).collect())
}

/// Leading large-|λ| density, `−Im[R(1/z)/z²]/π` at `z = λ + i0⁺`.
///
/// For β = 0 and unit range this is `sin(πα/2)|λ|^{−α−1}/π`; it vanishes at
/// α = 2.
pub fn density_tail(lambda: f64, p: &FreeStableParams) -> f64 {
    if p.alpha == 2.0 || lambda == 0.0 {
        return 0.0;
    }
    // ln z at λ + i0⁺ has argument π on the negative axis.
    let ln_z = Complex64::new(lambda.abs().ln(), if lambda < 0.0 { PI } else { 0.0 });
    let r = if p.alpha == 1.0 {
        p.range * (-I * (1.0 + p.beta) - (2.0 * p.beta / PI) * (p.range.ln() - ln_z))
    } else {
        let b = BCoefficient::new(p.alpha, p.beta).map(|b| b.value).unwrap_or_default();
        b * p.range.powf(p.alpha) * ((1.0 - p.alpha) * ln_z).exp()
    };
    (-(r * (-2.0 * ln_z).exp()).im / PI).max(0.0)
}

/// Large-|λ| potential `2 ln|λ| − (2/α) Re(b λ^{−α})` (α ≠ 1, up to a constant).
pub fn potential_asymptote(lambda: f64, p: &FreeStableParams) -> Result<f64> {
    let b = BCoefficient::new(p.alpha, p.beta)?.value * p.range.powf(p.alpha);
    let z = Complex64::new(lambda, 0.0);
    let zp = if lambda < 0.0 {
        Complex64::from_polar(lambda.abs().powf(-p.alpha), -PI * p.alpha)
    } else {
        z.powf(-p.alpha)
    };
    Ok(2.0 * lambda.abs().ln() - 2.0 / p.alpha * (b * zp).re)
}

/// Magnitude up to which [`potential`] integrates `V′ = 2 Re G` numerically.
pub const POTENTIAL_GRID_MAX: f64 = 200.0;

/// Potential `V(λ) = ∫₀^λ 2 Re G(t + i0⁺) dt` in the gauge `V(0) = 0`.
///
/// Beyond [`POTENTIAL_GRID_MAX`] the increment is taken from
/// [`potential_asymptote`] (α ≠ 1) or from `2 ln|λ|` (α = 1).
pub fn potential(lambda: f64, p: &FreeStableParams) -> Result<f64> {
    p.validate()?;
    let sign = if lambda < 0.0 { -1.0 } else { 1.0 };
    let top = lambda.abs().min(POTENTIAL_GRID_MAX);
    // Composite Gauss–Legendre on panels of width ≤ 0.25 near the origin,
    // growing geometrically further out.
    let mut edges = vec![0.0];
    let mut x: f64 = 0.0;
    while x < top {
        let w = (0.25f64).max(0.1 * x);
        x = (x + w).min(top);
        edges.push(x);
    }
    let gl = quad::GaussLegendre::new(16);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for e in edges.windows(2) {
        let (c, h) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        for (t, w) in gl.nodes.iter().zip(&gl.weights) {
            nodes.push(sign * (c + h * t));
            weights.push(w * h);
        }
    }
    let g = ResolventTracker::new(p, 1e-13).curve(&nodes)?;
    let mut v: f64 = g.iter().zip(&weights).map(|(g, w)| 2.0 * g.re * w).sum::<f64>() * sign;
    if lambda.abs() > POTENTIAL_GRID_MAX {
        let edge = sign * POTENTIAL_GRID_MAX;
        v += if p.alpha == 1.0 {
            2.0 * (lambda.abs().ln() - POTENTIAL_GRID_MAX.ln())
        } else {
            potential_asymptote(lambda, p)? - potential_asymptote(edge, p)?
        };
    }
    Ok(v)
}

/// Power-law tails `c₋|λ|^{−p}` (λ < lo) and `c₊ λ^{−p}` (λ > hi) attached
/// to a tabulated density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub c_minus: f64,
    pub c_plus: f64,
    pub exponent: f64,
}

/// Cauchy transform of a piecewise-linear density (exact for the
/// interpolant) plus optional power-law tails.
#[derive(Debug, Clone)]
pub struct CauchyTransform {
    x: Vec<f64>,
    y: Vec<f64>,
    tail: Option<TailModel>,
    mean: f64,
}

/// A resolvent evaluator usable by [`r_from_green`].
pub trait GreenFunction: Send + Sync {
    fn green(&self, z: Complex64) -> Result<Complex64>;
    fn green_deriv(&self, z: Complex64) -> Result<Complex64>;
    /// First moment (used only to seed the inversion).
    fn mean(&self) -> f64 {
        0.0
    }
}

fn ln1p(u: Complex64) -> Complex64 {
    let v = 1.0 + u;
    let d = v - 1.0;
    if d == Complex64::new(0.0, 0.0) {
        u
    } else {
        v.ln() * (u / d)
    }
}

impl CauchyTransform {
    pub fn new(rho: &GridFunction, tail: Option<TailModel>) -> Result<Self> {
        if let Some(t) = tail {
            if !(t.exponent > 1.0) || t.c_minus < 0.0 || t.c_plus < 0.0 {
                return Err(Error::Domain("tail model needs exponent > 1 and nonnegative amplitudes".into()));
            }
        }
        let x = rho.x().to_vec();
        let y = rho.y().to_vec();
        let mean = x
            .windows(2)
            .zip(y.windows(2))
            .map(|(x, y)| {
                let h = x[1] - x[0];
                h * (y[0] * (2.0 * x[0] + x[1]) + y[1] * (x[0] + 2.0 * x[1])) / 6.0
            })
            .sum();
        Ok(Self { x, y, tail, mean })
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn check(&self, z: Complex64) -> Result<()> {
        if z.im == 0.0 && (self.tail.is_some() || (z.re >= self.lo() && z.re <= self.hi())) {
            return Err(Error::Domain(format!("z = {z} lies on the support")));
        }
        Ok(())
    }

    /// Grid part: `(G, G′)`.
    fn grid_part(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut g = Complex64::new(0.0, 0.0);
        let mut dg = Complex64::new(0.0, 0.0);
        for i in 0..self.x.len() - 1 {
            let (a, b) = (self.x[i], self.x[i + 1]);
            let h = b - a;
            let s = (self.y[i + 1] - self.y[i]) / h;
            let lin = self.y[i] + s * (z - a);
            // ln((z − a)/(z − b)) = ln(1 + h/(z − b)).
            let log = ln1p(h / (z - b));
            g += lin * log - s * h;
            dg += s * log + lin * (1.0 / (z - a) - 1.0 / (z - b));
        }
        (g, dg)
    }

    /// One tail `∫_L^∞ c t^{−p}/(w − t) dt` (right: `w = z`, `L = hi`; left
    /// mirrored), with its derivative.
    fn tail_part(c: f64, p: f64, l: f64, w: Complex64) -> (Complex64, Complex64) {
        if c == 0.0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        if w.norm() <= 0.5 * l {
            // −c Σ w^n L^{−p−n}/(p+n).
            let mut g = Complex64::new(0.0, 0.0);
            let mut dg = Complex64::new(0.0, 0.0);
            let mut wn = Complex64::new(1.0, 0.0);
            let mut wn1 = Complex64::new(0.0, 0.0);
            for n in 0..200 {
                let n = n as f64;
                let coef = l.powf(-p - n) / (p + n);
                g -= c * wn * coef;
                dg -= c * n * wn1 * coef;
                if (wn * coef).norm() < 1e-18 * g.norm().max(1e-300) {
                    break;
                }
                wn1 = wn;
                wn *= w;
            }
            return (g, dg);
        }
        // t = L/u, u ∈ (0, 1]: ∫₀¹ c L^{1−p} u^{p−2}/(w − L/u) du.
        let cfg = QuadConfig::new(1e-15, 1e-12).with_max_intervals(400);
        let f = |u: f64| {
            if u == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            c * l.powf(1.0 - p) * u.powf(p - 2.0) / (w - l / u)
        };
        let df = |u: f64| {
            if u == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let d = w - l / u;
            -c * l.powf(1.0 - p) * u.powf(p - 2.0) / (d * d)
        };
        let g = quad::integrate(f, 0.0, 1.0, cfg).map(|q| q.value).unwrap_or_default();
        let dg = quad::integrate(df, 0.0, 1.0, cfg).map(|q| q.value).unwrap_or_default();
        (g, dg)
    }

    fn both(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        self.check(z)?;
        let (mut g, mut dg) = self.grid_part(z);
        if let Some(t) = self.tail {
            // Right tail in t − hi ≥ 0 measured from the origin: use t itself.
            let (gr, dr) = Self::tail_part(t.c_plus, t.exponent, self.hi(), z);
            // Left tail: t = −s, ∫ c s^{−p}/(z + s) ds = −(right form at −z).
            let (gl, dl) = Self::tail_part(t.c_minus, t.exponent, -self.lo(), -z);
            g += gr - gl;
            dg += dr + dl;
        }
        Ok((g, dg))
    }
}

impl GreenFunction for CauchyTransform {
    fn green(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.both(z)?.0)
    }
    fn green_deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.both(z)?.1)
    }
    fn mean(&self) -> f64 {
        self.mean
    }
}

/// `G(z) = ∫ ρ(t)/(z − t) dt` for a tabulated density (piecewise linear
/// between nodes, zero outside).
pub fn green_from_density(rho: &GridFunction, z: Complex64) -> Result<Complex64> {
    CauchyTransform::new(rho, None)?.green(z)
}

/// Solve `G(w) = z` by Newton along the homotopy `z_t = t·z`, seeded by
/// `w ≈ 1/z_t + mean`; returns `w`.
fn invert_green<G: GreenFunction + ?Sized>(g: &G, z: Complex64, seed: Option<Complex64>, tol: f64) -> Result<Complex64> {
    let newton = |target: Complex64, mut w: Complex64| -> std::result::Result<Complex64, (Complex64, f64)> {
        let want_sign = -target.im.signum();
        for _ in 0..60 {
            let gv = g.green(w).map_err(|_| (w, f64::NAN))?;
            let dg = g.green_deriv(w).map_err(|_| (w, f64::NAN))?;
            let res = gv - target;
            let mut step = res / dg;
            // Stay in the half-plane G maps onto `target`'s half-plane.
            let mut tries = 0;
            while target.im != 0.0 && (w - step).im * want_sign <= 0.0 && tries < 40 {
                step *= 0.5;
                tries += 1;
            }
            w -= step;
            if step.norm() <= tol * w.norm().max(1.0) {
                let r = (g.green(w).map_err(|_| (w, f64::NAN))? - target).norm();
                return if r <= 1e3 * tol * target.norm().max(1e-300) { Ok(w) } else { Err((w, r)) };
            }
        }
        let r = g.green(w).map(|v| (v - target).norm()).unwrap_or(f64::NAN);
        Err((w, r))
    };
    if let Some(s) = seed {
        if let Ok(w) = newton(z, s) {
            return Ok(w);
        }
    }
    let m = g.mean();
    // Homotopy in t from where 1/(t z) is far outside the support.
    let t0 = (1e-3 / z.norm()).min(1.0);
    let mut t = t0;
    let mut w = 1.0 / (t * z) + m;
    let mut step = 2.0f64;
    loop {
        match newton(t * z, w) {
            Ok(nw) => {
                w = nw;
                if t >= 1.0 {
                    return Ok(w);
                }
                let next = (t * step).min(1.0);
                t = next;
            }
            Err((last, residual)) => {
                if step < 1.0 + 1e-6 {
                    return Err(Error::RootTracking { last, residual });
                }
                t /= step;
                step = step.sqrt();
                t = (t * step).min(1.0);
            }
        }
    }
}

/// `R(z) = w − 1/z` where `G(w) = z`.
pub fn r_from_green<G: GreenFunction + ?Sized>(g: &G, z: Complex64, tol: f64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("R-transform inversion at z = 0".into()));
    }
    Ok(invert_green(g, z, None, tol)? - 1.0 / z)
}

/// R-transform obtained by numerically inverting a resolvent; derivative
/// from `R′(z) = 1/G′(w) + 1/z²`.
pub struct InverseGreen<G> {
    pub green: G,
    pub tol: f64,
    last: Mutex<Option<(Complex64, Complex64)>>,
}

impl<G: GreenFunction> InverseGreen<G> {
    pub fn new(green: G, tol: f64) -> Self {
        Self {
            green,
            tol,
            last: Mutex::new(None),
        }
    }

    fn solve(&self, z: Complex64) -> Result<Complex64> {
        let seed = {
            let last = self.last.lock().expect("cache lock");
            last.and_then(|(z0, w0)| ((z0 - z).norm() < 0.1 * z.norm()).then_some((z0, w0)))
        };
        if let Some((z0, w0)) = seed {
            if z0 == z {
                return Ok(w0);
            }
        }
        let seed = seed.map(|s| s.1);
        let w = invert_green(&self.green, z, seed, self.tol)?;
        *self.last.lock().expect("cache lock") = Some((z, w));
        Ok(w)
    }
}

impl<G: GreenFunction> RTransform for InverseGreen<G> {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.solve(z)? - 1.0 / z)
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        let w = self.solve(z)?;
        Ok(1.0 / self.green.green_deriv(w)? + 1.0 / (z * z))
    }
    fn eval_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let w = self.solve(z)?;
        Ok((w - 1.0 / z, 1.0 / self.green.green_deriv(w)? + 1.0 / (z * z)))
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `diag(R)` moved into `Q`.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Sampler of i.i.d. diagonal entries for `free-sum-diag` ensembles.
#[derive(Debug, Clone)]
pub enum DiagonalSampler {
    /// Semicircle of radius `r`: first coordinate of a uniform point in the disk.
    Semicircle(f64),
    /// Inverse CDF of a tabulated density with power-law tails beyond `±cut`.
    Tabulated {
        cdf: TabulatedCdf,
        cut: f64,
        alpha: f64,
        left_mass: f64,
        right_mass: f64,
    },
}

impl DiagonalSampler {
    pub fn new(law: &DiagonalLaw) -> Result<Self> {
        match *law {
            DiagonalLaw::Semicircle { radius } => {
                if !(radius > 0.0) {
                    return Err(Error::Domain(format!("radius = {radius} must be positive")));
                }
                Ok(Self::Semicircle(radius))
            }
            DiagonalLaw::FreeStable { alpha, beta, range } => {
                let p = FreeStableParams::new(alpha, beta, range)?;
                if alpha == 2.0 {
                    return Ok(Self::Semicircle(2.0 * range));
                }
                let cut = 1e3 * range;
                let x = sinh_grid(cut, 8001, range)?;
                let dens = density_curve(&x, &p)?;
                // Tail masses ∫ c|x|^{−α−1} beyond the cut.
                let left_mass = density_tail(-cut, &p) * cut / alpha;
                let right_mass = density_tail(cut, &p) * cut / alpha;
                let cdf = TabulatedCdf::from_density(&x, &dens, left_mass, right_mass)?;
                Ok(Self::Tabulated {
                    cdf,
                    cut,
                    alpha,
                    left_mass,
                    right_mass,
                })
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Semicircle(r) => {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                r * u.sqrt() * (2.0 * PI * v).cos()
            }
            Self::Tabulated {
                cdf,
                cut,
                alpha,
                left_mass,
                right_mass,
            } => {
                let u: f64 = rng.random();
                if u < *left_mass {
                    -cut * (u / left_mass).powf(-1.0 / alpha)
                } else if u > 1.0 - right_mass {
                    cut * ((1.0 - u) / right_mass).powf(-1.0 / alpha)
                } else {
                    cdf.quantile(u)
                }
            }
        }
    }
}

type SamplerCache = Mutex<Vec<(DiagonalLaw, Arc<DiagonalSampler>)>>;

fn cached_sampler(law: &DiagonalLaw) -> Result<Arc<DiagonalSampler>> {
    static CACHE: OnceLock<SamplerCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    if let Some((_, s)) = cache.lock().expect("cache lock").iter().find(|(l, _)| l == law) {
        return Ok(s.clone());
    }
    let s = Arc::new(DiagonalSampler::new(law)?);
    cache.lock().expect("cache lock").push((law.clone(), s.clone()));
    Ok(s)
}

/// `K^{−1/α} Σₖ Oₖ Dₖ Oₖᵀ` with i.i.d. diagonal entries and Haar `Oₖ`.
pub fn free_sum_diag<R: Rng + ?Sized>(n: usize, k: usize, alpha: f64, diag: &DiagonalSampler, rng: &mut R) -> DMatrix<f64> {
    let mut sum = DMatrix::<f64>::zeros(n, n);
    for _ in 0..k {
        let d: Vec<f64> = (0..n).map(|_| diag.sample(rng)).collect();
        let o = haar_orthogonal(n, rng);
        let mut od = o.clone();
        for (j, &dj) in d.iter().enumerate() {
            od.column_mut(j).scale_mut(dj);
        }
        sum.gemm(1.0, &od, &o.transpose(), 1.0);
    }
    sum / (k as f64).powf(1.0 / alpha)
}

/// `K^{−1/α} Σₖ Oₖ (Aₖ/N^{1/α}) Oₖᵀ` with Wigner–Lévy `Aₖ` of entry law `p`.
pub fn free_sum_wigner_levy<R: Rng + ?Sized>(n: usize, k: usize, p: &StableParams, rng: &mut R) -> DMatrix<f64> {
    let alpha = p.alpha;
    let mut sum = DMatrix::<f64>::zeros(n, n);
    for _ in 0..k {
        let a = sample_wigner_levy(n, p, rng) / (n as f64).powf(1.0 / alpha);
        let o = haar_orthogonal(n, rng);
        let oa = &o * &a;
        sum.gemm(1.0, &oa, &o.transpose(), 1.0);
    }
    sum / (k as f64).powf(1.0 / alpha)
}

/// Entry range `Γ(1+α)^{−1/α}` whose Wigner–Lévy tail matches the unit free
/// stable tail.
pub fn matched_wl_range(alpha: f64) -> f64 {
    statrs::function::gamma::gamma(1.0 + alpha).powf(-1.0 / alpha)
}

/// One matrix of a `free-sum-diag` or `free-sum-wl` config.
pub fn free_sum_matrix<R: Rng + ?Sized>(cfg: &EnsembleConfig, rng: &mut R) -> Result<DMatrix<f64>> {
    match cfg {
        EnsembleConfig::FreeSumDiag { n, k, diagonal, alpha, .. } => {
            let norm = alpha.unwrap_or(match diagonal {
                DiagonalLaw::Semicircle { .. } => 2.0,
                DiagonalLaw::FreeStable { alpha, .. } => *alpha,
            });
            let s = cached_sampler(diagonal)?;
            Ok(free_sum_diag(*n, *k, norm, &s, rng))
        }
        EnsembleConfig::FreeSumWl { n, k, alpha, range, .. } => {
            let p = StableParams::new(*alpha, 0.0, range.unwrap_or_else(|| matched_wl_range(*alpha)))?;
            Ok(free_sum_wigner_levy(*n, *k, &p, rng))
        }
        other => Err(Error::config("kind", format!("{} is not a free-sum ensemble", other.kind()))),
    }
}
