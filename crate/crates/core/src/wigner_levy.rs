//! Limiting eigenvalue density of Wigner–Lévy matrices.
//!
//! For a symmetric matrix with i.i.d. entries of index α, scaled by
//! `N^{-1/α}`, the density is
//!
//! ```text
//! ρ(λ) = (1/Λ) L^{R̂(u), β̂(u)}_{α/2}(u),   u = λ/Λ,
//! Λ = R (Γ(1+α) cos(πα/4) / Γ(1+α/2))^{1/α},
//! ```
//!
//! where the running range and asymmetry solve, node by node,
//!
//! ```text
//! R̂^{α/2}(u) = ∫ |x|^{−α/2} L^{R̂(u),β̂(u)}_{α/2}(u − x) dx
//! β̂(u) R̂^{α/2}(u) = ∫ sign(x) |x|^{−α/2} L^{R̂(u),β̂(u)}_{α/2}(u − x) dx.
//! ```
//!
//! The running parameters inside the integral are taken at `u`, the
//! argument of the outer function (cavity self-consistency). With `a = α/2`
//! and `Z` the unit-range `(a, β̂)` law this reads `R̂^α = h(u/R̂, β̂)` and
//! `β̂ = k(u/R̂, β̂)/h(u/R̂, β̂)` with
//! `h(v, β) = E|v − Z|^{−a}`, `k(v, β) = E sign(v − Z)|v − Z|^{−a}`.
//!
//! Two evaluators of `(h, k)` are provided ([`InnerIntegral`]): the
//! Fourier representation on a rotated contour, used by default, and the
//! direct x-integral with symmetric pairing around the singular point and
//! analytic tail completion.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{sinh_grid, GridFunction};
use crate::quad::{self, QuadConfig};
use crate::stable_dist::StandardDensity;

/// Scale Λ mapping the reduced variable `u = λ/Λ` to eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaScale {
    pub value: f64,
}

impl LambdaScale {
    pub fn new(alpha: f64, range: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::Domain(format!("range must be positive, got {range}")));
        }
        let ratio = gamma(1.0 + alpha) * (PI * alpha / 4.0).cos() / gamma(1.0 + alpha / 2.0);
        Ok(Self {
            value: range * ratio.powf(1.0 / alpha),
        })
    }
}

/// How the inner moments `h`, `k` are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerIntegral {
    /// Fourier integral of `|x|^{−a}` against the characteristic function,
    /// with the contour rotated into the decaying sector.
    Contour,
    /// x-space quadrature against the tabulated stable density.
    Direct,
}

/// Solver grid and iteration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Half-width of the symmetric grid in `u = λ/Λ`.
    pub x_max: f64,
    /// Odd node count.
    pub nodes: usize,
    /// Node spacing near the origin is about `spacing·asinh(x_max/spacing)/(nodes/2)`.
    pub spacing: f64,
    /// Damping η in `new = (1−η)·old + η·F(old)`.
    pub damping: f64,
    pub inner: InnerIntegral,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_max: 50.0,
            nodes: 801,
            spacing: 1.0,
            damping: 0.5,
            inner: InnerIntegral::Contour,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return Err(Error::config("x_max", "must be positive"));
        }
        if self.nodes < 5 || self.nodes.is_multiple_of(2) {
            return Err(Error::config("nodes", "must be odd and at least 5"));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::config("spacing", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config("damping", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        self.validate()?;
        sinh_grid(self.x_max, self.nodes, self.spacing)
    }
}

/// Regime of the solved equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Validity {
    /// 1 < α < 2, any entry asymmetry.
    Established,
    /// α ≤ 1: numerically extended regime, symmetric entries only.
    SymmetricOnlyExtended,
}

/// Solved running range `R̂(u)` and asymmetry `β̂(u)` for one α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningParams {
    pub alpha: f64,
    pub r_hat: GridFunction,
    pub beta_hat: GridFunction,
    /// Sup-norm of `F(p) − p` at the returned `p`.
    pub residual: f64,
    pub tol: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub validity: Validity,
    pub config: GridConfig,
}

impl RunningParams {
    pub fn grid(&self) -> &[f64] {
        self.r_hat.x()
    }

    /// `(R̂, β̂)` at reduced argument `u` (monotone cubic between nodes).
    pub fn at(&self, u: f64) -> Result<(f64, f64)> {
        let r = self.r_hat.eval(u)?;
        let b = self.beta_hat.eval(u)?.clamp(-1.0, 1.0);
        Ok((r, b))
    }

    pub fn u_max(&self) -> f64 {
        self.r_hat.hi()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rp: Self = serde_json::from_str(s)?;
        if rp.r_hat.x() != rp.beta_hat.x() {
            return Err(Error::Domain("r_hat and beta_hat grids differ".into()));
        }
        Ok(rp)
    }

    /// CSV with columns `u, r_hat, beta_hat`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("u,r_hat,beta_hat\n");
        for ((u, r), b) in self.r_hat.x().iter().zip(self.r_hat.y()).zip(self.beta_hat.y()) {
            s.push_str(&format!("{},{},{}\n", crate::io::fmt_f64(*u), crate::io::fmt_f64(*r), crate::io::fmt_f64(*b)));
        }
        s
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("Wigner-Levy solver needs 0 < alpha < 2, got {alpha}")));
    }
    Ok(())
}

/// `(h, k)` = `(E|v − Z|^{−a}, E sign(v − Z)|v − Z|^{−a})` for `Z` of index
/// `a = α/2`, asymmetry `beta` and unit range.
pub fn cavity_moments(alpha: f64, v: f64, beta: f64, method: InnerIntegral) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    match method {
        InnerIntegral::Contour => Ok(ContourMoments::new(alpha / 2.0).eval(v, beta)),
        InnerIntegral::Direct => direct_moments(alpha / 2.0, v, beta),
    }
}

/// Contour evaluator of the inner moments.
///
/// With `I(v) = ∫₀^∞ exp(−i v t^{1/a} − t(1 − iβ tan(πa/2))) dt`,
/// `h = 2Γ(1−a) sin(πa/2)/(πa) · Re I` and
/// `k = −2Γ(1−a) cos(πa/2)/(πa) · Im I`. For `v > 0` the path
/// `t = s e^{−iθ}` makes both exponents decay; `v < 0` uses
/// `I(v, β) = conj I(−v, −β)`.
#[derive(Debug, Clone, Copy)]
struct ContourMoments {
    a: f64,
    tan_a: f64,
    h_pref: f64,
    k_pref: f64,
}

impl ContourMoments {
    fn new(a: f64) -> Self {
        let base = 2.0 * gamma(1.0 - a) / (PI * a);
        Self {
            a,
            tan_a: (PI * a / 2.0).tan(),
            h_pref: base * (PI * a / 2.0).sin(),
            k_pref: -base * (PI * a / 2.0).cos(),
        }
    }

    fn eval(&self, v: f64, beta: f64) -> (f64, f64) {
        let i = if v < 0.0 {
            self.integral(-v, -beta).conj()
        } else {
            self.integral(v, beta)
        };
        (self.h_pref * i.re, self.k_pref * i.im)
    }

    fn integral(&self, v: f64, beta: f64) -> Complex64 {
        let bt = beta * self.tan_a;
        let lin = Complex64::new(1.0, -bt);
        if v == 0.0 {
            return 1.0 / lin;
        }
        let p = 1.0 / self.a;
        // Keep the linear decay rate cos θ − βT sin θ at least 1/2.
        let mut theta = 0.5 * PI * self.a;
        if bt > 0.0 {
            theta = theta.min(0.5 * (1.0 / bt).atan());
        }
        let rot = Complex64::from_polar(1.0, -theta);
        let lin_rot = lin * rot;
        let osc = Complex64::new(0.0, -v) * Complex64::from_polar(1.0, -theta * p);
        let rate = lin_rot.re;
        let power_rate = -osc.re;
        let f = |s: f64| (osc * s.powf(p) - lin_rot * s).exp();
        // |integrand| < e^{−40} beyond s_end.
        let mut s_end = 40.0 / rate;
        if power_rate > 0.0 {
            s_end = s_end.min((40.0 / power_rate).powf(self.a));
        }
        let s_star = (1.0 / v).powf(self.a).min(s_end);
        let mut pts = vec![0.0];
        let mut s = 0.25 * s_star;
        while s < s_end {
            pts.push(s);
            s *= 4.0;
        }
        pts.push(s_end);
        let cfg = QuadConfig::new(1e-15, 1e-12).with_max_intervals(400);
        let q = quad::integrate_breakpoints(f, &pts, cfg).unwrap_or_else(|_| {
            // Best effort at a looser tolerance.
            quad::integrate_breakpoints(f, &pts, QuadConfig::new(1e-12, 1e-9).with_max_intervals(2000))
                .expect("contour integrand is smooth and decaying")
        });
        rot * q.value
    }
}

/// x-space moments: `∫₀^∞ x^{−a}[f(v−x) ± f(v+x)] dx` with `x = t^{1/(1−a)}`
/// (which absorbs the `x^{−a}` singularity), cut at `X` and completed with the
/// two-term tail expansion of `f`.
fn direct_moments(a: f64, v: f64, beta: f64) -> Result<(f64, f64)> {
    let d = StandardDensity::new(a, beta);
    let q = 1.0 / (1.0 - a);
    let x_cut = 1e6 * v.abs().max(1.0);
    let t_cut = x_cut.powf(1.0 - a);
    let tol = 1e-13;
    let both = |t: f64| {
        let x = t.powf(q);
        (q * d.eval(v - x, tol), q * d.eval(v + x, tol))
    };
    let mut pts = vec![0.0];
    for x in [0.5 * v.abs(), v.abs(), 2.0 * v.abs() + 1.0, 10.0 * (v.abs() + 1.0)] {
        let t = x.powf(1.0 - a);
        if t > *pts.last().unwrap() && t < t_cut {
            pts.push(t);
        }
    }
    let mut t = *pts.last().unwrap() * 4.0;
    while t < t_cut {
        pts.push(t);
        t *= 4.0;
    }
    pts.push(t_cut);
    let cfg = QuadConfig::new(1e-12, 1e-10).with_max_intervals(400);
    let minus = quad::integrate_breakpoints(|t| both(t).0, &pts, cfg)?.value;
    let plus = quad::integrate_breakpoints(|t| both(t).1, &pts, cfg)?.value;
    // f(v + x) follows the right tail, f(v − x) the left one.
    let (r1, r2) = d.tail_coefficients(true);
    let (l1, l2) = d.tail_coefficients(false);
    let x = x_cut;
    let tail = |c1: f64, c2: f64, shift: f64| {
        c1 * (x.powf(-2.0 * a) / (2.0 * a) - (a + 1.0) * shift * x.powf(-2.0 * a - 1.0) / (2.0 * a + 1.0))
            + c2 * x.powf(-3.0 * a) / (3.0 * a)
    };
    let plus = plus + tail(r1, r2, v);
    let minus = minus + tail(l1, l2, -v);
    Ok((minus + plus, minus - plus))
}

/// Solve the running-parameter equations on the grid of `cfg` by damped
/// fixed-point iteration from `R̂ ≡ 1`, `β̂ ≡ 0`.
///
/// The residual is the sup-norm of `F(p) − p` over both components. For
/// α ≤ 1 the result carries [`Validity::SymmetricOnlyExtended`].
pub fn solve_running_params(alpha: f64, cfg: &GridConfig, tol: f64, max_iter: usize) -> Result<RunningParams> {
    check_alpha(alpha)?;
    let grid = cfg.grid()?;
    if !(tol > 0.0) {
        return Err(Error::config("tol", "must be positive"));
    }
    let a = alpha / 2.0;
    let contour = ContourMoments::new(a);
    let map = |u: f64, r: f64, b: f64| -> Result<(f64, f64)> {
        let (h, k) = match cfg.inner {
            InnerIntegral::Contour => contour.eval(u / r, b),
            InnerIntegral::Direct => direct_moments(a, u / r, b)?,
        };
        if !(h > 0.0) {
            return Err(Error::Degenerate(format!("non-positive moment h = {h} at u = {u}")));
        }
        Ok((h.powf(1.0 / alpha), (k / h).clamp(-1.0, 1.0)))
    };
    let n = grid.len();
    let mut r = vec![1.0; n];
    let mut b = vec![0.0; n];
    // Per-node residual of the current iterate. The node equations are
    // decoupled, so a node whose residual is far below tol is left fixed and
    // its residual stays exact.
    let mut node_res = vec![f64::INFINITY; n];
    let settled = 1e-3 * tol;
    let mut history = Vec::new();
    let eta = cfg.damping;
    loop {
        let mapped: Vec<Option<(f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                if node_res[i] <= settled {
                    Ok(None)
                } else {
                    map(grid[i], r[i], b[i]).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        for (i, m) in mapped.iter().enumerate() {
            if let Some((fr, fb)) = *m {
                node_res[i] = (fr - r[i]).abs().max((fb - b[i]).abs());
            }
        }
        let residual = node_res.iter().copied().fold(0.0, f64::max);
        history.push(residual);
        if residual <= tol {
            break;
        }
        if history.len() >= max_iter {
            return Err(Error::Convergence { residual, history });
        }
        for (i, m) in mapped.iter().enumerate() {
            if let Some((fr, fb)) = *m {
                if node_res[i] > settled {
                    r[i] = (1.0 - eta) * r[i] + eta * fr;
                    b[i] = (1.0 - eta) * b[i] + eta * fb;
                }
            }
        }
    }
    let residual = *history.last().expect("at least one iteration");
    Ok(RunningParams {
        alpha,
        r_hat: GridFunction::new(grid.clone(), r)?,
        beta_hat: GridFunction::new(grid, b)?,
        residual,
        tol,
        iterations: history.len(),
        history,
        validity: if alpha <= 1.0 {
            Validity::SymmetricOnlyExtended
        } else {
            Validity::Established
        },
        config: *cfg,
    })
}

/// Eigenvalue density at `lambda` for entries of range `range`.
///
/// Fails with [`Error::Extrapolation`] when `λ/Λ` lies outside the solved
/// grid; see [`density_full`] for the evaluator defined on all of ℝ.
pub fn density(lambda: f64, alpha: f64, range: f64, rp: &RunningParams) -> Result<f64> {
    if alpha != rp.alpha {
        return Err(Error::StabilityMismatch(alpha, rp.alpha));
    }
    let scale = LambdaScale::new(alpha, range)?.value;
    let u = lambda / scale;
    let (r, b) = rp.at(u)?;
    let f = StandardDensity::new(alpha / 2.0, b).eval(u / r, 1e-12);
    Ok((f / (r * scale)).max(0.0))
}

/// [`density`] on the grid, [`density_tail`] beyond it.
pub fn density_full(lambda: f64, alpha: f64, range: f64, rp: &RunningParams) -> Result<f64> {
    let scale = LambdaScale::new(alpha, range)?.value;
    if (lambda / scale).abs() > rp.u_max() {
        if alpha != rp.alpha {
            return Err(Error::StabilityMismatch(alpha, rp.alpha));
        }
        return Ok(density_tail(lambda, alpha, range));
    }
    density(lambda, alpha, range, rp)
}

/// Large-|λ| asymptote `Γ(1+α) sin(πα/2) R^α / (π |λ|^{α+1})`.
pub fn density_tail(lambda: f64, alpha: f64, range: f64) -> f64 {
    gamma(1.0 + alpha) * (PI * alpha / 2.0).sin() * range.powf(alpha) / (PI * lambda.abs().powf(alpha + 1.0))
}

/// Closed-form height of the density at the origin,
/// `Γ(1+2/α)/(πR) · (Γ²(1+α/2)/Γ(1+α))^{1/α}`.
pub fn peak_density(alpha: f64, range: f64) -> f64 {
    let g = gamma(1.0 + alpha / 2.0);
    gamma(1.0 + 2.0 / alpha) / (PI * range) * (g * g / gamma(1.0 + alpha)).powf(1.0 / alpha)
}

/// Total mass: adaptive quadrature of [`density`] between grid nodes plus
/// the [`density_tail`] mass beyond the grid.
pub fn normalization_check(rp: &RunningParams, alpha: f64, range: f64) -> Result<f64> {
    let scale = LambdaScale::new(alpha, range)?.value;
    let nodes = rp.grid();
    let cfg = QuadConfig::new(1e-10, 1e-8);
    let inner: f64 = nodes
        .par_windows(2)
        .map(|w| {
            quad::integrate(|l| density(l, alpha, range, rp).unwrap_or(0.0), w[0] * scale, w[1] * scale, cfg)
                .map(|q| q.value)
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    Ok(inner + 2.0 * tail_mass(rp.u_max() * scale, alpha, range))
}

/// `∫_L^∞ density_tail`.
pub fn tail_mass(l: f64, alpha: f64, range: f64) -> f64 {
    gamma(1.0 + alpha) * (PI * alpha / 2.0).sin() * range.powf(alpha) / (PI * alpha * l.powf(alpha))
}
