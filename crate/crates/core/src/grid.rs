//! Tabulated functions on a one-dimensional grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real function sampled on a strictly increasing grid, evaluated off-grid
/// by monotone (Fritsch–Carlson) cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Samples", into = "Samples")]
pub struct GridFunction {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Samples {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl TryFrom<Samples> for GridFunction {
    type Error = Error;
    fn try_from(s: Samples) -> Result<Self> {
        Self::new(s.x, s.y)
    }
}

impl From<GridFunction> for Samples {
    fn from(f: GridFunction) -> Self {
        Samples { x: f.x, y: f.y }
    }
}

impl GridFunction {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Domain(format!("grid has {} nodes but {} values", x.len(), y.len())));
        }
        if x.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: x.len() });
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("grid must be strictly increasing".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid function has non-finite entries".into()));
        }
        let slopes = pchip_slopes(&x, &y);
        Ok(Self { x, y, slopes })
    }

    /// Tabulate `f` on `x`.
    pub fn from_fn<F: FnMut(f64) -> f64>(x: Vec<f64>, f: F) -> Result<Self> {
        let y = x.iter().copied().map(f).collect();
        Self::new(x, y)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    /// Interpolated value; [`Error::Extrapolation`] outside the grid.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::Extrapolation {
                x,
                lo: self.lo(),
                hi: self.hi(),
            });
        }
        Ok(self.eval_inside(x))
    }

    fn eval_inside(&self, x: f64) -> f64 {
        let slopes = &self.slopes;
        let i = self.x.partition_point(|&g| g <= x).clamp(1, self.x.len() - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * slopes[i] + h01 * self.y[i + 1] + h11 * h * slopes[i + 1]
    }

    /// Trapezoidal integral over the whole grid.
    pub fn trapezoid(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Symmetric grid on `[-x_max, x_max]` with `n` (odd) nodes, `x = c·sinh(s)`
/// for uniform `s`; `c` sets the spacing at the origin.
pub fn sinh_grid(x_max: f64, n: usize, c: f64) -> Result<Vec<f64>> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::Domain(format!("sinh grid needs an odd node count >= 3, got {n}")));
    }
    if !(x_max > 0.0 && c > 0.0) {
        return Err(Error::Domain("sinh grid needs x_max > 0 and c > 0".into()));
    }
    let s_max = (x_max / c).asinh();
    let m = (n - 1) / 2;
    let mut g = vec![0.0; n];
    for k in 1..=m {
        let v = c * (s_max * k as f64 / m as f64).sinh();
        g[m + k] = v;
        g[m - k] = -v;
    }
    g[n - 1] = x_max;
    g[0] = -x_max;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_cubics_closely_and_hits_nodes() {
        let x: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let f = GridFunction::from_fn(x, |t| t * t * t + 1.0).unwrap();
        assert_eq!(f.eval(0.5).unwrap(), 0.5f64.powi(3) + 1.0);
        assert!((f.eval(1.234).unwrap() - (1.234f64.powi(3) + 1.0)).abs() < 1e-4);
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![0.0, 0.0, 0.0, 1.0, 1.0];
        let f = GridFunction::new(x, y).unwrap();
        let mut prev = -1.0;
        for i in 0..=400 {
            let v = f.eval(i as f64 * 0.01).unwrap();
            assert!(v >= prev - 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn rejects_extrapolation_and_bad_grids() {
        let f = GridFunction::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(matches!(f.eval(1.5), Err(Error::Extrapolation { .. })));
        assert!(GridFunction::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(GridFunction::new(vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn sinh_grid_is_symmetric_and_denser_at_origin() {
        let g = sinh_grid(50.0, 801, 0.5).unwrap();
        assert_eq!(g.len(), 801);
        assert_eq!(g[400], 0.0);
        assert_eq!(g[800], 50.0);
        for i in 0..801 {
            assert_eq!(g[i], -g[800 - i]);
        }
        assert!(g[401] - g[400] < g[800] - g[799]);
    }

    #[test]
    fn serde_round_trip() {
        let f = GridFunction::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 0.5]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        let g: GridFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        assert_eq!(f.eval(2.0).unwrap(), g.eval(2.0).unwrap());
    }
}
