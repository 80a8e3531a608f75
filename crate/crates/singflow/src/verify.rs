//! Pointwise residual of the operator, the two dilation maps used to
//! strengthen sub/super-solutions, and boundary-rate fitting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{psi_unchecked, ProblemSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("insufficient data: need >= 8 points spanning >= 2 decades, got {points} points over {decades:.2} decades")]
    InsufficientData { points: usize, decades: f64 },
    #[error("empty gamma grid")]
    EmptyGrid,
}

/// `dt - f(factor * g(dx) * dxx)` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub value: f64,
    pub point: Option<(f64, f64)>,
    pub factor: f64,
}

impl Residual {
    pub fn at(mut self, x: f64, t: f64) -> Self {
        self.point = Some((x, t));
        self
    }
}

pub fn residual(spec: &ProblemSpec, dt: f64, dx: f64, dxx: f64, factor: f64) -> Residual {
    Residual { value: dt - spec.f.eval(factor * spec.g.eval(dx) * dxx), point: None, factor }
}

/// `v((1+l)x, (1+l)t) / (1+l)`, defined on `(-b/(1+l), b/(1+l))`.
pub fn scale_super<F>(v: F, lambda: f64) -> impl Fn(f64, f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let k = 1.0 + lambda;
    move |x, t| v(k * x, k * t) / k
}

/// `(1+l) u(x/(1+l), t/(1+l))`, defined on `(-(1+l)b, (1+l)b)`.
pub fn scale_sub<F>(u: F, lambda: f64) -> impl Fn(f64, f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let k = 1.0 + lambda;
    move |x, t| k * u(x / k, t / k)
}

/// Result of regressing boundary values on `psi_gamma(distance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub gamma: f64,
    pub d: f64,
    pub offset: f64,
    /// Relative disagreement of `D` fitted on the near and far halves.
    pub spread: f64,
    /// RMS of relative residuals at the selected gamma.
    pub misfit: f64,
}

/// `{0, 0.25, ..., 5}`, plus `(2-alpha)/(alpha-1)` when `1 < alpha <= 2`.
pub fn default_gamma_grid(alpha: Option<f64>) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=20).map(|k| 0.25 * k as f64).collect();
    if let Some(a) = alpha {
        if a > 1.0 && a <= 2.0 {
            let g = (2.0 - a) / (a - 1.0);
            if !grid.iter().any(|&v| (v - g).abs() < 1e-12) {
                grid.push(g);
            }
        }
    }
    grid
}

/// Weighted least squares of `u = D psi + C` with weights `1/u^2`.
fn weighted_fit(gamma: f64, pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(d, u) in pts {
        let w = 1.0 / (u * u).max(1e-300);
        let p = psi_unchecked(gamma, d);
        sw += w;
        sx += w * p;
        sy += w * u;
        sxx += w * p * p;
        sxy += w * p * u;
    }
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let offset = (sy - slope * sx) / sw;
    let mut ss = 0.0;
    for &(d, u) in pts {
        let r = (u - slope * psi_unchecked(gamma, d) - offset) / u.abs().max(1e-300);
        ss += r * r;
    }
    (slope, offset, (ss / pts.len() as f64).sqrt())
}

/// Fits `u ~ D psi_gamma(d) + C` over `(distance to boundary, value)` pairs,
/// choosing the gamma from `gamma_grid` with the smallest relative misfit.
pub fn fit_boundary_rate(samples: &[(f64, f64)], gamma_grid: &[f64]) -> Result<RateFit, FitError> {
    if gamma_grid.is_empty() {
        return Err(FitError::EmptyGrid);
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &(d, _)| (a.min(d), b.max(d)));
    let decades = if samples.is_empty() { 0.0 } else { (hi / lo).log10() };
    if samples.len() < 8 || !(decades >= 2.0 - 1e-9) {
        return Err(FitError::InsufficientData { points: samples.len(), decades });
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best: Option<RateFit> = None;
    for &gamma in gamma_grid {
        let (d, offset, misfit) = weighted_fit(gamma, &pts);
        if !misfit.is_finite() {
            continue;
        }
        if best.is_none_or(|b| misfit < b.misfit) {
            best = Some(RateFit { gamma, d, offset, spread: 0.0, misfit });
        }
    }
    let mut fit = best.ok_or(FitError::EmptyGrid)?;
    let half = pts.len() / 2;
    let (d_far, _, _) = weighted_fit(fit.gamma, &pts[..half]);
    let (d_near, _, _) = weighted_fit(fit.gamma, &pts[half..]);
    fit.spread = (d_far - d_near).abs() / fit.d.abs().max(1e-300);
    Ok(fit)
}
