//! Traveling waves `W(x) + ct` blowing up at both ends of `(-b, b)`.
//!
//! With `G(s) = int_{-inf}^s g`, the profile slope is `W_x(x) = G^{-1}((x+b) G(inf) / 2b)`
//! and the speed is `c = f(G(inf) / 2b)`. `G` is built from a converged
//! Gauss-Kronrod partition of a finite window `[-S0, S0]` plus tail integrals
//! computed in the variable `u = (S0/s)^(alpha-1)`, in which the integrand is
//! bounded.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{psi_unchecked, DiffusionWeight, ProblemSpec};
use crate::numerics::{adaptive_panels, gk15, integrate, Panel};
use crate::regime::{classify_wave_alpha, WaveVerdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("divergent integral: alpha = {alpha} <= 1 gives G(inf) = inf")]
    DivergentIntegral { alpha: f64 },
    #[error("grid too small: {0} < 64")]
    GridTooSmall(usize),
    #[error("declared tail of g not reached up to |s| = {0:e}")]
    TailNotReached(f64),
    #[error("rate extraction failed: spread {spread} exceeds 10%")]
    RateExtraction { spread: f64 },
    #[error("rate extraction needs 1 < alpha <= 2, got {0}")]
    RateOutOfRange(f64),
}

const TAIL_MATCH: f64 = 1e-3;
const MID_ABS_TOL: f64 = 1e-14;
const TAIL_REL_TOL: f64 = 1e-14;
const DEEPEST_LEVEL: i32 = 40;

/// Which end of the interval a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Right => 1.0,
            Side::Left => -1.0,
        }
    }
}

/// Increasing scalar equation `h(s) = 0` on `[lo, hi]` with `h(lo) <= 0 <= h(hi)`,
/// solved by Newton steps kept inside the bracket.
fn solve_bracketed<H: Fn(f64) -> (f64, f64)>(h: H, mut lo: f64, mut hi: f64, start: f64) -> f64 {
    let mut s = start.clamp(lo, hi);
    for _ in 0..200 {
        let (v, d) = h(s);
        if v == 0.0 {
            return s;
        }
        if v < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - v / d;
        let next = if d > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let tol = 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE);
        if (next - s).abs() <= tol || hi - lo <= tol {
            return next;
        }
        s = next;
    }
    s
}

/// `int_{-inf}^{s} g` with accurate complements near both infinities.
pub struct Antiderivative {
    g: DiffusionWeight,
    alpha: f64,
    window: f64,
    panels: Vec<Panel>,
    /// Cumulative integral at the left edge of each panel, from `-window`.
    cumulative: Vec<f64>,
    mid_total: f64,
    left_total: f64,
    right_total: f64,
}

impl std::fmt::Debug for Antiderivative {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("Antiderivative")
            .field("alpha", &self.alpha)
            .field("window", &self.window)
            .field("total", &self.total())
            .finish()
    }
}

impl Antiderivative {
    pub fn new(g: &DiffusionWeight) -> Result<Self, WaveError> {
        let alpha = g.alpha();
        if !(alpha > 1.0) {
            return Err(WaveError::DivergentIntegral { alpha });
        }
        let matches = |s: f64| {
            (g.tail_ratio(s) / g.cg_plus() - 1.0).abs() < TAIL_MATCH
                && (g.tail_ratio(-s) / g.cg_minus() - 1.0).abs() < TAIL_MATCH
        };
        let mut window = 1.0;
        while !(matches(window) && matches(2.0 * window)) {
            window *= 2.0;
            if window > 1e12 {
                return Err(WaveError::TailNotReached(window));
            }
        }
        let gf = |s: f64| g.eval(s);
        let panels = adaptive_panels(&gf, -window, window, MID_ABS_TOL, 0.0);
        let mut cumulative = Vec::with_capacity(panels.len());
        let mut acc = 0.0;
        for p in &panels {
            cumulative.push(acc);
            acc += p.value;
        }
        let mut out = Self {
            g: g.clone(),
            alpha,
            window,
            panels,
            cumulative,
            mid_total: acc,
            left_total: 0.0,
            right_total: 0.0,
        };
        out.left_total = out.tail(Side::Left, window);
        out.right_total = out.tail(Side::Right, window);
        Ok(out)
    }

    /// `G(inf)`.
    pub fn total(&self) -> f64 {
        self.left_total + self.mid_total + self.right_total
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// `g` evaluated at `side * s`.
    fn g_side(&self, side: Side, s: f64) -> f64 {
        self.g.eval(side.sign() * s)
    }

    /// Tail mass beyond `side * s` for `s >= window`.
    fn tail(&self, side: Side, s: f64) -> f64 {
        let a1 = self.alpha - 1.0;
        let cg = match side {
            Side::Right => self.g.cg_plus(),
            Side::Left => self.g.cg_minus(),
        };
        let scale = a1 * s.powf(a1);
        let integrand = |u: f64| {
            let big = s * u.powf(-1.0 / a1);
            let h = big.powf(self.alpha) * self.g_side(side, big);
            if big.is_finite() && h.is_finite() {
                h / scale
            } else {
                cg / scale
            }
        };
        integrate(&integrand, 0.0, 1.0, 0.0, TAIL_REL_TOL)
    }

    fn panel_index(&self, s: f64) -> usize {
        self.panels.partition_point(|p| p.b < s).min(self.panels.len() - 1)
    }

    /// `int_{-window}^{s} g` for `s` in the window.
    fn mid(&self, s: f64) -> f64 {
        let k = self.panel_index(s);
        let p = self.panels[k];
        let gf = |x: f64| self.g.eval(x);
        self.cumulative[k] + if s > p.a { gk15(&gf, p.a, s).0 } else { 0.0 }
    }

    /// `G(s)`.
    pub fn value(&self, s: f64) -> f64 {
        if s <= -self.window {
            self.tail(Side::Left, -s)
        } else if s >= self.window {
            self.total() - self.tail(Side::Right, s)
        } else {
            self.left_total + self.mid(s)
        }
    }

    /// `G(inf) - G(s) = int_s^inf g`, accurate for large `s`.
    pub fn complement(&self, s: f64) -> f64 {
        if s >= self.window {
            self.tail(Side::Right, s)
        } else if s <= -self.window {
            self.total() - self.tail(Side::Left, -s)
        } else {
            self.right_total + (self.mid_total - self.mid(s))
        }
    }

    /// Mass `q` of `g` beyond `side * s` as a function of `s >= window`, inverted.
    fn invert_tail(&self, side: Side, q: f64) -> f64 {
        let a1 = self.alpha - 1.0;
        let cg = match side {
            Side::Right => self.g.cg_plus(),
            Side::Left => self.g.cg_minus(),
        };
        let seed = (cg / (a1 * q)).powf(1.0 / a1).max(self.window);
        let mut hi = seed;
        while self.tail(side, hi) > q {
            hi *= 2.0;
        }
        let mut lo = seed.min(hi);
        while lo > self.window && self.tail(side, lo) < q {
            lo = (0.5 * lo).max(self.window);
        }
        // In t = ln s, ln q - ln tail(e^t) is increasing with slope s g / tail.
        let h = |t: f64| {
            let s = t.exp();
            let m = self.tail(side, s);
            ((q.ln() - m.ln()), self.g_side(side, s) * s / m)
        };
        solve_bracketed(h, lo.ln(), hi.ln(), seed.ln()).exp()
    }

    /// Solves `int_{-window}^s g = target` inside the window.
    fn invert_mid(&self, target: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c <= target).saturating_sub(1);
        let p = self.panels[k];
        let h = |s: f64| (self.mid(s) - target, self.g.eval(s));
        solve_bracketed(h, p.a, p.b, 0.5 * (p.a + p.b))
    }

    /// `G^{-1}(y)` for `y` measured from the left, `0 < y < G(inf)`.
    pub fn inverse_from_left(&self, y: f64) -> f64 {
        if y <= self.left_total {
            -self.invert_tail(Side::Left, y)
        } else if y - self.left_total < self.mid_total {
            self.invert_mid(y - self.left_total)
        } else {
            self.inverse_from_right(self.total() - y)
        }
    }

    /// The `s` with `int_s^inf g = q`, `0 < q < G(inf)`.
    pub fn inverse_from_right(&self, q: f64) -> f64 {
        if q <= self.right_total {
            self.invert_tail(Side::Right, q)
        } else if q - self.right_total < self.mid_total {
            self.invert_mid(self.mid_total - (q - self.right_total))
        } else {
            self.inverse_from_left(self.total() - q)
        }
    }
}

/// One grid node of a wave profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveNode {
    pub x: f64,
    /// Distance to the nearer boundary, stored exactly.
    pub dist: f64,
    pub side: Side,
    pub w: f64,
    pub wx: f64,
    pub residual: f64,
}

/// Fitted `W ~ D psi_gamma(d) + C` near one end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndRate {
    pub gamma: f64,
    pub d: f64,
    pub offset: f64,
    pub spread: f64,
}

#[derive(Clone)]
pub struct WaveProfile {
    pub b: f64,
    pub c: f64,
    /// `f^{-1}(c) = G(inf) / 2b`.
    pub speed_preimage: f64,
    pub g_total: f64,
    pub w0: f64,
    pub nodes: Vec<WaveNode>,
    pub rate_plus: Option<EndRate>,
    pub rate_minus: Option<EndRate>,
    pub verdict: WaveVerdict,
    antiderivative: Arc<Antiderivative>,
    g: DiffusionWeight,
}

impl std::fmt::Debug for WaveProfile {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("WaveProfile")
            .field("b", &self.b)
            .field("c", &self.c)
            .field("g_total", &self.g_total)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

/// `G(s)` for the weight `g`.
pub fn g_antiderivative(g: &DiffusionWeight, s: f64) -> Result<f64, WaveError> {
    Ok(Antiderivative::new(g)?.value(s))
}

impl WaveProfile {
    /// `W_x` at distance `d` from the boundary on `side`.
    pub fn slope_at_distance(&self, side: Side, d: f64) -> f64 {
        let mass = d * self.g_total / (2.0 * self.b);
        match side {
            Side::Left => self.antiderivative.inverse_from_left(mass),
            Side::Right => self.antiderivative.inverse_from_right(mass),
        }
    }

    /// `W_x(x)`.
    pub fn slope(&self, x: f64) -> f64 {
        let (side, d) = split(self.b, x);
        self.slope_at_distance(side, d)
    }

    /// `W_xx(x) = f^{-1}(c) / g(W_x)`.
    pub fn curvature(&self, x: f64) -> f64 {
        self.speed_preimage / self.g.eval(self.slope(x))
    }

    /// `W(x)`, integrated from the nearest stored node.
    pub fn value(&self, x: f64) -> f64 {
        let (side, d) = split(self.b, x);
        let k = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.side == side || n.dist == self.b)
            .min_by(|a, b| (a.1.dist - d).abs().total_cmp(&(b.1.dist - d).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let node = self.nodes[k];
        let f = |dd: f64| self.slope_at_distance(side, dd);
        let inc = integrate(&f, d.min(node.dist), d.max(node.dist), 1e-14, 1e-14);
        let toward = if d < node.dist { 1.0 } else { -1.0 };
        // x = b - d on the right and x = d - b on the left.
        node.w + toward * side.sign() * inc
    }

    /// Maximum relative residual over all nodes.
    pub fn max_residual(&self) -> f64 {
        self.nodes.iter().map(|n| n.residual).fold(0.0, f64::max)
    }

    pub fn antiderivative(&self) -> &Antiderivative {
        &self.antiderivative
    }
}

/// Nearest side and exact distance for a point of `(-b, b)`.
fn split(b: f64, x: f64) -> (Side, f64) {
    if x >= 0.0 {
        (Side::Right, b - x)
    } else {
        (Side::Left, b + x)
    }
}

/// Distances from one end for the half grid: uniform `2b k / n` plus `b 2^-j`.
fn half_grid(b: f64, n_grid: usize) -> Vec<f64> {
    let h = 2.0 * b / n_grid as f64;
    let mut d: Vec<f64> = (1..)
        .map(|k| k as f64 * h)
        .take_while(|&v| v < b * (1.0 - 1e-12))
        .collect();
    d.extend((1..=DEEPEST_LEVEL).map(|j| b * 2f64.powi(-j)));
    d.push(b);
    d.sort_by(|a, c| c.total_cmp(a));
    d.dedup_by(|a, c| (*a - *c).abs() <= 1e-12 * b);
    d
}

/// Relative residual `|f^{-1}(c) - g(W_x) W_xx| / f^{-1}(c)`, with `W_xx`
/// from a centered difference of the closed-form slope.
fn node_residual(profile: &WaveProfile, side: Side, d: f64) -> f64 {
    let h = 1e-5 * d.min(profile.b);
    let up = profile.slope_at_distance(side, d - h);
    let down = profile.slope_at_distance(side, d + h);
    // Along x the right side runs toward smaller d, the left side toward larger d.
    let wxx = match side {
        Side::Right => (up - down) / (2.0 * h),
        Side::Left => (down - up) / (2.0 * h),
    };
    let wx = profile.slope_at_distance(side, d);
    let target = profile.speed_preimage;
    ((target - profile.g.eval(wx) * wxx) / target).abs()
}

/// Traveling wave for `spec` on a grid of `n_grid` uniform cells plus
/// geometric refinement toward both ends.
pub fn compute_wave(spec: &ProblemSpec, n_grid: usize, w0: f64) -> Result<WaveProfile, WaveError> {
    if n_grid < 64 {
        return Err(WaveError::GridTooSmall(n_grid));
    }
    let g = spec.g.clone();
    let anti = Arc::new(Antiderivative::new(&g)?);
    let b = spec.half_width();
    let g_total = anti.total();
    let speed_preimage = g_total / (2.0 * b);
    let mut profile = WaveProfile {
        b,
        c: spec.f.eval(speed_preimage),
        speed_preimage,
        g_total,
        w0,
        nodes: Vec::new(),
        rate_plus: None,
        rate_minus: None,
        verdict: classify_wave_alpha(g.alpha()),
        antiderivative: anti,
        g,
    };
    let dists = half_grid(b, n_grid);
    let mut halves = Vec::new();
    for side in [Side::Right, Side::Left] {
        let mut w = w0;
        let mut prev = b;
        let mut nodes = Vec::with_capacity(dists.len());
        for &d in &dists {
            if d < prev {
                let f = |dd: f64| profile.slope_at_distance(side, dd);
                let inc = integrate(&f, d, prev, 1e-14, 1e-14);
                // W grows toward both ends: +int W_x dx on the right, -int W_x dx on the left.
                w += match side {
                    Side::Right => inc,
                    Side::Left => -inc,
                };
            }
            prev = d;
            nodes.push(WaveNode {
                x: side.sign() * (b - d),
                dist: d,
                side,
                w,
                wx: profile.slope_at_distance(side, d),
                residual: node_residual(&profile, side, d),
            });
        }
        halves.push(nodes);
    }
    let left = halves.pop().unwrap_or_default();
    let right = halves.pop().unwrap_or_default();
    let mut nodes: Vec<WaveNode> = left.into_iter().filter(|n| n.dist < b).rev().collect();
    nodes.extend(right);
    profile.nodes = nodes;
    if profile.verdict == WaveVerdict::ExistsUnbounded {
        if let Ok((p, m)) = divergence_rate(&profile, g_alpha_of(&profile)) {
            profile.rate_plus = Some(p);
            profile.rate_minus = Some(m);
        }
    }
    Ok(profile)
}

fn g_alpha_of(p: &WaveProfile) -> f64 {
    p.g.alpha()
}

/// Least-squares `W = D psi + C` on the given `(d, W)` points with fixed gamma.
fn line_fit(gamma: f64, pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(d, w) in pts {
        let p = psi_unchecked(gamma, d);
        sx += p;
        sy += w;
        sxx += p * p;
        sxy += p * w;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

/// Boundary divergence constants `D_+-` of an unbounded profile over the
/// last decade of grid points at each end. `Ok(None)`-like absence is
/// reported through `RateOutOfRange` for bounded waves.
pub fn divergence_rate(profile: &WaveProfile, g_alpha: f64) -> Result<(EndRate, EndRate), WaveError> {
    if !(g_alpha > 1.0 && g_alpha <= 2.0) {
        return Err(WaveError::RateOutOfRange(g_alpha));
    }
    let gamma = (2.0 - g_alpha) / (g_alpha - 1.0);
    let fit_side = |side: Side| -> Result<EndRate, WaveError> {
        let dmin = profile
            .nodes
            .iter()
            .filter(|n| n.side == side)
            .map(|n| n.dist)
            .fold(f64::INFINITY, f64::min);
        let mut pts: Vec<(f64, f64)> = profile
            .nodes
            .iter()
            .filter(|n| n.side == side && n.dist <= 10.0 * dmin * (1.0 + 1e-12))
            .map(|n| (n.dist, n.w))
            .collect();
        pts.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (d, offset) = line_fit(gamma, &pts);
        let half = pts.len() / 2;
        let (d1, _) = line_fit(gamma, &pts[..half.max(2)]);
        let (d2, _) = line_fit(gamma, &pts[pts.len() - half.max(2)..]);
        let spread = (d1 - d2).abs() / d.abs();
        if !(spread <= 0.1) {
            return Err(WaveError::RateExtraction { spread });
        }
        Ok(EndRate { gamma, d, offset, spread })
    };
    Ok((fit_side(Side::Right)?, fit_side(Side::Left)?))
}

/// Leading constant predicted from the tail of `g`:
/// `W_x ~ K d^{-1/(alpha-1)}` with `K = (f^{-1}(c)(alpha-1)/C)^{-1/(alpha-1)}`,
/// integrated once more to the `psi_gamma` coefficient of `W`.
pub fn predicted_rate_constant(alpha: f64, speed_preimage: f64, cg: f64) -> f64 {
    let k = (speed_preimage * (alpha - 1.0) / cg).powf(-1.0 / (alpha - 1.0));
    if alpha < 2.0 {
        k * (alpha - 1.0) / (2.0 - alpha)
    } else {
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset_curvature, preset_power, InitialDatum};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cauchy_spec() -> ProblemSpec {
        ProblemSpec::new(FRAC_PI_2, preset_curvature(1.0).unwrap(), InitialDatum::zero()).unwrap()
    }

    #[test]
    fn cauchy_antiderivative_matches_arctan() {
        let spec = cauchy_spec();
        let a = Antiderivative::new(&spec.g).unwrap();
        assert!((a.total() - PI).abs() < 1e-12);
        for s in [-1e9, -300.0, -3.0, 0.0, 0.7, 40.0, 1e5] {
            let exact = FRAC_PI_2 + f64::atan(s);
            assert!((a.value(s) - exact).abs() < 1e-12, "G({s})");
        }
        assert!((g_antiderivative(&spec.g, 0.0).unwrap() - FRAC_PI_2).abs() < 1e-12);
        // Complement near +inf: int_s^inf 1/(1+t^2) = atan(1/s).
        for s in [50.0, 1e4, 1e10] {
            assert!((a.complement(s) / (1.0 / s).atan() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn divergent_weight_is_rejected() {
        let (_, g) = preset_power(1.0, 1.0).unwrap();
        assert_eq!(Antiderivative::new(&g).unwrap_err(), WaveError::DivergentIntegral { alpha: 1.0 });
    }

    #[test]
    fn inverse_round_trip() {
        let (_, g) = preset_curvature(0.6).unwrap();
        let a = Antiderivative::new(&g).unwrap();
        for s in [-1e6, -20.0, -1.0, 0.0, 0.3, 5.0, 1e3, 1e7] {
            let back = if s <= 0.0 {
                a.inverse_from_left(a.value(s))
            } else {
                a.inverse_from_right(a.complement(s))
            };
            assert!((back - s).abs() <= 1e-8 * s.abs().max(1.0), "{s} -> {back}");
        }
    }

    #[test]
    fn closed_form_wave() {
        let p = compute_wave(&cauchy_spec(), 256, 0.0).unwrap();
        assert!((p.c - 1.0).abs() < 1e-12);
        for n in &p.nodes {
            let exact = -(n.dist.sin()).ln();
            assert!((n.w - exact).abs() < 1e-9, "x = {}", n.x);
        }
        let mid = p.nodes.iter().find(|n| n.x == 0.0).unwrap();
        assert_eq!(mid.w, 0.0);
        assert!(mid.wx.abs() < 1e-14);
        assert!(p.max_residual() < 1e-6);
        let r = p.rate_plus.unwrap();
        assert!((r.d - 1.0).abs() < 1e-6);
        assert!((p.rate_minus.unwrap().d - r.d).abs() < 1e-6);
        assert!((predicted_rate_constant(2.0, p.speed_preimage, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn translation_shifts_profile() {
        let a = compute_wave(&cauchy_spec(), 64, 0.0).unwrap();
        let b = compute_wave(&cauchy_spec(), 64, 5.0).unwrap();
        for (u, v) in a.nodes.iter().zip(&b.nodes) {
            assert!((v.w - u.w - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn off_grid_value_matches_closed_form() {
        let p = compute_wave(&cauchy_spec(), 64, 0.0).unwrap();
        for x in [-1.5, -0.33, 0.01, 0.9, 1.56] {
            assert!((p.value(x) + f64::cos(x).ln()).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn bounded_wave_has_no_rate() {
        let spec = ProblemSpec::new(1.0, preset_curvature(2.0).unwrap(), InitialDatum::zero()).unwrap();
        let p = compute_wave(&spec, 128, 0.0).unwrap();
        assert_eq!(p.verdict, WaveVerdict::ExistsBounded);
        assert!(p.rate_plus.is_none());
        assert!(divergence_rate(&p, 2.5).is_err());
        assert!(p.nodes.iter().all(|n| n.w.is_finite()));
    }

    #[test]
    fn small_grid_is_rejected() {
        assert_eq!(compute_wave(&cauchy_spec(), 32, 0.0).unwrap_err(), WaveError::GridTooSmall(32));
    }
}
