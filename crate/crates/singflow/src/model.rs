//! Nonlinearities, diffusion weights, initial data and the problem bundle.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{invert_increasing, log_space};

/// Shared scalar map `R -> R`.
pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

/// Boundary profile `s^-gamma` (gamma > 0) or `-ln s` (gamma = 0).
pub fn psi(gamma: f64, s: f64) -> Result<f64, ModelError> {
    if !(s > 0.0) {
        return Err(ModelError::Domain(format!("psi needs s > 0, got {s}")));
    }
    if !(gamma >= 0.0) {
        return Err(ModelError::Domain(format!("psi needs gamma >= 0, got {gamma}")));
    }
    Ok(psi_unchecked(gamma, s))
}

pub(crate) fn psi_unchecked(gamma: f64, s: f64) -> f64 {
    if gamma > 0.0 {
        s.powf(-gamma)
    } else {
        -s.ln()
    }
}

/// `|s|^(e-1) s`, odd and increasing for `e > 0`.
pub fn signed_power(s: f64, e: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(e)
    }
}

/// Power-law growth at infinity: `|s|^-exponent * h(s) -> plus` as `s -> +inf`
/// and `-> minus` (in absolute value) as `s -> -inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailGrowth {
    pub exponent: f64,
    pub plus: f64,
    pub minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NonlinearityKind {
    SignedPower { beta: f64 },
    Custom,
}

/// Outer function `f`: strictly increasing, `f(0) = 0`, with its inverse.
#[derive(Clone)]
pub struct Nonlinearity {
    eval: ScalarMap,
    inverse: ScalarMap,
    growth: Option<TailGrowth>,
    kind: NonlinearityKind,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("Nonlinearity")
            .field("kind", &self.kind)
            .field("growth", &self.growth)
            .finish()
    }
}

const TAIL_PROBE: f64 = 1e8;
const TAIL_TOL: f64 = 0.05;

fn monotone_samples() -> Vec<f64> {
    let pos = log_space(1e-6, 1e6, 61);
    let mut all: Vec<f64> = pos.iter().rev().map(|s| -s).collect();
    all.push(0.0);
    all.extend(pos);
    all
}

impl Nonlinearity {
    /// `f(s) = |s|^(beta-1) s` with closed-form inverse.
    pub fn signed_power(beta: f64) -> Result<Self, ModelError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(ModelError::Parameter(format!("growth exponent must be positive, got {beta}")));
        }
        Ok(Self {
            eval: Arc::new(move |s| signed_power(s, beta)),
            inverse: Arc::new(move |s| signed_power(s, 1.0 / beta)),
            growth: Some(TailGrowth { exponent: beta, plus: 1.0, minus: 1.0 }),
            kind: NonlinearityKind::SignedPower { beta },
        })
    }

    /// User-supplied increasing `f`. The inverse is found by bracketed
    /// bisection; declared growth is checked by sampling at `+-1e8`.
    pub fn custom(eval: ScalarMap, growth: Option<TailGrowth>) -> Result<Self, ModelError> {
        let fwd = eval.clone();
        let inverse: ScalarMap = Arc::new(move |y: f64| {
            if y == 0.0 {
                return 0.0;
            }
            invert_increasing(|s| fwd(s), y, 0.0).unwrap_or(f64::NAN)
        });
        let out = Self { eval, inverse, growth, kind: NonlinearityKind::Custom };
        out.validate()?;
        Ok(out)
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        (self.inverse)(y)
    }

    pub fn growth(&self) -> Option<TailGrowth> {
        self.growth
    }

    pub fn beta(&self) -> Option<f64> {
        self.growth.map(|g| g.exponent)
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    /// Sampled checks: `f(0) = 0`, strict monotonicity, inverse round trip,
    /// declared growth constants.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.eval(0.0) != 0.0 {
            return Err(ModelError::Validation("f(0) must be 0".into()));
        }
        let samples = monotone_samples();
        for w in samples.windows(2) {
            if !(self.eval(w[1]) > self.eval(w[0])) {
                return Err(ModelError::Validation(format!(
                    "f is not strictly increasing between {} and {}",
                    w[0], w[1]
                )));
            }
        }
        for &s in &samples {
            let back = self.inverse(self.eval(s));
            if (back - s).abs() > 1e-10 * s.abs().max(1e-300) {
                return Err(ModelError::Validation(format!("inverse round trip failed at {s}")));
            }
        }
        if let Some(g) = self.growth {
            if !(g.exponent > 0.0 && g.plus > 0.0 && g.minus > 0.0) {
                return Err(ModelError::Validation("growth data must be positive".into()));
            }
            let rp = self.eval(TAIL_PROBE) * TAIL_PROBE.powf(-g.exponent);
            let rm = -self.eval(-TAIL_PROBE) * TAIL_PROBE.powf(-g.exponent);
            if (rp / g.plus - 1.0).abs() > TAIL_TOL || (rm / g.minus - 1.0).abs() > TAIL_TOL {
                return Err(ModelError::Validation(format!(
                    "declared growth ({}, {}) not matched by samples ({rp}, {rm})",
                    g.plus, g.minus
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightKind {
    PLaplace { p: f64, eps: f64 },
    Curvature { beta2: f64 },
    PowerTail { alpha: f64 },
    Custom,
}

/// Inner diffusion weight `g > 0` with `|s|^alpha g(s) -> cg_+-` at `+-inf`.
#[derive(Clone)]
pub struct DiffusionWeight {
    eval: ScalarMap,
    alpha: f64,
    cg_plus: f64,
    cg_minus: f64,
    kind: WeightKind,
}

impl fmt::Debug for DiffusionWeight {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("DiffusionWeight")
            .field("kind", &self.kind)
            .field("alpha", &self.alpha)
            .field("cg_plus", &self.cg_plus)
            .field("cg_minus", &self.cg_minus)
            .finish()
    }
}

impl DiffusionWeight {
    /// `g(s) = (1 + s^2)^(-alpha/2)`: unit tail constants, any real `alpha`.
    pub fn power_tail(alpha: f64) -> Result<Self, ModelError> {
        if !alpha.is_finite() {
            return Err(ModelError::Parameter("alpha must be finite".into()));
        }
        Ok(Self {
            eval: Arc::new(move |s| (1.0 + s * s).powf(-0.5 * alpha)),
            alpha,
            cg_plus: 1.0,
            cg_minus: 1.0,
            kind: WeightKind::PowerTail { alpha },
        })
    }

    /// User-supplied weight; positivity and declared tails are sampled.
    pub fn custom(eval: ScalarMap, alpha: f64, cg_plus: f64, cg_minus: f64) -> Result<Self, ModelError> {
        let out = Self { eval, alpha, cg_plus, cg_minus, kind: WeightKind::Custom };
        out.validate()?;
        Ok(out)
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cg_plus(&self) -> f64 {
        self.cg_plus
    }

    pub fn cg_minus(&self) -> f64 {
        self.cg_minus
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// `|s|^alpha g(s)` at signed `s`.
    pub fn tail_ratio(&self, s: f64) -> f64 {
        s.abs().powf(self.alpha) * self.eval(s)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.cg_plus > 0.0 && self.cg_minus > 0.0) {
            return Err(ModelError::Validation("tail constants must be positive".into()));
        }
        for s in monotone_samples() {
            let v = self.eval(s);
            if !(v > 0.0) || !v.is_finite() {
                return Err(ModelError::Validation(format!("g({s}) = {v} is not positive")));
            }
        }
        let rp = self.tail_ratio(TAIL_PROBE);
        let rm = self.tail_ratio(-TAIL_PROBE);
        if (rp / self.cg_plus - 1.0).abs() > TAIL_TOL || (rm / self.cg_minus - 1.0).abs() > TAIL_TOL {
            return Err(ModelError::Validation(format!(
                "declared tail ({}, {}) not matched by samples ({rp}, {rm})",
                self.cg_plus, self.cg_minus
            )));
        }
        Ok(())
    }
}

/// Degenerate p-Laplacian family with an `eps` Laplacian regularization.
pub fn preset_p_heat(p: f64, beta1: f64, eps: f64) -> Result<(Nonlinearity, DiffusionWeight), ModelError> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(ModelError::Parameter(format!("p must be >= 2, got {p}")));
    }
    if !(eps > 0.0) {
        return Err(ModelError::Parameter(format!("eps must be positive, got {eps}")));
    }
    let f = Nonlinearity::signed_power(beta1)?;
    let cg = if p > 2.0 { p - 1.0 } else { 1.0 + eps };
    let g = DiffusionWeight {
        eval: Arc::new(move |s| (p - 1.0) * s.abs().powf(p - 2.0) + eps),
        alpha: 2.0 - p,
        cg_plus: cg,
        cg_minus: cg,
        kind: WeightKind::PLaplace { p, eps },
    };
    Ok((f, g))
}

/// Power-of-curvature flow of graphs.
pub fn preset_curvature(beta2: f64) -> Result<(Nonlinearity, DiffusionWeight), ModelError> {
    if !(beta2 > 0.0) || !beta2.is_finite() {
        return Err(ModelError::Parameter(format!("beta2 must be positive, got {beta2}")));
    }
    let f = Nonlinearity::signed_power(beta2)?;
    let e = (1.0 - 3.0 * beta2) / (2.0 * beta2);
    let g = DiffusionWeight {
        eval: Arc::new(move |s| (1.0 + s * s).powf(e)),
        alpha: 3.0 - 1.0 / beta2,
        cg_plus: 1.0,
        cg_minus: 1.0,
        kind: WeightKind::Curvature { beta2 },
    };
    Ok((f, g))
}

/// Signed power `f` with exponent `beta` and `g = (1+s^2)^(-alpha/2)`.
pub fn preset_power(alpha: f64, beta: f64) -> Result<(Nonlinearity, DiffusionWeight), ModelError> {
    Ok((Nonlinearity::signed_power(beta)?, DiffusionWeight::power_tail(alpha)?))
}

/// Rate data for initial data that diverge like `D psi_gamma` at each end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRate {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    pub offset_plus: f64,
    pub offset_minus: f64,
}

/// Growth class of the initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum DatumClass {
    /// Finite up to the boundary.
    #[serde(rename = "B1")]
    Bounded,
    /// Diverges at both ends no faster than `(b -+ x)^-gamma`.
    #[serde(rename = "B2")]
    Unbounded { gamma: f64 },
    /// Diverges with a prescribed leading profile and offset.
    #[serde(rename = "B3")]
    RateControlled(BoundaryRate),
}

#[derive(Clone)]
pub struct InitialDatum {
    class: DatumClass,
    values: ScalarMap,
}

impl fmt::Debug for InitialDatum {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("InitialDatum").field("class", &self.class).finish()
    }
}

/// Geometric approach offsets `2^-j`, `j = 10..=40`.
fn approach_offsets() -> impl Iterator<Item = f64> {
    (10..=40).map(|j| 2f64.powi(-j))
}

fn settles(q: &[f64], tol: f64) -> bool {
    let tail = &q[q.len() - 5..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    lo.is_finite() && hi.is_finite() && (hi - lo) <= tol * hi.abs().max(lo.abs()).max(1e-300)
}

impl InitialDatum {
    pub fn new(class: DatumClass, values: ScalarMap) -> Self {
        Self { class, values }
    }

    /// The zero datum, bounded.
    pub fn zero() -> Self {
        Self::new(DatumClass::Bounded, Arc::new(|_| 0.0))
    }

    pub fn class(&self) -> DatumClass {
        self.class
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.values)(x)
    }

    pub fn values(&self) -> ScalarMap {
        self.values.clone()
    }

    /// Sampled certificate of the declared class on `(-b, b)`.
    pub fn validate(&self, b: f64) -> Result<(), ModelError> {
        match self.class {
            DatumClass::Bounded => {
                for x in [b - 1e-9, -(b - 1e-9)] {
                    if !self.eval(x).is_finite() {
                        return Err(ModelError::Validation(format!("bounded datum not finite at {x}")));
                    }
                }
            }
            DatumClass::Unbounded { gamma } => {
                if !(gamma > 0.0) {
                    return Err(ModelError::Validation("gamma must be positive".into()));
                }
                for side in [1.0, -1.0] {
                    let raw: Vec<f64> = approach_offsets().map(|d| self.eval(side * (b - d))).collect();
                    let scaled: Vec<f64> = approach_offsets()
                        .zip(&raw)
                        .map(|(d, v)| v * d.powf(gamma))
                        .collect();
                    let grows = raw.windows(2).all(|w| w[1] >= w[0]) && raw[raw.len() - 1] > raw[0];
                    if !grows || !settles(&scaled, 0.02) {
                        return Err(ModelError::Validation(format!(
                            "datum does not diverge at rate gamma = {gamma} at side {side}"
                        )));
                    }
                }
            }
            DatumClass::RateControlled(r) => {
                if !(r.gamma_plus >= 0.0 && r.gamma_minus >= 0.0 && r.d_plus > 0.0 && r.d_minus > 0.0) {
                    return Err(ModelError::Validation("rate data out of range".into()));
                }
                let sides = [(1.0, r.gamma_plus, r.d_plus, r.offset_plus), (-1.0, r.gamma_minus, r.d_minus, r.offset_minus)];
                for (side, gamma, d_lead, offset) in sides {
                    let q: Vec<f64> = approach_offsets()
                        .map(|d| self.eval(side * (b - d)) - d_lead * psi_unchecked(gamma, d))
                        .collect();
                    let near = q[q.len() - 5..]
                        .iter()
                        .all(|v| (v - offset).abs() <= 0.02 * offset.abs().max(1.0));
                    if !near {
                        return Err(ModelError::Validation(format!(
                            "datum minus leading profile does not approach {offset} at side {side}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether the datum is bounded below on sampled interior points.
    pub fn bounded_below(&self, b: f64) -> bool {
        let mut xs: Vec<f64> = (1..400).map(|i| -b + 2.0 * b * i as f64 / 400.0).collect();
        for d in approach_offsets() {
            xs.push(b - d);
            xs.push(-(b - d));
        }
        xs.iter().map(|&x| self.eval(x)).all(|v| v > -1e12)
    }
}

/// Domain half-width `b > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HalfWidth(f64);

impl HalfWidth {
    pub fn new(b: f64) -> Result<Self, ModelError> {
        if b > 0.0 && b.is_finite() {
            Ok(Self(b))
        } else {
            Err(ModelError::Parameter(format!("half-width must be positive, got {b}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for HalfWidth {
    type Error = ModelError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<HalfWidth> for f64 {
    fn from(v: HalfWidth) -> f64 {
        v.0
    }
}

/// The flow `u_t = f(g(u_x) u_xx)` on `(-b, b)` with infinite boundary values.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub b: HalfWidth,
    pub f: Nonlinearity,
    pub g: DiffusionWeight,
    pub u0: InitialDatum,
}

impl ProblemSpec {
    pub fn new(b: f64, pair: (Nonlinearity, DiffusionWeight), u0: InitialDatum) -> Result<Self, ModelError> {
        let b = HalfWidth::new(b)?;
        Ok(Self { b, f: pair.0, g: pair.1, u0 })
    }

    pub fn half_width(&self) -> f64 {
        self.b.get()
    }

    pub fn alpha(&self) -> f64 {
        self.g.alpha()
    }

    pub fn beta(&self) -> Option<f64> {
        self.f.beta()
    }

    /// Same equation and domain, different initial datum.
    pub fn with_datum(&self, u0: InitialDatum) -> Self {
        Self { u0, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.f.validate()?;
        self.g.validate()?;
        self.u0.validate(self.half_width())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_values() {
        assert_eq!(psi(1.0, 0.5).unwrap(), 2.0);
        assert_eq!(psi(0.0, 1.0).unwrap(), 0.0);
        assert!((psi(0.0, (-1f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert!(psi(1.0, 0.0).is_err());
        assert!(psi(-1.0, 1.0).is_err());
    }

    #[test]
    fn p_heat_examples() {
        let (f, g) = preset_p_heat(2.0, 1.0, 0.5).unwrap();
        assert_eq!(f.eval(3.7), 3.7);
        assert_eq!(g.eval(123.0), 1.5);
        assert_eq!(g.alpha(), 0.0);
        assert_eq!(g.cg_plus(), 1.5);
        let (_, g) = preset_p_heat(3.0, 1.0, 1.0).unwrap();
        assert_eq!(g.eval(-2.0), 5.0);
        assert_eq!(g.alpha(), -1.0);
        let (_, g) = preset_p_heat(4.0, 0.25, 0.1).unwrap();
        assert!((g.eval(1e8) * 1e8f64.powi(-2) / 3.0 - 1.0).abs() < 0.01);
        assert!(preset_p_heat(1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn curvature_examples() {
        let (f, g) = preset_curvature(1.0).unwrap();
        assert_eq!(f.eval(-2.5), -2.5);
        assert!((g.eval(2.0) - 0.2).abs() < 1e-15);
        assert_eq!(g.alpha(), 2.0);
        let (_, g) = preset_curvature(1.0 / 3.0).unwrap();
        assert!((g.eval(17.0) - 1.0).abs() < 1e-12);
        assert!(g.alpha().abs() < 1e-12);
        let (_, g) = preset_curvature(2.0).unwrap();
        assert_eq!(g.alpha(), 2.5);
        assert!(preset_curvature(0.0).is_err());
        assert!(preset_curvature(-1.0).is_err());
    }

    #[test]
    fn presets_validate() {
        for (f, g) in [
            preset_p_heat(2.0, 1.0, 0.1).unwrap(),
            preset_p_heat(3.0, 0.3, 1.0).unwrap(),
            preset_curvature(0.6).unwrap(),
            preset_curvature(2.0).unwrap(),
            preset_power(0.0, 0.5).unwrap(),
        ] {
            f.validate().unwrap();
            g.validate().unwrap();
        }
    }

    #[test]
    fn custom_nonlinearity_inverse_by_bisection() {
        let f = Nonlinearity::custom(
            Arc::new(|s: f64| s + s * s * s),
            Some(TailGrowth { exponent: 3.0, plus: 1.0, minus: 1.0 }),
        )
        .unwrap();
        assert!((f.inverse(10.0) - 2.0).abs() < 1e-12);
        assert!(Nonlinearity::custom(Arc::new(|s: f64| s * s), None).is_err());
    }

    #[test]
    fn custom_weight_rejects_wrong_tail() {
        let g = Arc::new(|s: f64| 1.0 / (1.0 + s * s));
        assert!(DiffusionWeight::custom(g.clone(), 2.0, 1.0, 1.0).is_ok());
        assert!(DiffusionWeight::custom(g, 2.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn datum_classes_certify() {
        let b = 1.0;
        let bounded = InitialDatum::new(DatumClass::Bounded, Arc::new(|x: f64| x * x));
        bounded.validate(b).unwrap();
        let blow = InitialDatum::new(
            DatumClass::Unbounded { gamma: 1.0 },
            Arc::new(move |x: f64| 1.0 / (b - x * x)),
        );
        blow.validate(b).unwrap();
        let rate = BoundaryRate {
            gamma_plus: 0.0,
            gamma_minus: 0.0,
            d_plus: 1.0,
            d_minus: 1.0,
            offset_plus: 0.0,
            offset_minus: 0.0,
        };
        let logd = InitialDatum::new(
            DatumClass::RateControlled(rate),
            Arc::new(move |x: f64| -(b - x.abs()).ln()),
        );
        logd.validate(b).unwrap();
        let wrong = InitialDatum::new(DatumClass::RateControlled(BoundaryRate { d_plus: 2.0, ..rate }), logd.values());
        assert!(wrong.validate(b).is_err());
    }

    #[test]
    fn half_width_rejects_nonpositive() {
        assert!(HalfWidth::new(0.0).is_err());
        assert!(HalfWidth::new(f64::NAN).is_err());
        assert_eq!(HalfWidth::new(2.0).unwrap().get(), 2.0);
    }
}
