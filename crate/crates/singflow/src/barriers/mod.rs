//! Explicit sub- and super-solution families and their pointwise
//! certification.

mod envelope;
mod h_tail;
mod ode;
mod sub_uk;
mod sub_vl;
mod super_family;
mod translate;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DiffusionWeight, Nonlinearity, ProblemSpec};
use crate::numerics::log_space;

pub use envelope::convex_envelope;
pub use h_tail::{h_tail, TailParams};
pub use ode::DenseTrajectory;
pub use sub_uk::{sub_uk, uk_root};
pub use sub_vl::{sub_vl, vl_speed_exponent};
pub use super_family::{super_family, super_l0_threshold, super_mu, SmoothProfile};
pub use translate::translate_wave;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("horizon error: t = {t} is past the validity time {valid_until}")]
    Horizon { t: f64, valid_until: f64 },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
}

/// Value and analytic partial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub value: f64,
    pub dx: f64,
    pub dxx: f64,
    pub dt: f64,
}

impl Jet {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.dx.is_finite() && self.dxx.is_finite() && self.dt.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KinkKind {
    /// Left slope below right slope; harmless for sub-solutions.
    Convex,
    /// Left slope above right slope; harmless for super-solutions.
    Concave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    pub x: f64,
    pub kind: KinkKind,
    pub left_slope: f64,
    pub right_slope: f64,
}

impl Kink {
    /// Slopes actually have the orientation the kind claims.
    pub fn oriented(&self) -> bool {
        match self.kind {
            KinkKind::Convex => self.left_slope < self.right_slope,
            KinkKind::Concave => self.left_slope > self.right_slope,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    HTail,
    SuperL,
    SubsolutionUk,
    BlowupVl,
    ConvexEnvelope,
    TranslateWave,
}

/// Closed-form space-time function with analytic partials.
pub trait BarrierShape: Send + Sync {
    fn jet(&self, x: f64, t: f64) -> Jet;
    fn kinks(&self, t: f64) -> Vec<Kink>;
    /// Length and time scales over which the function is smooth around `(x, t)`.
    fn smooth_scale(&self, x: f64, t: f64) -> (f64, f64);
    /// Sampling window in time when the function is valid for all times.
    fn sample_horizon(&self) -> f64 {
        1.0
    }
    /// Internal level parameter and its rate, for families driven by an ODE.
    fn level(&self, _t: f64) -> Option<(f64, f64)> {
        None
    }
}

#[derive(Clone)]
pub struct BarrierFunction {
    family: Family,
    b: f64,
    closed_domain: bool,
    valid_until: f64,
    shape: Arc<dyn BarrierShape>,
    constants: BTreeMap<String, f64>,
}

impl fmt::Debug for BarrierFunction {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("BarrierFunction")
            .field("family", &self.family)
            .field("b", &self.b)
            .field("valid_until", &self.valid_until)
            .field("constants", &self.constants)
            .finish()
    }
}

impl BarrierFunction {
    pub(crate) fn new(family: Family, b: f64, shape: Arc<dyn BarrierShape>) -> Self {
        Self { family, b, closed_domain: false, valid_until: f64::INFINITY, shape, constants: BTreeMap::new() }
    }

    pub(crate) fn closed(mut self) -> Self {
        self.closed_domain = true;
        self
    }

    pub(crate) fn until(mut self, t: f64) -> Self {
        self.valid_until = t;
        self
    }

    pub(crate) fn constant(mut self, name: &str, v: f64) -> Self {
        self.constants.insert(name.to_string(), v);
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn half_width(&self) -> f64 {
        self.b
    }

    /// Whether `x = +-b` belong to the domain.
    pub fn closed_domain(&self) -> bool {
        self.closed_domain
    }

    pub fn valid_until(&self) -> f64 {
        self.valid_until
    }

    /// Estimated constants used in the construction.
    pub fn constants(&self) -> &BTreeMap<String, f64> {
        &self.constants
    }

    fn check_time(&self, t: f64) -> Result<(), BarrierError> {
        if t >= self.valid_until || t < 0.0 {
            Err(BarrierError::Horizon { t, valid_until: self.valid_until })
        } else {
            Ok(())
        }
    }

    pub fn jet(&self, x: f64, t: f64) -> Result<Jet, BarrierError> {
        self.check_time(t)?;
        Ok(self.shape.jet(x, t))
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64, BarrierError> {
        Ok(self.jet(x, t)?.value)
    }

    pub fn kinks(&self, t: f64) -> Result<Vec<Kink>, BarrierError> {
        self.check_time(t)?;
        Ok(self.shape.kinks(t))
    }

    pub fn smooth_scale(&self, x: f64, t: f64) -> (f64, f64) {
        self.shape.smooth_scale(x, t)
    }

    /// `(L(t), L'(t))` for families driven by a level ODE.
    pub fn level(&self, t: f64) -> Result<Option<(f64, f64)>, BarrierError> {
        self.check_time(t)?;
        Ok(self.shape.level(t))
    }

    /// Time window used for sampling.
    pub fn sampling_window(&self) -> f64 {
        if self.valid_until.is_finite() {
            self.valid_until
        } else {
            self.shape.sample_horizon()
        }
    }
}

/// Which differential inequality is being certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "side", content = "delta")]
pub enum InequalitySide {
    /// `v_t <= f(g v_x v_xx)`.
    Sub,
    /// `v_t >= f(g v_x v_xx)`.
    Super,
    /// `v_t <= f(g v_x v_xx / (1+delta))`.
    SubStrict(f64),
    /// `v_t >= max{f((1+delta) g v_x v_xx), 0}`.
    SuperStrict(f64),
}

impl InequalitySide {
    pub fn factor(self) -> f64 {
        match self {
            Self::Sub | Self::Super => 1.0,
            Self::SubStrict(d) => 1.0 / (1.0 + d),
            Self::SuperStrict(d) => 1.0 + d,
        }
    }

    pub fn is_sub(self) -> bool {
        matches!(self, Self::Sub | Self::SubStrict(_))
    }

    /// Kink orientation that needs no test-function argument for this side.
    pub fn admissible_kink(self) -> KinkKind {
        if self.is_sub() {
            KinkKind::Convex
        } else {
            KinkKind::Concave
        }
    }
}

/// Relative slack used for the sign test.
pub const SIGN_SLACK: f64 = 1e-9;
/// Samples closer than this to a kink are pushed out to it.
pub const KINK_EXCLUSION: f64 = 1e-8;
/// Base seed of the stratified sampler.
pub const SAMPLE_SEED: u64 = 0x5eed_ba77;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkCheck {
    pub t: f64,
    pub kink: Kink,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub family: Family,
    pub side: InequalitySide,
    pub samples_requested: usize,
    pub evaluated: usize,
    /// Points whose jet overflowed double precision.
    pub unrepresentable: usize,
    pub violations: usize,
    /// Signed residual at the worst point (positive is bad for sub, negative for super).
    pub worst_residual: f64,
    /// Worst residual divided by `max(1, |v_t|, |f(...)|)`.
    pub worst_normalized: f64,
    pub worst_point: (f64, f64),
    pub kink_checks: Vec<KinkCheck>,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
}

struct PointOutcome {
    x: f64,
    t: f64,
    residual: f64,
    normalized: f64,
    violated: bool,
    finite: bool,
}

fn evaluate_point(bf: &BarrierFunction, spec: &ProblemSpec, side: InequalitySide, x: f64, t: f64) -> PointOutcome {
    let jet = bf.shape.jet(x, t);
    if !jet.is_finite() {
        return PointOutcome { x, t, residual: 0.0, normalized: 0.0, violated: false, finite: false };
    }
    let fz = spec.f.eval(side.factor() * spec.g.eval(jet.dx) * jet.dxx);
    if !fz.is_finite() {
        return PointOutcome { x, t, residual: 0.0, normalized: 0.0, violated: false, finite: false };
    }
    let r = jet.dt - fz;
    let scale = 1f64.max(jet.dt.abs()).max(fz.abs());
    let mut normalized = r / scale;
    let mut violated = if side.is_sub() { normalized > SIGN_SLACK } else { normalized < -SIGN_SLACK };
    if let InequalitySide::SuperStrict(_) = side {
        let n_dt = jet.dt / 1f64.max(jet.dt.abs());
        if n_dt < -SIGN_SLACK {
            violated = true;
            normalized = normalized.min(n_dt);
        }
    }
    PointOutcome { x, t, residual: r, normalized, violated, finite: true }
}

/// Certifies `bf` against the inequality `side` at stratified samples in
/// `(x, t)`, plus orientation checks at every kink of every sampled time.
pub fn verify_inequality(
    bf: &BarrierFunction,
    spec: &ProblemSpec,
    side: InequalitySide,
    samples: usize,
) -> Result<VerificationReport, BarrierError> {
    if samples < 1000 {
        return Err(BarrierError::TooFewSamples { min: 1000, got: samples });
    }
    let b = bf.b;
    let window = bf.sampling_window();
    let nt = ((samples as f64 / 4.0).sqrt().ceil() as usize).max(1);
    let nx = samples.div_ceil(nt);
    let times: Vec<f64> = (0..nt)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED ^ (j as u64).wrapping_mul(0x9e37_79b9));
            window * (j as f64 + rng.gen::<f64>()) / nt as f64
        })
        .collect();
    let kink_sets: Vec<Vec<Kink>> = times.iter().map(|&t| bf.shape.kinks(t)).collect();
    let outcomes: Vec<PointOutcome> = (0..nt * nx)
        .into_par_iter()
        .map(|idx| {
            let (j, i) = (idx / nx, idx % nx);
            let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED.wrapping_add(idx as u64 + 1));
            let t = times[j];
            let u: f64 = rng.gen();
            let mut x = if bf.closed_domain {
                -b + 2.0 * b * (i as f64 + u) / nx as f64
            } else {
                -b + 2.0 * b * ((i as f64 + u) / nx as f64).clamp(1e-12, 1.0 - 1e-12)
            };
            if bf.closed_domain && i == nx - 1 && j % 2 == 0 {
                x = if j % 4 == 0 { b } else { -b };
            }
            for k in &kink_sets[j] {
                if (x - k.x).abs() < KINK_EXCLUSION {
                    x = k.x + if x >= k.x { KINK_EXCLUSION } else { -KINK_EXCLUSION };
                }
            }
            evaluate_point(bf, spec, side, x, t)
        })
        .collect();
    let want = side.admissible_kink();
    let mut kink_checks = Vec::new();
    for (t, ks) in times.iter().zip(&kink_sets) {
        for k in ks {
            kink_checks.push(KinkCheck { t: *t, kink: *k, pass: k.kind == want && k.oriented() });
        }
    }
    let mut rep = VerificationReport {
        family: bf.family,
        side,
        samples_requested: samples,
        evaluated: 0,
        unrepresentable: 0,
        violations: 0,
        worst_residual: 0.0,
        worst_normalized: if side.is_sub() { f64::NEG_INFINITY } else { f64::INFINITY },
        worst_point: (f64::NAN, f64::NAN),
        kink_checks,
        constants: bf.constants.clone(),
        pass: false,
    };
    for o in outcomes {
        if !o.finite {
            rep.unrepresentable += 1;
            continue;
        }
        rep.evaluated += 1;
        rep.violations += o.violated as usize;
        let worse = if side.is_sub() { o.normalized > rep.worst_normalized } else { o.normalized < rep.worst_normalized };
        if worse {
            rep.worst_normalized = o.normalized;
            rep.worst_residual = o.residual;
            rep.worst_point = (o.x, o.t);
        }
    }
    rep.pass = rep.evaluated > 0 && rep.violations == 0 && rep.kink_checks.iter().all(|k| k.pass);
    Ok(rep)
}

/// Largest relative disagreement between analytic partials and centered
/// differences over random smooth points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeAgreement {
    pub points: usize,
    pub max_error_dx: f64,
    pub max_error_dxx: f64,
    pub max_error_dt: f64,
}

impl DerivativeAgreement {
    pub fn worst(&self) -> f64 {
        self.max_error_dx.max(self.max_error_dxx).max(self.max_error_dt)
    }
}

/// Compares analytic partials with centered differences at step `1e-5`
/// times the local smoothness scale. `dxx` is differenced from the analytic
/// `dx`, which keeps the check above double-precision roundoff.
pub fn derivative_agreement(bf: &BarrierFunction, points: usize, seed: u64) -> DerivativeAgreement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = bf.b;
    let window = bf.sampling_window();
    let mut out = DerivativeAgreement { points: 0, max_error_dx: 0.0, max_error_dxx: 0.0, max_error_dt: 0.0 };
    let mut attempts = 0;
    while out.points < points && attempts < 50 * points {
        attempts += 1;
        let x = -b + 2.0 * b * rng.gen::<f64>();
        let t = window * rng.gen::<f64>();
        let (sx, st) = bf.shape.smooth_scale(x, t);
        if !(sx > 1e-6 * b) || !(st > 0.0) || t + 1e-5 * st.min(1.0) >= bf.valid_until {
            continue;
        }
        let jet = bf.shape.jet(x, t);
        if !jet.is_finite() || jet.value.abs() > 1e100 {
            continue;
        }
        let hx = 1e-5 * sx;
        let ht = 1e-5 * st.min(window);
        let v = |x: f64, t: f64| bf.shape.jet(x, t).value;
        let (left, right) = (bf.shape.jet(x - hx, t), bf.shape.jet(x + hx, t));
        let fd_dx = (right.value - left.value) / (2.0 * hx);
        let fd_dxx = (right.dx - left.dx) / (2.0 * hx);
        let fd_dt = (v(x, t + ht) - v(x, t - ht)) / (2.0 * ht);
        let mag = jet.value.abs() + 1.0;
        let slope_mag = jet.dx.abs() + mag / sx;
        let err = |fd: f64, an: f64, floor: f64| (fd - an).abs() / an.abs().max(floor);
        out.max_error_dx = out.max_error_dx.max(err(fd_dx, jet.dx, 1e-3 * mag / sx));
        out.max_error_dxx = out.max_error_dxx.max(err(fd_dxx, jet.dxx, 1e-3 * slope_mag / sx));
        out.max_error_dt = out.max_error_dt.max(err(fd_dt, jet.dt, 1e-3 * mag / st.min(window)));
        out.points += 1;
    }
    out
}

/// Sampling range for tail constants.
pub(crate) const TAIL_SAMPLE_MAX: f64 = 1e10;

fn tail_samples(from: f64) -> Vec<f64> {
    log_space(from.max(1e-300), TAIL_SAMPLE_MAX.max(from * 10.0), 400)
}

/// `1/2 * inf |s|^alpha g(s)` over `|s| >= from` (both signs), sampled.
pub(crate) fn weight_lower_constant(g: &DiffusionWeight, alpha: f64, from: f64) -> f64 {
    let inf = tail_samples(from)
        .into_iter()
        .flat_map(|s| [s, -s])
        .map(|s| s.abs().powf(alpha) * g.eval(s))
        .fold(f64::INFINITY, f64::min);
    0.5 * inf
}

/// `1/2 * inf f(s) / s^beta` over `s >= from`, sampled.
pub(crate) fn growth_lower_constant(f: &Nonlinearity, beta: f64, from: f64) -> f64 {
    let inf = tail_samples(from)
        .into_iter()
        .map(|s| f.eval(s) / s.powf(beta))
        .fold(f64::INFINITY, f64::min);
    0.5 * inf
}
