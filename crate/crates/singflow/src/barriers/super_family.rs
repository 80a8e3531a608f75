use std::fmt;
use std::sync::Arc;

use super::{BarrierError, BarrierFunction, BarrierShape, DenseTrajectory, Family, Jet, Kink, KinkKind};
use crate::model::{ProblemSpec, ScalarMap};
use crate::numerics::{bisect_increasing, log_space};

const LN_THREE_HALVES: f64 = 0.405_465_108_108_164_4;

/// `mu = max{0, (beta(2-alpha) - 1) / (1 - beta(1-alpha))}`.
pub fn super_mu(alpha: f64, beta: f64) -> f64 {
    ((beta * (2.0 - alpha) - 1.0) / (1.0 - beta * (1.0 - alpha))).max(0.0)
}

/// Lower bound on `L0` that keeps `L (1 - beta(1-alpha)) - beta(2-alpha)`
/// positive, which is what makes the boundary tail estimate uniform in `d`.
pub fn super_l0_threshold(alpha: f64, beta: f64) -> f64 {
    let stated_form = (1.0 - beta * (1.0 - alpha)) / (beta * (2.0 - alpha));
    let tail_form = beta * (2.0 - alpha) / (1.0 - beta * (1.0 - alpha));
    stated_form.max(tail_form)
}

/// A `C^2` function on `[-b, b]` given with its first two derivatives.
#[derive(Clone)]
pub struct SmoothProfile {
    value: ScalarMap,
    d1: ScalarMap,
    d2: ScalarMap,
}

impl fmt::Debug for SmoothProfile {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.write_str("SmoothProfile")
    }
}

impl SmoothProfile {
    pub fn new(value: ScalarMap, d1: ScalarMap, d2: ScalarMap) -> Self {
        Self { value, d1, d2 }
    }

    pub fn zero() -> Self {
        Self::polynomial(&[])
    }

    /// `sum_k coeffs[k] x^k`.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c0: Arc<[f64]> = coeffs.into();
        let c1: Arc<[f64]> = coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
        let c2: Arc<[f64]> = c1.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
        let horner = |c: Arc<[f64]>| -> ScalarMap { Arc::new(move |x| c.iter().rev().fold(0.0, |acc, a| acc * x + a)) };
        Self { value: horner(c0), d1: horner(c1), d2: horner(c2) }
    }

    /// `(v, v', v'')` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        ((self.value)(x), (self.d1)(x), (self.d2)(x))
    }
}

struct SuperL {
    b: f64,
    mu: f64,
    l0: f64,
    nu: f64,
    r2: f64,
    c: f64,
    t_end: f64,
    v0: SmoothProfile,
    trajectory: DenseTrajectory,
}

impl SuperL {
    fn offset(&self) -> f64 {
        self.l0.powf(self.mu) * 1.5f64.powf(self.l0)
    }

    fn time_terms(&self, t: f64) -> (f64, f64) {
        let rest = self.t_end - t;
        (self.c * t + 1.0 / rest - 1.0 / self.t_end, self.c + 1.0 / (rest * rest))
    }

    /// Jet of the boundary piece at level `l` and rate `dl`, without the time
    /// terms. `sign` is `+1` near `b` and `-1` near `-b`.
    fn tail_jet(&self, x: f64, l: f64, dl: f64, sign: f64) -> Jet {
        let (mu, b) = (self.mu, self.b);
        let d = 2.0 - sign * 2.0 * x / b;
        let (v, v1, v2) = self.v0.eval(x);
        let lm = l.powf(mu);
        let p = d.powf(-l);
        let dmu = if mu == 0.0 { 0.0 } else { mu * l.powf(mu - 1.0) };
        Jet {
            value: lm * p - self.offset() + v,
            dx: sign * lm * (2.0 * l / b) * p / d + v1,
            dxx: lm * (2.0 * l / b) * (l + 1.0) * (2.0 / b) * p / (d * d) + v2,
            dt: dl * (dmu + lm * (-d.ln())) * p,
        }
    }

    fn middle_jet(&self, x: f64, l: f64, dl: f64) -> Jet {
        let (mu, b) = (self.mu, self.b);
        let sq = self.nu.sqrt();
        let rho = (self.r2 - x * x).sqrt();
        let (v, v1, v2) = self.v0.eval(x);
        let lm = l.powf(mu);
        let p = 1.5f64.powf(l);
        let dmu = if mu == 0.0 { 0.0 } else { mu * l.powf(mu - 1.0) };
        Jet {
            value: -rho / sq + 2.0 * b / (3.0 * self.nu * sq) + lm * p - self.offset() + v,
            dx: x / (sq * rho) + v1,
            dxx: self.r2 / (sq * rho * rho * rho) + v2,
            dt: dl * (dmu + lm * LN_THREE_HALVES) * p,
        }
    }

    fn spatial_jet(&self, x: f64, l: f64, dl: f64) -> Jet {
        let edge = 2.0 * self.b / 3.0;
        if x >= edge {
            self.tail_jet(x, l, dl, 1.0)
        } else if x <= -edge {
            self.tail_jet(x, l, dl, -1.0)
        } else {
            self.middle_jet(x, l, dl)
        }
    }

    fn outer_slope(&self, l: f64) -> f64 {
        l.powf(self.mu) * (2.0 * l / self.b) * 1.5f64.powf(l + 1.0)
    }
}

impl BarrierShape for SuperL {
    fn jet(&self, x: f64, t: f64) -> Jet {
        let (l, dl) = (self.trajectory.value(t), self.trajectory.slope(t));
        let (value, rate) = self.time_terms(t);
        let j = self.spatial_jet(x, l, dl);
        Jet { value: j.value + value, dt: j.dt + rate, ..j }
    }

    fn kinks(&self, t: f64) -> Vec<Kink> {
        let edge = 2.0 * self.b / 3.0;
        let l = self.trajectory.value(t);
        let (outer, inner) = (self.outer_slope(l), self.nu.sqrt());
        let v1 = |x: f64| self.v0.eval(x).1;
        vec![
            Kink { x: -edge, kind: KinkKind::Concave, left_slope: -outer + v1(-edge), right_slope: -inner + v1(-edge) },
            Kink { x: edge, kind: KinkKind::Concave, left_slope: inner + v1(edge), right_slope: outer + v1(edge) },
        ]
    }

    fn smooth_scale(&self, x: f64, t: f64) -> (f64, f64) {
        let edge = 2.0 * self.b / 3.0;
        let a = x.abs();
        let l = self.trajectory.value(t);
        let dl = self.trajectory.slope(t);
        let (sx, log_d) = if a >= edge {
            let d = 2.0 - 2.0 * a / self.b;
            ((a - edge).min((self.b - a) / (l + 2.0)), d.ln().abs())
        } else {
            ((edge - a).min(self.r2.sqrt() - a), LN_THREE_HALVES)
        };
        let st = t.min(self.t_end - t).min(1.0 / (dl * (log_d + 1.0)));
        (sx, st)
    }

    fn level(&self, t: f64) -> Option<(f64, f64)> {
        Some((self.trajectory.value(t), self.trajectory.slope(t)))
    }
}

/// `K L^{2mu+2} (3/2)^{2L+2}`, the squared boundary slope scale at level `L`.
fn slope_level(k: f64, mu: f64, l: f64) -> f64 {
    k * l.powf(2.0 * mu + 2.0) * 1.5f64.powf(2.0 * l + 2.0)
}

/// Smallest `L >= from` with `slope_level(k, mu, L) >= nu`.
fn level_for(k: f64, mu: f64, nu: f64, from: f64) -> f64 {
    let h = |l: f64| slope_level(k, mu, l).ln() - nu.ln();
    let mut hi = from.max(1.0);
    while h(hi) < 0.0 {
        hi *= 2.0;
    }
    bisect_increasing(h, from, hi, 1e-13 * hi)
}

/// Super-solution on `(-b, b) x [0, T)` that blows up at `T` and is
/// infinite at `x = +-b`. `v0` is added throughout; the kinks at `+-2b/3`
/// are concave for every `t < T`.
pub fn super_family(spec: &ProblemSpec, v0: &SmoothProfile, l0: f64, nu: f64) -> Result<BarrierFunction, BarrierError> {
    let alpha = spec.alpha();
    let beta = spec
        .beta()
        .ok_or_else(|| BarrierError::Regime("growth exponent of f is required".into()))?;
    let admissible = alpha == 1.0 || (alpha < 1.0 && beta > 0.0 && beta < 1.0 / (1.0 - alpha));
    if !admissible {
        return Err(BarrierError::Regime(format!(
            "needs alpha = 1, or alpha < 1 with beta < 1/(1-alpha); got alpha = {alpha}, beta = {beta}"
        )));
    }
    let b = spec.half_width();
    let mu = super_mu(alpha, beta);
    let l_min = super_l0_threshold(alpha, beta);
    if !(l0 > l_min) {
        return Err(BarrierError::Parameter(format!("L0 = {l0} must exceed {l_min}")));
    }
    let stated = 8.0 * b / 9.0;
    let kink = 4.0 / (b * b);
    let nu_min = slope_level(stated.max(kink), mu, l0);
    if !(nu > nu_min) {
        return Err(BarrierError::Parameter(format!("nu = {nu} must exceed {nu_min} for L0 = {l0}")));
    }
    let l_end = level_for(stated, mu, nu, l0).min(level_for(kink, mu, nu, l0));
    let q = beta * (1.0 - alpha) * (1.0 + mu) - mu;

    let mut shape = SuperL {
        b,
        mu,
        l0,
        nu,
        r2: (2.0 * b / 3.0).powi(2) * (1.0 + 1.0 / (nu * nu)),
        c: 1.0,
        t_end: 1.0,
        v0: v0.clone(),
        trajectory: DenseTrajectory::until_level(|l| l, l0, l0, 1e-8).map(|p| p.0).expect("trivial trajectory"),
    };
    let drive = |j: &Jet| spec.f.eval(2.0 * spec.g.eval(j.dx) * j.dxx);

    let edge = 2.0 * b / 3.0;
    let c5 = (0..=4000)
        .map(|i| -edge + 2.0 * edge * i as f64 / 4000.0)
        .map(|x| drive(&shape.middle_jet(x, l0, 0.0)).abs())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    shape.c = (2.0 * c5).max(1.0);

    let mut sup = 0.0f64;
    for l in log_space(l0, l_end.max(l0 * (1.0 + 1e-9)), 24) {
        let d_floor = 1e-8f64.max(10f64.powf(-300.0 / (l + 2.0)));
        let scale = l.powf(mu + q) * (l + 1.0).powf(beta) * LN_THREE_HALVES;
        for d in log_space(d_floor, 2.0 / 3.0, 200) {
            for sign in [1.0, -1.0] {
                let x = sign * b * (1.0 - d / 2.0);
                let j = shape.tail_jet(x, l, 0.0, sign);
                let ratio = drive(&j).max(0.0) / (d.powf(-l) * scale);
                if ratio.is_finite() {
                    sup = sup.max(ratio);
                }
            }
        }
    }
    let c4 = (2.0 * sup).max(1e-3);
    let rhs = move |l: f64| c4 * l.abs().powf(q) * (l.abs() + 1.0).powf(beta);
    let (trajectory, t_end) = DenseTrajectory::until_level(rhs, l0, l_end, 1e-10)
        .ok_or_else(|| BarrierError::Parameter("level ODE did not reach the terminal level".into()))?;
    shape.trajectory = trajectory;
    shape.t_end = t_end;
    let c = shape.c;

    Ok(BarrierFunction::new(Family::SuperL, b, Arc::new(shape))
        .until(t_end)
        .constant("mu", mu)
        .constant("q", q)
        .constant("L0", l0)
        .constant("L_end", l_end)
        .constant("nu", nu)
        .constant("c", c)
        .constant("C4", c4)
        .constant("C5", c5)
        .constant("T", t_end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::{derivative_agreement, verify_inequality, InequalitySide};
    use crate::model::{preset_power, InitialDatum};

    fn spec(alpha: f64, beta: f64) -> ProblemSpec {
        ProblemSpec::new(2.0, preset_power(alpha, beta).unwrap(), InitialDatum::zero()).unwrap()
    }

    #[test]
    fn mu_values() {
        assert_eq!(super_mu(1.0, 1.0), 0.0);
        let independent = (0.9 * 2.0 - 1.0) / (1.0 - 0.9);
        assert!((super_mu(0.0, 0.9) - independent).abs() < 1e-12);
        assert!((super_mu(0.0, 0.9) - 8.0).abs() < 1e-12);
        assert_eq!(super_mu(0.0, 0.5), 0.0);
    }

    #[test]
    fn polynomial_profile_derivatives() {
        let p = SmoothProfile::polynomial(&[1.0, -2.0, 0.5, 3.0]);
        let (v, d1, d2) = p.eval(0.7);
        assert!((v - (1.0 - 1.4 + 0.5 * 0.49 + 3.0 * 0.343)).abs() < 1e-14);
        assert!((d1 - (-2.0 + 0.7 + 9.0 * 0.49)).abs() < 1e-14);
        assert!((d2 - (1.0 + 18.0 * 0.7)).abs() < 1e-14);
        assert_eq!(SmoothProfile::zero().eval(3.0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn continuous_across_the_kinks() {
        let v0 = SmoothProfile::polynomial(&[0.2, 0.1, -0.3]);
        let bf = super_family(&spec(0.0, 0.5), &v0, 2.5, 1e3).unwrap();
        let edge = 4.0 / 3.0;
        for frac in [0.0, 0.3, 0.9] {
            let t = frac * bf.valid_until();
            for x in [edge, -edge] {
                let a = bf.eval(x - 1e-12, t).unwrap();
                let c = bf.eval(x + 1e-12, t).unwrap();
                assert!((a - c).abs() < 1e-8, "t = {t}, x = {x}: {a} vs {c}");
            }
        }
        assert!((bf.eval(edge, 0.0).unwrap() - v0.eval(edge).0).abs() < 1e-12);
    }

    #[test]
    fn kinks_are_concave_before_t() {
        let bf = super_family(&spec(1.0, 1.0), &SmoothProfile::zero(), 1.5, 1e3).unwrap();
        let horizon = bf.valid_until();
        for frac in [0.0, 0.5, 0.99, 0.999999] {
            for k in bf.kinks(frac * horizon).unwrap() {
                assert!(k.oriented(), "{k:?}");
            }
        }
        assert!(bf.kinks(horizon).is_err());
    }

    #[test]
    fn horizon_grows_with_nu() {
        let s = spec(0.0, 0.5);
        let ts: Vec<f64> = [1e2, 1e4, 1e6, 1e8]
            .iter()
            .map(|&nu| super_family(&s, &SmoothProfile::zero(), 2.05, nu).unwrap().valid_until())
            .collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]), "{ts:?}");
    }

    #[test]
    fn parameters_are_checked() {
        let s = spec(0.0, 0.5);
        let zero = SmoothProfile::zero();
        assert!(matches!(super_family(&s, &zero, 2.0, 1e3), Err(BarrierError::Parameter(_))));
        assert!(matches!(super_family(&s, &zero, 2.5, 10.0), Err(BarrierError::Parameter(_))));
        assert!(matches!(super_family(&spec(0.0, 1.0), &zero, 3.0, 1e6), Err(BarrierError::Regime(_))));
        assert!(matches!(super_family(&spec(1.5, 1.0), &zero, 3.0, 1e6), Err(BarrierError::Regime(_))));
    }

    #[test]
    fn level_is_increasing() {
        let bf = super_family(&spec(1.0, 1.0), &SmoothProfile::zero(), 1.5, 1e4).unwrap();
        let horizon = bf.valid_until();
        let c = bf.constants();
        assert!(c["L_end"] > c["L0"]);
        let edge = 4.0 / 3.0;
        let mut last = f64::NEG_INFINITY;
        for i in 0..50 {
            let t = horizon * i as f64 / 50.0;
            let v = bf.eval(edge, t).unwrap() - c["c"] * t - 1.0 / (horizon - t) + 1.0 / horizon;
            assert!(v > last);
            last = v;
            let (l, dl) = bf.level(t).unwrap().unwrap();
            assert!(dl > 0.0 && l >= c["L0"] - 1e-12 && l <= c["L_end"] + 1e-9);
        }
    }

    #[test]
    fn strict_super_inequality_holds() {
        for (alpha, beta, l0) in [(0.0, 0.5, 2.5), (1.0, 1.0, 1.5)] {
            let s = spec(alpha, beta);
            let bf = super_family(&s, &SmoothProfile::zero(), l0, 1e3).unwrap();
            let rep = verify_inequality(&bf, &s, InequalitySide::SuperStrict(1.0), 2000).unwrap();
            assert!(rep.pass, "alpha = {alpha}: {rep:?}");
            let agree = derivative_agreement(&bf, 200, 3);
            assert!(agree.worst() < 1e-5, "{agree:?}");
        }
    }
}
