use std::sync::Arc;

use super::{weight_lower_constant, BarrierError, BarrierFunction, BarrierShape, Family, Jet, Kink, KinkKind};
use crate::model::ProblemSpec;
use crate::numerics::bisect_increasing;

/// Root `y` in `(0, 1/e]` of `1/(y ln y) = -k`, i.e. `y ln y = -1/k`.
pub fn uk_root(k: f64) -> Result<f64, BarrierError> {
    let top = (-1.0f64).exp();
    // y ln y decreases from 0 to -1/e on (0, 1/e].
    let h = |y: f64| -(y * y.ln()) - 1.0 / k;
    if !(k > 0.0) || h(top) < -1e-15 {
        return Err(BarrierError::Parameter(format!("no root of 1/(y ln y) = -k for k = {k}; k must be >= e")));
    }
    if h(top) <= 1e-15 {
        return Ok(top);
    }
    Ok(bisect_increasing(h, 0.0, top, 1e-14 * top).min(top))
}

struct Uk {
    b: f64,
    k: f64,
    y: f64,
    /// `-ln y`.
    ly: f64,
    r2: f64,
    /// `f(-M ln y)`, the speed of the double exponential.
    speed: f64,
}

impl Uk {
    /// `E(t) = exp(speed t) (-ln y)`; the kink sits at `e^-E + b - y`.
    fn e_of(&self, t: f64) -> f64 {
        (self.speed * t).exp() * self.ly
    }

    fn kink_at(&self, t: f64) -> f64 {
        (-self.e_of(t)).exp() + self.b - self.y
    }

    fn kink_velocity(&self, t: f64) -> f64 {
        let e = self.e_of(t);
        -(-e).exp() * e * self.speed
    }

    fn right_jet(&self, x: f64, t: f64) -> Jet {
        let xk = self.kink_at(t);
        if x <= xk {
            let rho = (self.r2 - x * x).sqrt();
            return Jet { value: -rho, dx: x / rho, dxx: self.r2 / (rho * rho * rho), dt: 0.0 };
        }
        let z = xk - x + self.y;
        let l = -z.ln();
        let rho_k = (self.r2 - xk * xk).sqrt();
        let xv = self.kink_velocity(t);
        Jet {
            value: (l / self.ly).ln() - rho_k,
            dx: 1.0 / (z * l),
            dxx: (l - 1.0) / (z * z * l * l),
            dt: -xv / (z * l) + xk * xv / rho_k,
        }
    }
}

impl BarrierShape for Uk {
    fn jet(&self, x: f64, t: f64) -> Jet {
        if x >= 0.0 {
            self.right_jet(x, t)
        } else {
            let j = self.right_jet(-x, t);
            Jet { dx: -j.dx, ..j }
        }
    }

    fn kinks(&self, t: f64) -> Vec<Kink> {
        let xk = self.kink_at(t);
        if xk >= self.b {
            return Vec::new();
        }
        let inner = xk / (self.r2 - xk * xk).sqrt();
        vec![
            Kink { x: -xk, kind: KinkKind::Convex, left_slope: -self.k, right_slope: -inner },
            Kink { x: xk, kind: KinkKind::Convex, left_slope: inner, right_slope: self.k },
        ]
    }

    fn smooth_scale(&self, x: f64, t: f64) -> (f64, f64) {
        let xk = self.kink_at(t);
        let a = x.abs();
        let mut sx = (a - xk).abs().min(self.b + 1e-300);
        if a > xk {
            sx = sx.min(xk - a + self.y).min(self.b - a + 1e-300);
        }
        let v = self.kink_velocity(t).abs();
        let st = if v > 0.0 { ((a - xk).abs() / v).min(t) } else { t };
        (sx, st.min(1.0 / self.speed.max(1e-300)))
    }
}

/// Sub-solution that stays bounded on `[-b, b]` while its boundary values
/// grow with `k`. `M` is estimated from `g(s) >= 2M s^-2` for `|s| >= k`.
pub fn sub_uk(spec: &ProblemSpec, k: f64) -> Result<BarrierFunction, BarrierError> {
    let alpha = spec.alpha();
    if alpha > 2.0 {
        return Err(BarrierError::Regime(format!("needs alpha <= 2, got {alpha}")));
    }
    let y = uk_root(k)?;
    let b = spec.half_width();
    let m = 0.5 * weight_lower_constant(&spec.g, 2.0, k);
    if !(m > 0.0) {
        return Err(BarrierError::Parameter("no positive M with g(s) >= 2M s^-2 on the sampled tail".into()));
    }
    let ly = -y.ln();
    let speed = spec.f.eval(m * ly);
    let r2 = b * b * (1.0 + k * k) / (k * k);
    let shape = Uk { b, k, y, ly, r2, speed };
    Ok(BarrierFunction::new(Family::SubsolutionUk, b, Arc::new(shape))
        .closed()
        .constant("k", k)
        .constant("y_k", y)
        .constant("r_k", r2.sqrt())
        .constant("M", m)
        .constant("s0", k)
        .constant("speed", speed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset_curvature, InitialDatum};
    use std::f64::consts::E;

    fn spec() -> ProblemSpec {
        ProblemSpec::new(1.0, preset_curvature(1.0).unwrap(), InitialDatum::zero()).unwrap()
    }

    #[test]
    fn root_at_e() {
        assert!((uk_root(E).unwrap() - (-1.0f64).exp()).abs() < 1e-14);
        assert!(uk_root(2.0).is_err());
        let y = uk_root(1e3).unwrap();
        assert!((1.0 / (y * y.ln()) + 1e3).abs() < 1e-6);
    }

    #[test]
    fn radius_tends_to_b() {
        let u = sub_uk(&spec(), 1000.0).unwrap();
        assert!((u.constants()["r_k"] - (1.0f64 + 1e-6).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn initial_slice_is_a_circle_arc() {
        let u = sub_uk(&spec(), 100.0).unwrap();
        let r = u.constants()["r_k"];
        for x in [-0.999, -0.5, 0.0, 0.3, 0.9999] {
            let v = u.eval(x, 0.0).unwrap();
            assert!((v + (r * r - x * x).sqrt()).abs() < 1e-14);
        }
        assert!(u.kinks(0.0).unwrap().is_empty());
    }

    #[test]
    fn kink_moves_inward() {
        let u = sub_uk(&spec(), 100.0).unwrap();
        let a = u.kinks(0.1).unwrap()[1].x;
        let c = u.kinks(0.2).unwrap()[1].x;
        assert!(c < a && a < 1.0);
        for k in u.kinks(0.1).unwrap() {
            assert!(k.oriented());
        }
    }

    #[test]
    fn boundary_value_is_finite() {
        let u = sub_uk(&spec(), 100.0).unwrap();
        let v = u.eval(1.0, 0.3).unwrap();
        assert!(v.is_finite());
        assert!((v - u.eval(-1.0, 0.3).unwrap()).abs() < 1e-12);
    }
}
