use std::sync::Arc;

use super::{
    growth_lower_constant, weight_lower_constant, BarrierError, BarrierFunction, BarrierShape, Family, Jet, Kink,
    KinkKind,
};
use crate::model::ProblemSpec;

/// Exponent `2 beta - alpha beta - 1` of `L` in the front speed.
pub fn vl_speed_exponent(alpha: f64, beta: f64) -> f64 {
    2.0 * beta - alpha * beta - 1.0
}

struct Vl {
    b: f64,
    l: f64,
    speed: f64,
}

impl Vl {
    fn power_jet(&self, base: f64, dt_coeff: f64) -> Jet {
        let (l, b2) = (self.l, 2.0 * self.b);
        let v = base.powf(-l);
        Jet {
            value: v,
            dx: l / b2 * v / base,
            dxx: l * (l + 1.0) / (b2 * b2) * v / (base * base),
            dt: dt_coeff * l * v / base,
        }
    }

    fn front(&self, t: f64) -> f64 {
        self.b - 2.0 * self.b * self.speed * t
    }
}

impl BarrierShape for Vl {
    fn jet(&self, x: f64, t: f64) -> Jet {
        let b2 = 2.0 * self.b;
        if t * self.speed >= 1.0 {
            return self.power_jet((self.b - x) / b2, 0.0);
        }
        if x >= self.front(t) {
            self.power_jet((3.0 * self.b - x) / b2 - self.speed * t, self.speed)
        } else {
            Jet { value: 1.0, dx: 0.0, dxx: 0.0, dt: 0.0 }
        }
    }

    fn kinks(&self, t: f64) -> Vec<Kink> {
        if t <= 0.0 || t * self.speed >= 1.0 {
            return Vec::new();
        }
        vec![Kink { x: self.front(t), kind: KinkKind::Convex, left_slope: 0.0, right_slope: self.l / (2.0 * self.b) }]
    }

    fn smooth_scale(&self, x: f64, t: f64) -> (f64, f64) {
        let b2 = 2.0 * self.b;
        let switch = 1.0 / self.speed;
        let base = if t >= switch { (self.b - x) / b2 } else { (3.0 * self.b - x) / b2 - self.speed * t };
        let mut sx = b2 * base.abs() / (self.l + 2.0);
        let mut st = t.min((t - switch).abs());
        if t < switch {
            let front = self.front(t);
            sx = sx.min((x - front).abs());
            st = st.min((x - front).abs() / (b2 * self.speed));
            if x >= front {
                st = st.min(base / (self.speed * (self.l + 2.0)));
            }
        }
        (sx.min(self.b - x.abs()), st)
    }

    fn sample_horizon(&self) -> f64 {
        2.0 / self.speed
    }
}

/// Sub-solution that starts at `1` and reaches `((b-x)/2b)^-L` at time `1/c_L`.
/// `L` must be at least the threshold where the tail bounds of `f` and `g`
/// apply along the front.
pub fn sub_vl(spec: &ProblemSpec, l: f64) -> Result<BarrierFunction, BarrierError> {
    let alpha = spec.alpha();
    let beta = spec
        .beta()
        .ok_or_else(|| BarrierError::Regime("growth exponent of f is required".into()))?;
    if alpha >= 1.0 || beta < 1.0 / (1.0 - alpha) {
        return Err(BarrierError::Regime(format!(
            "needs alpha < 1 and beta >= 1/(1-alpha), got alpha = {alpha}, beta = {beta}"
        )));
    }
    let b = spec.half_width();
    let (lg, lf) = (1.0, 1.0);
    let mg = weight_lower_constant(&spec.g, alpha, lg);
    let mf = growth_lower_constant(&spec.f, beta, lf);
    let holds = |l: f64| {
        l / (2.0 * b) >= lg && mg * (2.0 * b).powf(alpha - 2.0) * l.powf(1.0 - alpha) * (l + 1.0) >= 2.0 * lf
    };
    let mut l_min = 1.0;
    while !holds(l_min) {
        l_min *= 1.25;
        if l_min > 1e12 {
            return Err(BarrierError::Parameter("no admissible L below 1e12".into()));
        }
    }
    if l < l_min {
        return Err(BarrierError::Parameter(format!("L = {l} is below the admissible threshold {l_min}")));
    }
    let speed = mf * mg.powf(beta) * l.powf(vl_speed_exponent(alpha, beta))
        / (2f64.powf(beta) * (2.0 * b).powf((2.0 - alpha) * beta));
    Ok(BarrierFunction::new(Family::BlowupVl, b, Arc::new(Vl { b, l, speed }))
        .constant("L", l)
        .constant("L_min", l_min)
        .constant("c_L", speed)
        .constant("M_g", mg)
        .constant("M_f", mf)
        .constant("L_g", lg)
        .constant("L_f", lf))
}
