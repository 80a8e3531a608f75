use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BarrierError, BarrierFunction, BarrierShape, Family, Jet, Kink};
use crate::numerics::solve_dense;

/// Leading boundary profile `D psi_gamma(b -+ x)` at each end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub d_plus: f64,
    pub d_minus: f64,
}

/// `(psi, -psi', psi'')` of `s -> psi_gamma(s)`, i.e. value and the first two
/// derivatives of `x -> psi_gamma(b - x)` at `s = b - x`.
fn tail_jet(gamma: f64, s: f64) -> (f64, f64, f64) {
    if gamma > 0.0 {
        let v = s.powf(-gamma);
        (v, gamma * v / s, gamma * (gamma + 1.0) * v / (s * s))
    } else {
        (-s.ln(), 1.0 / s, 1.0 / (s * s))
    }
}

struct HTail {
    b: f64,
    b0: f64,
    p: TailParams,
    /// Quintic coefficients in powers of `x`.
    bridge: [f64; 6],
}

impl HTail {
    fn right(&self, x: f64) -> (f64, f64, f64) {
        let (v, d1, d2) = tail_jet(self.p.gamma_plus, self.b - x);
        (self.p.d_plus * v, self.p.d_plus * d1, self.p.d_plus * d2)
    }

    fn left(&self, x: f64) -> (f64, f64, f64) {
        let (v, d1, d2) = tail_jet(self.p.gamma_minus, self.b + x);
        (self.p.d_minus * v, -self.p.d_minus * d1, self.p.d_minus * d2)
    }

    fn poly(&self, x: f64) -> (f64, f64, f64) {
        let c = &self.bridge;
        let v = c.iter().rev().fold(0.0, |acc, &a| acc * x + a);
        let d1 = (1..6).rev().fold(0.0, |acc, k| acc * x + k as f64 * c[k]);
        let d2 = (2..6).rev().fold(0.0, |acc, k| acc * x + (k * (k - 1)) as f64 * c[k]);
        (v, d1, d2)
    }
}

impl BarrierShape for HTail {
    fn jet(&self, x: f64, _t: f64) -> Jet {
        let (value, dx, dxx) = if x >= self.b0 {
            self.right(x)
        } else if x <= -self.b0 {
            self.left(x)
        } else {
            self.poly(x)
        };
        Jet { value, dx, dxx, dt: 0.0 }
    }

    fn kinks(&self, _t: f64) -> Vec<Kink> {
        Vec::new()
    }

    fn smooth_scale(&self, x: f64, _t: f64) -> (f64, f64) {
        let edge = (self.b - x.abs()).min(self.b);
        let seam = (x.abs() - self.b0).abs();
        (edge.min(seam.max(1e-300)), f64::INFINITY)
    }
}

/// Stationary function equal to `D_+ psi(b-x)` on `[b0, b)` and
/// `D_- psi(b+x)` on `(-b, -b0]`, joined by the quintic matching value,
/// slope and curvature at `+-b0`.
pub fn h_tail(b: f64, p: TailParams, b0: f64) -> Result<BarrierFunction, BarrierError> {
    if !(b > 0.0 && b0 > 0.0 && b0 < b) {
        return Err(BarrierError::Parameter(format!("need 0 < b0 < b, got b0 = {b0}, b = {b}")));
    }
    if !(p.gamma_plus >= 0.0 && p.gamma_minus >= 0.0 && p.d_plus > 0.0 && p.d_minus > 0.0) {
        return Err(BarrierError::Parameter("rates must be >= 0 and constants > 0".into()));
    }
    let mut shape = HTail { b, b0, p, bridge: [0.0; 6] };
    let (rv, r1, r2) = shape.right(b0);
    let (lv, l1, l2) = shape.left(-b0);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (x, v, d1, d2) in [(b0, rv, r1, r2), (-b0, lv, l1, l2)] {
        rows.push((0..6).map(|k| x.powi(k)).collect::<Vec<f64>>());
        rows.push((0..6).map(|k| if k == 0 { 0.0 } else { k as f64 * x.powi(k - 1) }).collect());
        rows.push(
            (0..6)
                .map(|k| if k < 2 { 0.0 } else { (k * (k - 1)) as f64 * x.powi(k - 2) })
                .collect(),
        );
        rhs.extend([v, d1, d2]);
    }
    let c = solve_dense(rows, rhs).ok_or_else(|| BarrierError::Parameter("singular bridge system".into()))?;
    shape.bridge.copy_from_slice(&c);
    Ok(BarrierFunction::new(Family::HTail, b, Arc::new(shape)).constant("b0", b0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(g: f64) -> TailParams {
        TailParams { gamma_plus: g, gamma_minus: g, d_plus: 1.0, d_minus: 1.0 }
    }

    #[test]
    fn tail_values() {
        let h = h_tail(1.0, unit(1.0), 0.5).unwrap();
        assert!((h.eval(0.99, 0.0).unwrap() - 100.0).abs() < 1e-9);
        let h = h_tail(1.0, unit(0.0), 0.5).unwrap();
        let x = 1.0 - (-1.0f64).exp() * 0.5;
        assert!((h.eval(x, 0.0).unwrap() + (1.0 - x).ln()).abs() < 1e-14);
    }

    #[test]
    fn symmetric_data_give_even_function() {
        let h = h_tail(1.0, unit(0.7), 0.4).unwrap();
        for i in 0..40 {
            let x = -0.99 + 0.0495 * i as f64;
            assert!((h.eval(x, 0.0).unwrap() - h.eval(-x, 0.0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn bridge_is_c2_at_seams() {
        let p = TailParams { gamma_plus: 2.0, gamma_minus: 0.0, d_plus: 3.0, d_minus: 0.5 };
        let h = h_tail(1.5, p, 0.9).unwrap();
        for x0 in [0.9, -0.9] {
            let a = h.jet(x0 - 1e-12, 0.0).unwrap();
            let c = h.jet(x0 + 1e-12, 0.0).unwrap();
            assert!((a.value - c.value).abs() < 1e-9 * a.value.abs().max(1.0));
            assert!((a.dx - c.dx).abs() < 1e-8 * a.dx.abs().max(1.0));
            assert!((a.dxx - c.dxx).abs() < 1e-7 * a.dxx.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_bad_seam() {
        assert!(h_tail(1.0, unit(1.0), 1.0).is_err());
    }
}
