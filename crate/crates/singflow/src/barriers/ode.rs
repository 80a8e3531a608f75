//! Scalar autonomous ODE `y' = F(y)` by Dormand-Prince 5(4) with cubic
//! Hermite dense output.

use crate::numerics::bisect_increasing;

/// Accepted steps `(t, y, y')`, queried by Hermite interpolation.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    ts: Vec<f64>,
    ys: Vec<f64>,
    dys: Vec<f64>,
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand-Prince step: `(y_new, error estimate, F(y_new))`.
fn dp_step<F: Fn(f64) -> f64>(rhs: &F, y: f64, h: f64) -> (f64, f64, f64) {
    let mut k = [0.0; 7];
    k[0] = rhs(y);
    for s in 0..6 {
        let inc: f64 = (0..=s).map(|j| A[s][j] * k[j]).sum();
        k[s + 1] = rhs(y + h * inc);
    }
    let y_new = y + h * (0..6).map(|j| A[5][j] * k[j]).sum::<f64>();
    let err = h * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
    (y_new, err, k[6])
}

impl DenseTrajectory {
    /// Integrates from `(0, y0)` until `y` first reaches `target`, with
    /// relative tolerance `rtol`. Returns the trajectory and the hitting time.
    pub fn until_level<F: Fn(f64) -> f64>(rhs: F, y0: f64, target: f64, rtol: f64) -> Option<(Self, f64)> {
        let mut tr = Self { ts: vec![0.0], ys: vec![y0], dys: vec![rhs(y0)] };
        if y0 >= target {
            return Some((tr, 0.0));
        }
        let (mut t, mut y) = (0.0, y0);
        let mut h = 1e-3 * (target - y0) / tr.dys[0].max(1e-300);
        for _ in 0..2_000_000 {
            let (y_new, err, dy_new) = dp_step(&rhs, y, h);
            let scale = rtol * y.abs().max(y_new.abs()) + 1e-14;
            let ratio = err.abs() / scale;
            if ratio <= 1.0 && y_new.is_finite() {
                if y_new >= target {
                    // Land on the level with a shortened step instead of interpolating.
                    let hit_step = bisect_increasing(|s| dp_step(&rhs, y, s).0 - target, 0.0, h, 1e-15 * (t + h));
                    let (y_hit, _, dy_hit) = dp_step(&rhs, y, hit_step);
                    tr.push(t + hit_step, y_hit, dy_hit);
                    tr.push(t + h, y_new, dy_new);
                    return Some((tr, t + hit_step));
                }
                t += h;
                y = y_new;
                tr.push(t, y, dy_new);
            }
            let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
            h *= grow;
        }
        None
    }

    fn locate(&self, t: f64) -> usize {
        let k = self.ts.partition_point(|&v| v <= t);
        k.clamp(1, self.ts.len().max(2) - 1) - 1
    }

    fn hermite(&self, k: usize, t: f64) -> (f64, f64) {
        if self.ts.len() < 2 {
            return (self.ys[0], self.dys[0]);
        }
        let (t0, t1) = (self.ts[k], self.ts[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1, d0, d1) = (self.ys[k], self.ys[k + 1], self.dys[k] * h, self.dys[k + 1] * h);
        let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
        let h10 = s * s * s - 2.0 * s * s + s;
        let h01 = -2.0 * s * s * s + 3.0 * s * s;
        let h11 = s * s * s - s * s;
        let val = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dh00 = 6.0 * s * s - 6.0 * s;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = -6.0 * s * s + 6.0 * s;
        let dh11 = 3.0 * s * s - 2.0 * s;
        (val, (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h)
    }

    /// `y(t)` within the integrated range.
    pub fn value(&self, t: f64) -> f64 {
        self.hermite(self.locate(t), t).0
    }

    /// `y'(t)` of the interpolant.
    pub fn slope(&self, t: f64) -> f64 {
        self.hermite(self.locate(t), t).1
    }

    /// End of the integrated range.
    pub fn end(&self) -> f64 {
        *self.ts.last().unwrap_or(&0.0)
    }

    fn push(&mut self, t: f64, y: f64, dy: f64) {
        if t > *self.ts.last().unwrap_or(&f64::NEG_INFINITY) {
            self.ts.push(t);
            self.ys.push(y);
            self.dys.push(dy);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let (tr, hit) = DenseTrajectory::until_level(|y| y, 1.0, 10.0, 1e-8).unwrap();
        assert!((hit - 10f64.ln()).abs() < 1e-7);
        for t in [0.1, 0.77, 1.5, 2.2] {
            // Cubic Hermite interpolation dominates the error between steps.
            assert!((tr.value(t) / t.exp() - 1.0).abs() < 1e-6);
            assert!((tr.slope(t) / t.exp() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn square_root_growth() {
        // y' = 1/(2y), y(0) = 1  =>  y = sqrt(1 + t).
        let (tr, hit) = DenseTrajectory::until_level(|y| 0.5 / y, 1.0, 3.0, 1e-8).unwrap();
        assert!((hit - 8.0).abs() < 1e-6);
        assert!((tr.value(3.0) - 2.0).abs() < 1e-7);
    }
}
