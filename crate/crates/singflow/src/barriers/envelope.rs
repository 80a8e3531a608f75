use std::sync::Arc;

use super::{BarrierError, BarrierFunction, BarrierShape, Family, Jet, Kink, KinkKind};

/// Piecewise-linear function through the lower hull vertices.
struct Envelope {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Envelope {
    fn segment(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|&v| v <= x);
        k.clamp(1, self.xs.len() - 1) - 1
    }

    fn slope(&self, k: usize) -> f64 {
        (self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k])
    }
}

impl BarrierShape for Envelope {
    fn jet(&self, x: f64, _t: f64) -> Jet {
        let k = self.segment(x);
        let s = self.slope(k);
        Jet { value: self.ys[k] + s * (x - self.xs[k]), dx: s, dxx: 0.0, dt: 0.0 }
    }

    fn kinks(&self, _t: f64) -> Vec<Kink> {
        (1..self.xs.len() - 1)
            .map(|k| Kink {
                x: self.xs[k],
                kind: KinkKind::Convex,
                left_slope: self.slope(k - 1),
                right_slope: self.slope(k),
            })
            .collect()
    }

    fn smooth_scale(&self, x: f64, _t: f64) -> (f64, f64) {
        let d = self.xs.iter().map(|v| (v - x).abs()).fold(f64::INFINITY, f64::min);
        (d, f64::INFINITY)
    }
}

/// Greatest convex minorant of sampled values (monotone-chain lower hull).
/// `xs` must be strictly increasing; `b` is the half-width the samples live in.
pub fn convex_envelope(b: f64, xs: &[f64], values: &[f64]) -> Result<BarrierFunction, BarrierError> {
    if xs.len() != values.len() || xs.len() < 2 {
        return Err(BarrierError::Parameter("need at least two samples with matching lengths".into()));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
        return Err(BarrierError::Parameter("samples must be finite on an increasing grid".into()));
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(xs.len());
    for (&x, &y) in xs.iter().zip(values) {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // Drop the middle point unless it turns strictly counter-clockwise.
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, y));
    }
    let shape = Envelope { xs: hull.iter().map(|p| p.0).collect(), ys: hull.iter().map(|p| p.1).collect() };
    Ok(BarrierFunction::new(Family::ConvexEnvelope, b, Arc::new(shape)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| -0.99 + 1.98 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn convex_input_is_reproduced() {
        let xs = grid(41);
        let ys: Vec<f64> = xs.iter().map(|x| x * x + 0.3 * x).collect();
        let env = convex_envelope(1.0, &xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((env.eval(*x, 0.0).unwrap() - y).abs() < 1e-14);
        }
        assert!(env.kinks(0.0).unwrap().iter().all(|k| k.oriented()));
    }

    #[test]
    fn concave_tent_becomes_chord() {
        let xs = grid(21);
        let ys: Vec<f64> = xs.iter().map(|x: &f64| -x.abs()).collect();
        let env = convex_envelope(1.0, &xs, &ys).unwrap();
        for x in &xs {
            assert!((env.eval(*x, 0.0).unwrap() + 0.99).abs() < 1e-14);
        }
        assert!(env.kinks(0.0).unwrap().is_empty());
    }

    #[test]
    fn double_well_is_flat_between_minima() {
        let xs = grid(199);
        let well = |x: f64| (x * x - 0.25).powi(2);
        let ys: Vec<f64> = xs.iter().map(|&x| well(x)).collect();
        let env = convex_envelope(1.0, &xs, &ys).unwrap();
        // Oracle: the envelope at each node is the best chord value over all pairs bracketing it.
        for (k, &x) in xs.iter().enumerate() {
            let mut best = ys[k];
            for i in 0..=k {
                for j in k..xs.len() {
                    if j > i {
                        let w = (x - xs[i]) / (xs[j] - xs[i]);
                        best = best.min(ys[i] * (1.0 - w) + ys[j] * w);
                    }
                }
            }
            assert!((env.eval(x, 0.0).unwrap() - best).abs() < 1e-12, "x = {x}");
        }
        let mid = env.eval(0.0, 0.0).unwrap();
        assert!(mid < 1e-3);
    }
}
