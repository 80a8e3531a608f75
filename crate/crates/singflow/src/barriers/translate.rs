use std::sync::Arc;

use super::{BarrierFunction, BarrierShape, Family, Jet, Kink};
use crate::wave::WaveProfile;

struct Translate {
    wave: WaveProfile,
}

impl BarrierShape for Translate {
    fn jet(&self, x: f64, t: f64) -> Jet {
        let w = &self.wave;
        Jet { value: w.value(x) + w.c * t, dx: w.slope(x), dxx: w.curvature(x), dt: w.c }
    }

    fn kinks(&self, _t: f64) -> Vec<Kink> {
        Vec::new()
    }

    fn smooth_scale(&self, x: f64, _t: f64) -> (f64, f64) {
        ((self.wave.b - x.abs()).min(self.wave.b), 1.0)
    }
}

/// The traveling solution `W(x) + ct`.
pub fn translate_wave(wave: &WaveProfile) -> BarrierFunction {
    BarrierFunction::new(Family::TranslateWave, wave.b, Arc::new(Translate { wave: wave.clone() }))
        .constant("c", wave.c)
        .constant("g_total", wave.g_total)
}
