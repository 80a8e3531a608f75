#![no_main]

use libfuzzer_sys::fuzz_target;
use singflow::model::{preset_curvature, InitialDatum, ProblemSpec};
use singflow::scenario::DatumSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = DatumSpec::parse(text) else { return };
    if matches!(spec, DatumSpec::Wave) {
        return;
    }
    let problem = ProblemSpec::new(1.0, preset_curvature(1.0).expect("preset"), InitialDatum::zero()).expect("problem");
    if let Ok(datum) = spec.build(&problem) {
        let _ = datum.eval(0.25);
    }
});
