//! Self-checks of every module, run by `singflow verify`.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{
    derivative_agreement, h_tail, sub_uk, sub_vl, super_family, translate_wave, BarrierFunction, SmoothProfile,
    TailParams,
};
use crate::model::{
    preset_curvature, preset_p_heat, preset_power, psi, BoundaryRate, DatumClass, DiffusionWeight, InitialDatum,
    Nonlinearity, ProblemSpec, TailGrowth,
};
use crate::numerics::log_space;
use crate::regime::{classify_inputs, RegimeInputs, Verdict};
use crate::solver::{
    cfl_limit, ordered_pair_violations, random_ordered_pair, solve, step, GhostRule, GridField,
};
use crate::verify::{default_gamma_grid, fit_boundary_rate, residual, scale_sub, scale_super};
use crate::wave::compute_wave;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub module: String,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Wall time; left out of serialized output so reruns compare equal.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckOutcome>,
    pub passed: usize,
    pub failed: usize,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0 && !self.checks.is_empty()
    }
}

/// `Ok(detail)` passes, `Err(detail)` fails.
type Outcome = Result<String, String>;

struct Check {
    module: &'static str,
    name: &'static str,
    run: fn() -> Outcome,
}

fn require(pass: bool, detail: String) -> Outcome {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const CHECKS: &[Check] = &[
    Check { module: "model", name: "tail_ratio_converges", run: tail_ratio_converges },
    Check { module: "model", name: "nonlinearity_round_trip", run: nonlinearity_round_trip },
    Check { module: "model", name: "psi_decreasing", run: psi_decreasing },
    Check { module: "regime", name: "branch_coverage", run: branch_coverage },
    Check { module: "regime", name: "threshold_cases", run: threshold_cases },
    Check { module: "regime", name: "monotone_in_beta", run: monotone_in_beta },
    Check { module: "wave", name: "speed_identity", run: speed_identity },
    Check { module: "wave", name: "antiderivative_round_trip", run: antiderivative_round_trip },
    Check { module: "wave", name: "residual_under_refinement", run: residual_under_refinement },
    Check { module: "wave", name: "unbounded_at_ends", run: unbounded_at_ends },
    Check { module: "barriers", name: "derivative_consistency", run: derivative_consistency },
    Check { module: "barriers", name: "super_level_admissible", run: super_level_admissible },
    Check { module: "barriers", name: "super_kinks_oriented", run: super_kinks_oriented },
    Check { module: "barriers", name: "uk_kink_moves_inward", run: uk_kink_moves_inward },
    Check { module: "barriers", name: "uk_boundary_grows_with_k", run: uk_boundary_grows_with_k },
    Check { module: "barriers", name: "uk_initial_slice", run: uk_initial_slice },
    Check { module: "solver", name: "discrete_comparison", run: discrete_comparison },
    Check { module: "solver", name: "rate_preservation", run: rate_preservation },
    Check { module: "solver", name: "odd_symmetry", run: odd_symmetry },
    Check { module: "verify", name: "residual_monotone_in_factor", run: residual_monotone_in_factor },
    Check { module: "verify", name: "scaling_covariance", run: scaling_covariance },
    Check { module: "verify", name: "scale_round_trip", run: scale_round_trip },
    Check { module: "verify", name: "planted_rate_recovery", run: planted_rate_recovery },
];

/// Names of all checks as `module/name`.
pub fn check_names() -> Vec<String> {
    CHECKS.iter().map(|c| format!("{}/{}", c.module, c.name)).collect()
}

/// Runs every check, in parallel, reporting in a fixed order.
pub fn run_suite() -> SuiteReport {
    let checks: Vec<CheckOutcome> = CHECKS
        .par_iter()
        .map(|c| {
            let start = Instant::now();
            let outcome = (c.run)();
            let seconds = start.elapsed().as_secs_f64();
            let (pass, detail) = match outcome {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome { module: c.module.into(), name: c.name.into(), pass, detail, seconds }
        })
        .collect();
    let passed = checks.iter().filter(|c| c.pass).count();
    SuiteReport { failed: checks.len() - passed, passed, checks }
}

fn spec(b: f64, pair: (Nonlinearity, DiffusionWeight)) -> ProblemSpec {
    ProblemSpec::new(b, pair, InitialDatum::zero()).expect("preset specs are valid")
}

fn presets() -> Vec<(&'static str, (Nonlinearity, DiffusionWeight))> {
    let ok = |r: Result<(Nonlinearity, DiffusionWeight), _>| r.expect("preset parameters are valid");
    vec![
        ("curvature(2/3)", ok(preset_curvature(2.0 / 3.0))),
        ("curvature(1)", ok(preset_curvature(1.0))),
        ("curvature(2)", ok(preset_curvature(2.0))),
        ("p_heat(2)", ok(preset_p_heat(2.0, 1.0, 0.1))),
        ("p_heat(4)", ok(preset_p_heat(4.0, 1.0, 0.1))),
        ("power(0,0.5)", ok(preset_power(0.0, 0.5))),
        ("power(1.5,1)", ok(preset_power(1.5, 1.0))),
    ]
}

fn tail_ratio_converges() -> Outcome {
    let mut worst = 0.0f64;
    for (name, (_, g)) in presets() {
        for (sign, cg) in [(1.0, g.cg_plus()), (-1.0, g.cg_minus())] {
            let gaps: Vec<f64> = [1e4, 1e6, 1e8].iter().map(|&s| (g.tail_ratio(sign * s) / cg - 1.0).abs()).collect();
            let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12);
            if !monotone || gaps[2] > 0.05 {
                return Err(format!("{name}: relative gaps {gaps:?}"));
            }
            worst = worst.max(gaps[2]);
        }
    }
    Ok(format!("worst gap at 1e8: {worst:.2e}"))
}

fn nonlinearity_round_trip() -> Outcome {
    let cubic = Nonlinearity::custom(
        Arc::new(|s: f64| s + s * s * s),
        Some(TailGrowth { exponent: 3.0, plus: 1.0, minus: 1.0 }),
    )
    .map_err(text)?;
    let mut fs: Vec<(String, Nonlinearity)> = presets().into_iter().map(|(n, (f, _))| (n.to_string(), f)).collect();
    fs.push(("s + s^3".into(), cubic));
    let mut worst = 0.0f64;
    for (name, f) in &fs {
        for s in log_space(1e-6, 1e6, 49).into_iter().flat_map(|s| [s, -s]) {
            let err = (f.inverse(f.eval(s)) - s).abs() / s.abs().max(1.0);
            if !(err <= 1e-10) {
                return Err(format!("{name}: inverse misses {s} by {err:.2e}"));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

fn psi_decreasing() -> Outcome {
    for gamma in [0.0, 0.25, 0.5, 1.0, 2.0, 5.0] {
        let vals: Vec<f64> = log_space(1e-8, 10.0, 91)
            .into_iter()
            .map(|s| psi(gamma, s))
            .collect::<Result<_, _>>()
            .map_err(text)?;
        if vals.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(format!("psi_{gamma} is not strictly decreasing"));
        }
    }
    require(psi(1.0, 0.0).is_err() && psi(-1.0, 1.0).is_err(), "psi rejects s <= 0 and gamma < 0".into())
}

fn inputs(alpha: f64, beta: Option<f64>, class: DatumClass, bounded_below: bool) -> RegimeInputs {
    RegimeInputs { alpha, beta, class, bounded_below }
}

fn rate(gamma: f64) -> DatumClass {
    DatumClass::RateControlled(BoundaryRate {
        gamma_plus: gamma,
        gamma_minus: gamma,
        d_plus: 1.0,
        d_minus: 1.0,
        offset_plus: 0.0,
        offset_minus: 0.0,
    })
}

fn branch_coverage() -> Outcome {
    let b1 = DatumClass::Bounded;
    let b2 = DatumClass::Unbounded { gamma: 1.0 };
    let table = [
        (inputs(2.5, None, b1, true), Verdict::NeedsUnboundedData),
        (inputs(2.5, None, b2, true), Verdict::Exists),
        (inputs(2.5, None, rate(0.0), true), Verdict::ExistsUnique),
        (inputs(1.5, None, b1, true), Verdict::Exists),
        (inputs(1.5, None, rate(1.0), true), Verdict::ExistsUnique),
        (inputs(1.5, None, rate(0.5), true), Verdict::Exists),
        (inputs(1.0, Some(3.0), b1, true), Verdict::Exists),
        (inputs(0.0, Some(1.0), b1, true), Verdict::NotExists),
        (inputs(0.0, Some(1.0), b2, false), Verdict::OutsideTheory),
        (inputs(0.0, Some(0.5), b1, true), Verdict::Exists),
    ];
    let mut bases = std::collections::BTreeSet::new();
    for (inp, want) in table {
        let got = classify_inputs(inp).map_err(text)?;
        if got.verdict != want {
            return Err(format!("{inp:?}: expected {want:?}, got {:?}", got.verdict));
        }
        bases.insert(got.basis);
    }
    let missing = classify_inputs(inputs(0.5, None, b1, true)).is_err();
    require(missing && bases.len() == 6, format!("{} rules fired; missing beta rejected: {missing}", bases.len()))
}

fn threshold_cases() -> Outcome {
    let b1 = DatumClass::Bounded;
    let at_two = classify_inputs(inputs(2.0, None, b1, true)).map_err(text)?;
    let at_one = classify_inputs(inputs(1.0, Some(7.0), b1, true)).map_err(text)?;
    let critical = classify_inputs(inputs(0.5, Some(2.0), b1, true)).map_err(text)?;
    let below = classify_inputs(inputs(0.5, Some(2.0 - 1e-12), b1, true)).map_err(text)?;
    let pass = at_two.verdict == Verdict::Exists
        && at_two.basis == "1 < alpha <= 2"
        && at_one.basis == "alpha = 1"
        && critical.verdict == Verdict::NotExists
        && below.verdict == Verdict::Exists;
    require(
        pass,
        format!(
            "alpha=2: {:?}; alpha=1: {:?}; beta=1/(1-alpha): {:?}; just below: {:?}",
            at_two.verdict, at_one.basis, critical.verdict, below.verdict
        ),
    )
}

fn monotone_in_beta() -> Outcome {
    for alpha in [-1.0, 0.0, 0.5, 0.9] {
        let mut seen_not = false;
        for k in 1..=400 {
            let beta = 0.05 * k as f64;
            let v = classify_inputs(inputs(alpha, Some(beta), DatumClass::Bounded, true)).map_err(text)?;
            match v.verdict {
                Verdict::NotExists => seen_not = true,
                Verdict::Exists if seen_not => return Err(format!("alpha = {alpha}: exists again at beta = {beta}")),
                _ => {}
            }
        }
        if !seen_not {
            return Err(format!("alpha = {alpha}: never reached non-existence"));
        }
    }
    Ok("one switch per alpha".into())
}

fn wave_presets() -> Vec<(&'static str, ProblemSpec)> {
    vec![
        ("curvature(2/3)", spec(1.3, preset_curvature(2.0 / 3.0).expect("valid"))),
        ("curvature(1)", spec(1.0, preset_curvature(1.0).expect("valid"))),
        ("curvature(2)", spec(0.7, preset_curvature(2.0).expect("valid"))),
        ("power(1.5,1)", spec(1.0, preset_power(1.5, 1.0).expect("valid"))),
    ]
}

fn speed_identity() -> Outcome {
    let mut worst = 0.0f64;
    for (name, s) in wave_presets() {
        let w = compute_wave(&s, 256, 0.0).map_err(text)?;
        let err = (2.0 * w.b * s.f.inverse(w.c) - w.g_total).abs() / w.g_total;
        if !(err <= 1e-10) {
            return Err(format!("{name}: relative error {err:.2e}"));
        }
        worst = worst.max(err);
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

fn antiderivative_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    for (name, s) in wave_presets() {
        let w = compute_wave(&s, 64, 0.0).map_err(text)?;
        let anti = w.antiderivative();
        for x in log_space(1e-3, 1e6, 46) {
            // Invert each side from the end where the mass is small.
            let right = anti.inverse_from_right(anti.complement(x));
            let left = anti.inverse_from_left(anti.value(-x));
            for (got, want) in [(right, x), (left, -x)] {
                let err = (got - want).abs() / want.abs().max(1.0);
                if !(err <= 1e-8) {
                    return Err(format!("{name}: G^-1(G({want})) = {got}"));
                }
                worst = worst.max(err);
            }
        }
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

fn residual_under_refinement() -> Outcome {
    let mut details = Vec::new();
    for (name, s) in wave_presets() {
        let coarse = compute_wave(&s, 1 << 10, 0.0).map_err(text)?.max_residual();
        let fine = compute_wave(&s, 1 << 11, 0.0).map_err(text)?.max_residual();
        if !(fine <= 1e-6 && fine <= coarse * 1.1 + 1e-12) {
            return Err(format!("{name}: residual {coarse:.2e} -> {fine:.2e}"));
        }
        details.push(format!("{name} {fine:.1e}"));
    }
    Ok(details.join(", "))
}

fn unbounded_at_ends() -> Outcome {
    for (name, s) in wave_presets() {
        if s.alpha() > 2.0 {
            continue;
        }
        let w = compute_wave(&s, 256, 0.0).map_err(text)?;
        for side_is_right in [true, false] {
            let mut pts: Vec<(f64, f64)> = w
                .nodes
                .iter()
                .filter(|n| (n.x > 0.0) == side_is_right && n.dist <= 0.25 * w.b)
                .map(|n| (n.dist, n.w))
                .collect();
            pts.sort_by(|a, b| b.0.total_cmp(&a.0));
            let grows = pts.windows(2).all(|p| p[1].1 > p[0].1);
            let rise = pts.last().map_or(0.0, |p| p.1) - w.w0;
            if !grows || !(rise > 10.0) {
                return Err(format!("{name}: W rises by {rise:.3} toward the end, monotone {grows}"));
            }
        }
    }
    Ok("W increases without bound toward both ends for 1 < alpha <= 2".into())
}

fn barrier_families() -> Result<Vec<BarrierFunction>, String> {
    let curv = spec(1.0, preset_curvature(1.0).map_err(text)?);
    let heat = spec(1.0, preset_power(0.0, 1.0).map_err(text)?);
    let sqrt = spec(2.0, preset_power(0.0, 0.5).map_err(text)?);
    let tail = TailParams { gamma_plus: 1.0, gamma_minus: 0.0, d_plus: 2.0, d_minus: 1.0 };
    Ok(vec![
        h_tail(1.0, tail, 0.5).map_err(text)?,
        sub_uk(&curv, 100.0).map_err(text)?,
        sub_vl(&heat, 50.0).map_err(text)?,
        super_family(&sqrt, &SmoothProfile::polynomial(&[0.0, 0.1, 0.2]), 2.5, 1e3).map_err(text)?,
        translate_wave(&compute_wave(&curv, 1 << 10, 0.0).map_err(text)?),
    ])
}

fn derivative_consistency() -> Outcome {
    let mut details = Vec::new();
    for bf in barrier_families()? {
        let agree = derivative_agreement(&bf, 1000, 7);
        if agree.points < 1000 || !(agree.worst() < 1e-5) {
            return Err(format!("{:?}: {agree:?}", bf.family()));
        }
        details.push(format!("{:?} {:.1e}", bf.family(), agree.worst()));
    }
    Ok(details.join(", "))
}

fn super_cases() -> Result<Vec<(f64, f64, BarrierFunction)>, String> {
    let mut out = Vec::new();
    for (alpha, beta, l0, nu) in [(0.0, 0.5, 2.5, 1e3), (1.0, 1.0, 1.5, 1e3), (0.5, 1.0, 3.5, 1e5)] {
        let s = spec(2.0, preset_power(alpha, beta).map_err(text)?);
        out.push((alpha, beta, super_family(&s, &SmoothProfile::zero(), l0, nu).map_err(text)?));
    }
    Ok(out)
}

fn super_level_admissible() -> Outcome {
    for (alpha, beta, bf) in super_cases()? {
        let horizon = bf.valid_until();
        let mut last = f64::NEG_INFINITY;
        for i in 0..400 {
            let t = horizon * i as f64 / 400.0;
            let (l, dl) = bf.level(t).map_err(text)?.ok_or("family has no level")?;
            let margin = l * (1.0 - beta * (1.0 - alpha)) - beta * (2.0 - alpha);
            if !(l > last && dl > 0.0 && margin > 0.0) {
                return Err(format!("({alpha}, {beta}) at t = {t}: L = {l}, L' = {dl}, margin = {margin}"));
            }
            last = l;
        }
    }
    Ok("L increasing with positive margin on [0, T)".into())
}

fn super_kinks_oriented() -> Outcome {
    for (alpha, beta, bf) in super_cases()? {
        let horizon = bf.valid_until();
        for i in 0..200 {
            let t = horizon * i as f64 / 200.0;
            if let Some(k) = bf.kinks(t).map_err(text)?.iter().find(|k| !k.oriented()) {
                return Err(format!("({alpha}, {beta}) at t = {t}: {k:?}"));
            }
        }
    }
    Ok("both kinks concave before T".into())
}

fn uk_kink_moves_inward() -> Outcome {
    let bf = sub_uk(&spec(1.0, preset_curvature(1.0).map_err(text)?), 1e3).map_err(text)?;
    // Past about one e-fold the kink sits within rounding of b - y.
    let horizon = 1.0 / bf.constants()["speed"];
    let mut last = f64::INFINITY;
    for i in 1..=200 {
        let t = horizon * i as f64 / 200.0;
        let x = bf.kinks(t).map_err(text)?.last().map(|k| k.x).ok_or("no kink")?;
        if !(x < last) {
            return Err(format!("kink at {x} after {last} at t = {t}"));
        }
        last = x;
    }
    Ok(format!("kink decreases to {last:.6}"))
}

fn uk_boundary_grows_with_k() -> Outcome {
    let s = spec(1.0, preset_curvature(1.0).map_err(text)?);
    let mut vals = Vec::new();
    for k in [1e2, 1e3, 1e4] {
        vals.push(sub_uk(&s, k).map_err(text)?.eval(1.0, 0.5).map_err(text)?);
    }
    require(vals.windows(2).all(|w| w[1] > w[0]), format!("values at x = b, t = 0.5: {vals:?}"))
}

fn uk_initial_slice() -> Outcome {
    let b = 1.0;
    let bf = sub_uk(&spec(b, preset_curvature(1.0).map_err(text)?), 1e4).map_err(text)?;
    let mut worst = 0.0f64;
    for i in 0..=400 {
        let x = -b + 2.0 * b * i as f64 / 400.0;
        let gap = (bf.eval(x, 0.0).map_err(text)? + (b * b - x * x).max(0.0).sqrt()).abs();
        worst = worst.max(gap);
    }
    require(worst <= 1e-3, format!("max gap to the lower semicircle {worst:.2e}"))
}

fn discrete_comparison() -> Outcome {
    let s = spec(1.0, preset_curvature(1.0).map_err(text)?);
    let mut total = 0;
    for seed in 0..20 {
        let (lower, upper) = random_ordered_pair(seed, 1.0, 100, 5.0).map_err(text)?;
        total += ordered_pair_violations(&s, lower, upper, 0.02).map_err(text)?;
    }
    require(total == 0, format!("{total} violations over 20 ordered pairs"))
}

fn rate_preservation() -> Outcome {
    let b = 1.0;
    let pair = preset_curvature(2.0 / 3.0).map_err(text)?;
    let offset = 1.0 / (2.0 * b);
    let class = DatumClass::RateControlled(BoundaryRate {
        gamma_plus: 1.0,
        gamma_minus: 1.0,
        d_plus: 1.0,
        d_minus: 1.0,
        offset_plus: offset,
        offset_minus: offset,
    });
    let u0 = InitialDatum::new(class, Arc::new(move |x: f64| 1.0 / (b - x) + 1.0 / (b + x)));
    let s = ProblemSpec::new(b, pair, u0).map_err(text)?;
    let mut fitted = Vec::new();
    for cap in [1e3, 1e4, 1e5] {
        let report = solve(&s, 400, cap, 0.1).map_err(text)?;
        let fit = report.rate_fit.ok_or(format!("no rate fit at cap {cap}"))?;
        for g in [fit.plus.gamma, fit.minus.gamma] {
            if !((g - 1.0).abs() <= 0.1) {
                return Err(format!("cap {cap}: fitted gamma {g}"));
            }
        }
        fitted.push(fit.plus.gamma);
    }
    Ok(format!("fitted gamma {fitted:?}"))
}

fn odd_symmetry() -> Outcome {
    let s = spec(1.0, preset_curvature(1.0).map_err(text)?);
    let mut field = GridField::new(1.0, 101, 5.0, |x| (std::f64::consts::PI * x).sin() + 0.3 * x)
        .map_err(text)?
        .with_ghosts(GhostRule::Antisymmetric);
    while field.time < 0.05 {
        let dt = cfl_limit(&field, &s).min(0.05 - field.time);
        field = step(&field, &s, dt).map_err(text)?;
    }
    let scale = field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = (0..field.n)
        .map(|i| (field.values[i] + field.values[field.n - 1 - i]).abs())
        .fold(0.0f64, f64::max);
    require(worst <= 1e-10 * scale.max(1.0), format!("max |u(x) + u(-x)| = {worst:.2e}"))
}

fn residual_monotone_in_factor() -> Outcome {
    for (name, pair) in presets() {
        let s = spec(1.0, pair);
        for p in [-30.0, -1.0, 0.0, 0.4, 7.0] {
            for dxx in [-5.0, -0.1, 0.1, 5.0] {
                let rs: Vec<f64> = [0.5, 1.0, 1.5, 2.0].iter().map(|&k| residual(&s, 0.3, p, dxx, k).value).collect();
                let ok = if dxx > 0.0 {
                    rs.windows(2).all(|w| w[1] < w[0])
                } else {
                    rs.windows(2).all(|w| w[1] > w[0])
                };
                if !ok {
                    return Err(format!("{name}: p = {p}, dxx = {dxx}, residuals {rs:?}"));
                }
            }
        }
    }
    Ok("strictly monotone on every sample".into())
}

/// Polynomial test function with exact partials.
fn probe(x: f64, t: f64) -> f64 {
    0.25 * x.powi(4) + x * x * t + 0.3 * x + t * t + t
}

fn probe_jet(x: f64, t: f64) -> (f64, f64, f64) {
    (2.0 * t + 1.0 + x * x, x.powi(3) + 2.0 * x * t + 0.3, 3.0 * x * x + 2.0 * t)
}

fn scaling_covariance() -> Outcome {
    let mut worst = 0.0f64;
    for (name, pair) in presets() {
        let s = spec(1.0, pair);
        for lambda in [0.1, 0.5] {
            for delta in [0.0, 0.2] {
                let v = scale_super(probe, lambda);
                let k = 1.0 + lambda;
                for (x, t) in [(0.1, 0.2), (-0.3, 0.05), (0.6, 0.4)] {
                    let h = 1e-4;
                    let dt = (v(x, t + h) - v(x, t - h)) / (2.0 * h);
                    let dx = (v(x + h, t) - v(x - h, t)) / (2.0 * h);
                    let dxx = (v(x + h, t) - 2.0 * v(x, t) + v(x - h, t)) / (h * h);
                    let scaled = residual(&s, dt, dx, dxx, (1.0 + delta) / k).value;
                    let (pt, px, pxx) = probe_jet(k * x, k * t);
                    let base = residual(&s, pt, px, pxx, 1.0 + delta).value;
                    let err = (scaled - base).abs() / (1.0 + base.abs());
                    if !(err <= 1e-5) {
                        return Err(format!("{name}: lambda {lambda}, delta {delta}, ({x}, {t}): {scaled} vs {base}"));
                    }
                    worst = worst.max(err);
                }
            }
        }
    }
    Ok(format!("worst mismatch {worst:.2e}"))
}

fn scale_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    for lambda in [0.01, 0.3, 2.0] {
        let back = scale_sub(scale_super(probe, lambda), lambda);
        for i in 0..50 {
            let (x, t) = (-0.9 + 0.036 * i as f64, 0.02 * i as f64);
            let err = (back(x, t) - probe(x, t)).abs() / probe(x, t).abs().max(1.0);
            worst = worst.max(err);
        }
    }
    require(worst <= 1e-12, format!("worst relative error {worst:.2e}"))
}

fn planted_rate_recovery() -> Outcome {
    let grid = default_gamma_grid(None);
    for gamma in [0.0, 0.5, 1.0, 2.0, 3.5] {
        let pts: Vec<(f64, f64)> = log_space(1e-4, 0.5, 40)
            .into_iter()
            .map(|d| (d, 2.5 * psi(gamma, d).unwrap_or(f64::NAN) - 1.0))
            .collect();
        let fit = fit_boundary_rate(&pts, &grid).map_err(text)?;
        if fit.gamma != gamma || !(fit.spread < 1e-10) {
            return Err(format!("planted {gamma}: {fit:?}"));
        }
    }
    Ok("exact gamma, spread < 1e-10".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let names = check_names();
        let set: std::collections::BTreeSet<_> = names.iter().collect();
        assert_eq!(set.len(), names.len());
    }

    #[test]
    fn fast_checks_pass() {
        for f in [branch_coverage, threshold_cases, monotone_in_beta, scale_round_trip, planted_rate_recovery, psi_decreasing] {
            assert!(f().is_ok(), "{:?}", f());
        }
    }

    #[test]
    fn require_maps_to_outcome() {
        assert_eq!(require(true, "a".into()), Ok("a".into()));
        assert_eq!(require(false, "b".into()), Err("b".into()));
    }
}
