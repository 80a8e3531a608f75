//! Explicit monotone finite differences with a boundary cap standing in for
//! the infinite Dirichlet data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DatumClass, ProblemSpec};
use crate::verify::{default_gamma_grid, fit_boundary_rate, RateFit};

/// Fraction of the monotonicity bound `dx^2 / (2 Lambda)` actually used.
pub const CFL_SAFETY: f64 = 0.5;
/// Lower bound on the slope estimate in fully degenerate regions.
pub const LAMBDA_FLOOR: f64 = 1e-8;
/// Smallest half-width of the secant window in `z`; keeps the estimate
/// finite for nonlinearities with infinite slope at the origin.
pub const SECANT_FLOOR: f64 = 1e-2;
pub const BLOWUP_VALUE: f64 = 1e12;
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("step {dt} exceeds the stability limit {limit}")]
    StepSize { dt: f64, limit: f64 },
    #[error("non-finite value {value} at node {node}")]
    Overflow { node: usize, value: f64 },
    #[error("parameter error: {0}")]
    Parameter(String),
}

/// Ghost values outside `(-b, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GhostRule {
    /// `+cap` at both ends.
    #[default]
    Capped,
    /// `-cap` at `-b` and `+cap` at `b`, for odd data.
    Antisymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub b: f64,
    pub n: usize,
    pub values: Vec<f64>,
    pub cap: f64,
    pub time: f64,
    #[serde(default)]
    pub ghosts: GhostRule,
}

impl GridField {
    /// Samples `u0` at the interior nodes and clamps it at `cap`.
    pub fn new(b: f64, n: usize, cap: f64, u0: impl Fn(f64) -> f64) -> Result<Self, SolverError> {
        if n < 3 {
            return Err(SolverError::Parameter(format!("need at least 3 interior nodes, got {n}")));
        }
        if !(b > 0.0 && b.is_finite()) || !(cap > 0.0 && cap.is_finite()) {
            return Err(SolverError::Parameter(format!("need positive finite b and cap, got b = {b}, cap = {cap}")));
        }
        let dx = 2.0 * b / (n + 1) as f64;
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let v = u0(-b + (i + 1) as f64 * dx).min(cap);
            if !v.is_finite() {
                return Err(SolverError::Overflow { node: i, value: v });
            }
            values.push(v);
        }
        Ok(Self { b, n, values, cap, time: 0.0, ghosts: GhostRule::Capped })
    }

    pub fn with_ghosts(mut self, ghosts: GhostRule) -> Self {
        self.ghosts = ghosts;
        self
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.b / (self.n + 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.b + (i + 1) as f64 * self.dx()
    }

    pub fn ghost_values(&self) -> (f64, f64) {
        match self.ghosts {
            GhostRule::Capped => (self.cap, self.cap),
            GhostRule::Antisymmetric => (-self.cap, self.cap),
        }
    }

    fn at(&self, i: isize) -> f64 {
        let (left, right) = self.ghost_values();
        if i < 0 {
            left
        } else if i as usize >= self.n {
            right
        } else {
            self.values[i as usize]
        }
    }

    /// Centered first and standard second differences at node `i`.
    pub fn differences(&self, i: usize) -> (f64, f64) {
        let dx = self.dx();
        let (l, c, r) = (self.at(i as isize - 1), self.values[i], self.at(i as isize + 1));
        ((r - l) / (2.0 * dx), (r - 2.0 * c + l) / (dx * dx))
    }

    /// Piecewise-linear value, using the ghosts at `+-b`.
    pub fn interpolate(&self, x: f64) -> f64 {
        let s = ((x + self.b) / self.dx()).clamp(0.0, (self.n + 1) as f64);
        let k = (s.floor() as isize).min(self.n as isize);
        let w = s - k as f64;
        let lo = self.at(k - 1);
        if w == 0.0 {
            return lo;
        }
        lo * (1.0 - w) + self.at(k) * w
    }
}

/// Slope of `z -> f(g(p) z)` by a secant over `[z - r, z + r]`, `r = max(|z|, floor)`.
fn local_slope(spec: &ProblemSpec, p: f64, z: f64) -> f64 {
    let gp = spec.g.eval(p);
    let r = z.abs().max(SECANT_FLOOR);
    (spec.f.eval(gp * (z + r)) - spec.f.eval(gp * (z - r))) / (2.0 * r)
}

/// Largest explicit step keeping the update monotone, `0.5 dx^2 / (2 Lambda)`.
pub fn cfl_limit(field: &GridField, spec: &ProblemSpec) -> f64 {
    let lambda = (0..field.n)
        .map(|i| {
            let (p, z) = field.differences(i);
            local_slope(spec, p, z)
        })
        .fold(LAMBDA_FLOOR, |a, v| if v.is_finite() { a.max(v) } else { f64::INFINITY });
    let dx = field.dx();
    CFL_SAFETY * dx * dx / (2.0 * lambda)
}

fn advance_into(field: &GridField, spec: &ProblemSpec, dt: f64, out: &mut Vec<f64>) -> Result<(), SolverError> {
    out.clear();
    for i in 0..field.n {
        let (p, z) = field.differences(i);
        let v = field.values[i] + dt * spec.f.eval(spec.g.eval(p) * z);
        if !v.is_finite() {
            return Err(SolverError::Overflow { node: i, value: v });
        }
        out.push(v);
    }
    Ok(())
}

/// One explicit step `u_i += dt f(g(Du_i) D^2 u_i)`.
pub fn step(field: &GridField, spec: &ProblemSpec, dt: f64) -> Result<GridField, SolverError> {
    let limit = cfl_limit(field, spec);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(SolverError::StepSize { dt, limit });
    }
    let mut values = Vec::with_capacity(field.n);
    advance_into(field, spec, dt, &mut values)?;
    Ok(GridField { values, time: field.time + dt, ..field.clone() })
}

/// Nodes where a step left the range spanned by the old three-point stencil.
fn stencil_violations(before: &GridField, after: &[f64]) -> usize {
    (0..before.n)
        .filter(|&i| {
            let (l, c, r) = (before.at(i as isize - 1), before.values[i], before.at(i as isize + 1));
            let (lo, hi) = (l.min(c).min(r), l.max(c).max(r));
            let tol = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
            after[i] < lo - tol || after[i] > hi + tol
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFit {
    pub plus: RateFit,
    pub minus: RateFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    #[serde(rename = "final")]
    pub final_field: GridField,
    pub dt_history: StepStats,
    /// Node updates that left the local stencil range (zero for a monotone step).
    pub comparison_violations: usize,
    pub diverged: bool,
    pub blowup_time: Option<f64>,
    pub rate_fit: Option<BoundaryFit>,
    pub snapshots: Vec<GridField>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveOptions {
    /// Times at which a copy of the field is kept; the run lands on each exactly.
    pub snapshot_times: Vec<f64>,
    pub ghosts: GhostRule,
}

pub fn solve(spec: &ProblemSpec, n: usize, cap: f64, t_end: f64) -> Result<SolveReport, SolverError> {
    solve_with(spec, n, cap, t_end, &SolveOptions::default())
}

pub fn solve_with(
    spec: &ProblemSpec,
    n: usize,
    cap: f64,
    t_end: f64,
    opts: &SolveOptions,
) -> Result<SolveReport, SolverError> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(SolverError::Parameter(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    let u0 = spec.u0.values();
    let field = GridField::new(spec.half_width(), n, cap, |x| u0(x))?.with_ghosts(opts.ghosts);
    evolve(field, spec, t_end, opts)
}

/// Runs an existing field forward to `t_end`.
pub fn evolve(mut field: GridField, spec: &ProblemSpec, t_end: f64, opts: &SolveOptions) -> Result<SolveReport, SolverError> {
    let mut marks: Vec<f64> = opts.snapshot_times.iter().copied().filter(|&t| t >= field.time && t <= t_end).collect();
    marks.sort_by(f64::total_cmp);
    marks.dedup();
    let mut next_mark = 0;
    let mut snapshots = Vec::with_capacity(marks.len());
    let mut stats = StepStats { steps: 0, min: f64::INFINITY, max: 0.0, mean: 0.0 };
    let mut violations = 0;
    let mut diverged = false;
    let mut scratch = Vec::with_capacity(field.n);
    loop {
        while next_mark < marks.len() && marks[next_mark] <= field.time {
            snapshots.push(GridField { time: marks[next_mark], ..field.clone() });
            next_mark += 1;
        }
        if field.time >= t_end {
            break;
        }
        let limit = cfl_limit(&field, spec);
        let target = marks.get(next_mark).copied().unwrap_or(t_end).min(t_end);
        let remaining = target - field.time;
        let dt = limit.min(remaining);
        if limit < MIN_STEP {
            diverged = true;
            break;
        }
        if advance_into(&field, spec, dt, &mut scratch).is_err() {
            diverged = true;
            break;
        }
        violations += stencil_violations(&field, &scratch);
        std::mem::swap(&mut field.values, &mut scratch);
        field.time = if dt == remaining { target } else { field.time + dt };
        stats.steps += 1;
        stats.min = stats.min.min(dt);
        stats.max = stats.max.max(dt);
        stats.mean += dt;
        if field.values.iter().any(|v| v.abs() > BLOWUP_VALUE) {
            diverged = true;
            break;
        }
    }
    if stats.steps > 0 {
        stats.mean /= stats.steps as f64;
    } else {
        stats.min = 0.0;
    }
    let rate_fit = match spec.u0.class() {
        DatumClass::RateControlled(_) if !diverged => boundary_fit(&field, spec.alpha()),
        _ => None,
    };
    Ok(SolveReport {
        blowup_time: diverged.then_some(field.time),
        final_field: field,
        dt_history: stats,
        comparison_violations: violations,
        diverged,
        rate_fit,
        snapshots,
    })
}

/// Fits `u ~ D psi_gamma(b - |x|) + C` at each end over unclamped nodes in
/// the outer half.
pub fn boundary_fit(field: &GridField, alpha: f64) -> Option<BoundaryFit> {
    let grid = default_gamma_grid(Some(alpha));
    let side = |sign: f64| -> Option<RateFit> {
        let pts: Vec<(f64, f64)> = (0..field.n)
            .filter_map(|i| {
                let x = field.x(i);
                let d = field.b - sign * x;
                let v = field.values[i];
                (sign * x > 0.0 && d <= 0.5 * field.b && v < 0.5 * field.cap).then_some((d, v))
            })
            .collect();
        fit_boundary_rate(&pts, &grid).ok()
    };
    Some(BoundaryFit { plus: side(1.0)?, minus: side(-1.0)? })
}

/// Steps two fields with a shared step size and counts nodes where the
/// initial ordering `u <= v` fails at any step.
pub fn ordered_pair_violations(
    spec: &ProblemSpec,
    mut lower: GridField,
    mut upper: GridField,
    t_end: f64,
) -> Result<usize, SolverError> {
    if lower.n != upper.n || lower.b != upper.b || lower.cap != upper.cap {
        return Err(SolverError::Parameter("fields must share grid and cap".into()));
    }
    let tol = |v: f64| 1e-12 * (1.0 + v.abs());
    let count = |u: &GridField, v: &GridField| u.values.iter().zip(&v.values).filter(|(a, b)| **a > **b + tol(**b)).count();
    let mut violations = count(&lower, &upper);
    while lower.time < t_end {
        let dt = cfl_limit(&lower, spec).min(cfl_limit(&upper, spec)).min(t_end - lower.time);
        if dt < MIN_STEP {
            return Err(SolverError::StepSize { dt, limit: MIN_STEP });
        }
        lower = step(&lower, spec, dt)?;
        upper = step(&upper, spec, dt)?;
        violations += count(&lower, &upper);
    }
    Ok(violations)
}

/// Smooth random data `u <= v` on a shared grid: `u` is a short sine
/// series and `v - u` a nonnegative cosine bump plus a constant.
pub fn random_ordered_pair(seed: u64, b: f64, n: usize, cap: f64) -> Result<(GridField, GridField), SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (lift, bump, freq) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..1.0), rng.gen_range(1..4) as f64);
    let lower = move |x: f64| -> f64 {
        amps.iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::FRAC_PI_2 * (x + b) / b).sin())
            .sum()
    };
    let upper = {
        let lower = lower.clone();
        move |x: f64| lower(x) + lift + 0.5 * bump * (1.0 + (freq * std::f64::consts::PI * x / b).cos())
    };
    Ok((GridField::new(b, n, cap, lower)?, GridField::new(b, n, cap, upper)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapVerdict {
    Saturating,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapRow {
    pub cap: f64,
    pub probe_value: f64,
    /// Change from the previous cap.
    pub difference: Option<f64>,
    /// Probe value did not decrease from the previous cap.
    pub monotone: bool,
    pub diverged: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapStudy {
    pub probe: (f64, f64),
    pub rows: Vec<CapRow>,
    pub verdict: CapVerdict,
}

/// Classifies the last three successive differences against geometric decay.
pub fn cap_verdict(rows: &[CapRow]) -> CapVerdict {
    if rows.len() < 4 {
        return CapVerdict::Inconclusive;
    }
    if rows.iter().any(|r| r.diverged) {
        return CapVerdict::Diverging;
    }
    let d: Vec<f64> = rows[rows.len() - 3..].iter().filter_map(|r| r.difference).collect();
    let scale = 1e-12 * rows.iter().map(|r| r.probe_value.abs()).fold(1.0, f64::max);
    if d.iter().all(|v| v.abs() <= scale) {
        return CapVerdict::Saturating;
    }
    let ratio = |a: f64, b: f64| if a.abs() <= scale { f64::INFINITY } else { b.abs() / a.abs() };
    let (r1, r2) = (ratio(d[0], d[1]), ratio(d[1], d[2]));
    if r1 < 0.7 && r2 < 0.7 {
        CapVerdict::Saturating
    } else if r1 > 0.95 && r2 > 0.95 && d[2].abs() > 1.0 {
        CapVerdict::Diverging
    } else {
        CapVerdict::Inconclusive
    }
}

/// Solves once per cap (concurrently) and reads the probe `(x, t)`.
pub fn cap_study(spec: &ProblemSpec, n: usize, caps: &[f64], probe: (f64, f64)) -> Result<CapStudy, SolverError> {
    if caps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SolverError::Parameter("caps must be strictly increasing".into()));
    }
    let b = spec.half_width();
    if !(probe.0.abs() < b && probe.1 >= 0.0) {
        return Err(SolverError::Parameter(format!("probe {probe:?} must be interior with t >= 0")));
    }
    let runs: Vec<Result<SolveReport, SolverError>> = caps.par_iter().map(|&cap| solve(spec, n, cap, probe.1)).collect();
    let mut rows: Vec<CapRow> = Vec::with_capacity(caps.len());
    for (&cap, run) in caps.iter().zip(runs) {
        let run = run?;
        let value = if run.diverged { f64::INFINITY } else { run.final_field.interpolate(probe.0) };
        let prev = rows.last().map(|r| r.probe_value);
        rows.push(CapRow {
            cap,
            probe_value: value,
            difference: prev.map(|p| value - p),
            monotone: prev.is_none_or(|p| value >= p),
            diverged: run.diverged,
            steps: run.dt_history.steps,
        });
    }
    let verdict = cap_verdict(&rows);
    Ok(CapStudy { probe, rows, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset_p_heat, preset_power, InitialDatum, Nonlinearity};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn heat(b: f64) -> ProblemSpec {
        ProblemSpec::new(b, preset_power(0.0, 1.0).unwrap(), InitialDatum::zero()).unwrap()
    }

    fn unit_weight_heat(b: f64) -> ProblemSpec {
        // g == 1 exactly: p-heat with p = 2 has g = 1 + eps.
        ProblemSpec::new(b, preset_p_heat(2.0, 1.0, 1e-300).unwrap(), InitialDatum::zero()).unwrap()
    }

    #[test]
    fn linear_data_is_steady() {
        let s = unit_weight_heat(1.0);
        let mut f = GridField::new(1.0, 9, 1.0, |x| x).unwrap().with_ghosts(GhostRule::Antisymmetric);
        let dt = cfl_limit(&f, &s);
        assert!((dt - 0.25 * f.dx() * f.dx()).abs() < 1e-15);
        let before = f.values.clone();
        for _ in 0..10 {
            f = step(&f, &s, dt).unwrap();
        }
        for (a, b) in before.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn three_node_heat_by_hand() {
        // n = 3, b = 2: dx = 1, nodes -1, 0, 1, ghosts 0. With u = (1, 2, 1) and
        // dt = 0.25: D^2 u = (0 - 2 + 2, 1 - 4 + 1, 2 - 2 + 0) = (0, -2, 0).
        let s = unit_weight_heat(2.0);
        let mut f = GridField::new(2.0, 3, 1.0, |_| 0.0).unwrap();
        f.values = vec![1.0, 2.0, 1.0];
        f.ghosts = GhostRule::Antisymmetric;
        f.cap = 1e-300;
        let next = step(&f, &s, 0.25).unwrap();
        assert_eq!(next.values, vec![1.0, 1.5, 1.0]);
        assert_eq!(next.time, 0.25);
        assert!(matches!(step(&f, &s, 0.3), Err(SolverError::StepSize { .. })));
    }

    #[test]
    fn heat_converges_at_second_order() {
        // Exact solution e^{-(pi/2b)^2 t} cos(pi x / 2b) vanishes at +-b.
        let b = 1.0;
        let s = unit_weight_heat(b);
        let k = PI / (2.0 * b);
        let t_end = 0.1;
        let err = |n: usize| {
            let mut f = GridField::new(b, n, 2.0, |x| (k * x).cos()).unwrap();
            f.cap = 1e-300;
            let r = evolve(f, &s, t_end, &SolveOptions::default()).unwrap();
            let decay = (-k * k * t_end).exp();
            (0..n).map(|i| (r.final_field.values[i] - decay * (k * r.final_field.x(i)).cos()).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(19), err(39));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.15, "order {order}, errors {e1:.3e} {e2:.3e}");
    }

    #[test]
    fn one_step_preserves_order() {
        let s = ProblemSpec::new(1.0, preset_power(0.0, 0.5).unwrap(), InitialDatum::zero()).unwrap();
        let u = GridField::new(1.0, 50, 5.0, |x| x * x).unwrap();
        let v = GridField::new(1.0, 50, 5.0, |x| x * x + 0.1 * (1.0 + x)).unwrap();
        let dt = cfl_limit(&u, &s).min(cfl_limit(&v, &s));
        let (u1, v1) = (step(&u, &s, dt).unwrap(), step(&v, &s, dt).unwrap());
        assert!(u1.values.iter().zip(&v1.values).all(|(a, b)| a <= b));
    }

    #[test]
    fn cfl_shrinks_with_curvature_for_superlinear_f() {
        let s = ProblemSpec::new(1.0, preset_power(0.0, 2.0).unwrap(), InitialDatum::zero()).unwrap();
        let mut last = f64::INFINITY;
        for amp in [0.1, 1.0, 10.0, 100.0] {
            // Cap at the boundary value keeps the ghosts on the parabola.
            let f = GridField::new(1.0, 20, amp, |x| amp * x * x).unwrap();
            let dt = cfl_limit(&f, &s);
            assert!(dt <= last);
            last = dt;
        }
    }

    #[test]
    fn degenerate_weight_relaxes_cfl() {
        let s = ProblemSpec::new(1.0, preset_power(1.0, 1.0).unwrap(), InitialDatum::zero()).unwrap();
        let flat = GridField::new(1.0, 20, 1e6, |_| 0.0).unwrap();
        let steep = GridField::new(1.0, 20, 1e6, |x| 1e3 * x).unwrap().with_ghosts(GhostRule::Antisymmetric);
        assert!(cfl_limit(&steep, &s) > cfl_limit(&flat, &s));
    }

    #[test]
    fn odd_data_stays_odd() {
        let (_, g) = preset_power(1.0, 1.0).unwrap();
        let f = Nonlinearity::custom(Arc::new(|z: f64| z + z * z * z / (1.0 + z * z)), None).unwrap();
        let u0 = InitialDatum::new(DatumClass::Bounded, Arc::new(|x: f64| (3.0 * x).sin() + x));
        let s = ProblemSpec::new(1.0, (f, g), u0).unwrap();
        let opts = SolveOptions { ghosts: GhostRule::Antisymmetric, ..Default::default() };
        let r = solve_with(&s, 101, 3.0, 0.05, &opts).unwrap();
        let v = &r.final_field.values;
        for i in 0..v.len() {
            assert!((v[i] + v[v.len() - 1 - i]).abs() < 1e-10);
        }
    }

    #[test]
    fn capped_heat_stays_below_cap() {
        let r = solve(&heat(1.0), 60, 10.0, 0.2).unwrap();
        assert!(!r.diverged);
        assert_eq!(r.comparison_violations, 0);
        assert!(r.final_field.values.iter().all(|&v| (0.0..=10.0).contains(&v)));
        assert_eq!(r.final_field.time, 0.2);
    }

    #[test]
    fn snapshots_land_on_requested_times() {
        let opts = SolveOptions { snapshot_times: vec![0.05, 0.0, 0.1], ..Default::default() };
        let r = solve_with(&heat(1.0), 30, 5.0, 0.1, &opts).unwrap();
        let times: Vec<f64> = r.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![0.0, 0.05, 0.1]);
    }

    #[test]
    fn interpolation_hits_nodes_and_ghosts() {
        let f = GridField::new(1.0, 9, 7.0, |x| x).unwrap();
        assert_eq!(f.interpolate(1.0), 7.0);
        assert_eq!(f.interpolate(-1.0), 7.0);
        assert!((f.interpolate(f.x(3)) - f.values[3]).abs() < 1e-15);
        let mid = 0.5 * (f.x(3) + f.x(4));
        assert!((f.interpolate(mid) - mid).abs() < 1e-12);
    }

    #[test]
    fn random_pairs_are_ordered_and_reproducible() {
        for seed in 0..10 {
            let (u, v) = random_ordered_pair(seed, 1.0, 50, 5.0).unwrap();
            assert!(u.values.iter().zip(&v.values).all(|(a, b)| a <= b));
            let (u2, _) = random_ordered_pair(seed, 1.0, 50, 5.0).unwrap();
            assert_eq!(u.values, u2.values);
        }
    }

    #[test]
    fn verdict_rules() {
        let rows = |vals: &[f64]| -> Vec<CapRow> {
            let mut out: Vec<CapRow> = Vec::new();
            for (k, &v) in vals.iter().enumerate() {
                let prev = out.last().map(|r| r.probe_value);
                out.push(CapRow {
                    cap: 10.0 * 2f64.powi(k as i32),
                    probe_value: v,
                    difference: prev.map(|p| v - p),
                    monotone: true,
                    diverged: false,
                    steps: 1,
                });
            }
            out
        };
        assert_eq!(cap_verdict(&rows(&[1.0, 2.0, 3.0])), CapVerdict::Inconclusive);
        assert_eq!(cap_verdict(&rows(&[1.0, 1.5, 1.75, 1.875, 1.9375])), CapVerdict::Saturating);
        assert_eq!(cap_verdict(&rows(&[5.0, 10.0, 20.0, 40.0, 80.0])), CapVerdict::Diverging);
        assert_eq!(cap_verdict(&rows(&[1.0, 1.0, 1.0, 1.0])), CapVerdict::Saturating);
        assert_eq!(cap_verdict(&rows(&[0.0, 0.1, 0.2, 0.3, 0.4])), CapVerdict::Inconclusive);
    }

    #[test]
    fn heat_probe_grows_with_cap() {
        let s = ProblemSpec::new(1.0, preset_p_heat(2.0, 1.0, 0.1).unwrap(), InitialDatum::zero()).unwrap();
        let study = cap_study(&s, 100, &[10.0, 20.0, 40.0, 80.0], (0.0, 0.1)).unwrap();
        assert_eq!(study.verdict, CapVerdict::Diverging);
        assert!(study.rows.iter().all(|r| r.monotone));
        assert!(cap_study(&s, 100, &[10.0, 10.0], (0.0, 0.1)).is_err());
    }
}
