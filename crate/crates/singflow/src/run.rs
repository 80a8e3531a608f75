//! Executes a scenario and writes its data files, report and manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::barriers::{
    h_tail, sub_uk, sub_vl, super_family, translate_wave, verify_inequality, BarrierError, BarrierFunction,
    SmoothProfile, TailParams, SAMPLE_SEED,
};
use crate::model::ModelError;
use crate::regime::{classify, classify_wave, RegimeError};
use crate::scenario::{BarrierFamily, Experiment, Scenario, ScenarioError, DEFAULT_N_GRID, DEFAULT_SAMPLES};
use crate::solver::{cap_study, solve, SolverError};
use crate::suite::run_suite;
use crate::wave::{compute_wave, WaveError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Regime(#[from] RegimeError),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A CSV file: header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file: &str, header: &[&str]) -> Self {
        Self { file: file.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }
}

/// Shortest round-trip decimal form, so files are reproducible bit for bit.
fn num(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub pass: bool,
    pub report: Value,
    pub tables: Vec<Table>,
    pub constants: BTreeMap<String, f64>,
    pub seeds: BTreeMap<String, u64>,
}

impl RunOutput {
    fn new(pass: bool, report: Value) -> Self {
        Self { pass, report, tables: Vec::new(), constants: BTreeMap::new(), seeds: BTreeMap::new() }
    }
}

/// Runs `sc` in memory.
pub fn execute(sc: &Scenario) -> Result<RunOutput, RunError> {
    sc.validate()?;
    match sc.experiment {
        Experiment::Classify => run_classify(sc),
        Experiment::Wave => run_wave(sc),
        Experiment::Barrier => run_barrier(sc),
        Experiment::Solve => run_solve(sc),
        Experiment::Capstudy => run_capstudy(sc),
        Experiment::Verify => run_verify(),
    }
}

fn run_classify(sc: &Scenario) -> Result<RunOutput, RunError> {
    let spec = sc.problem()?;
    let v = classify(&spec)?;
    let wave = classify_wave(&spec);
    let mut table = Table::new("classify.csv", &["key", "value"]);
    let verdict = serde_json::to_value(v.verdict)?;
    let wave_verdict = serde_json::to_value(wave)?;
    let class = serde_json::to_value(spec.u0.class())?;
    for (k, val) in [
        ("alpha", num(spec.alpha())),
        ("beta", spec.beta().map_or_else(|| "none".into(), num)),
        ("verdict", verdict.as_str().unwrap_or_default().to_string()),
        ("basis", v.basis.clone()),
        ("wave", wave_verdict.as_str().unwrap_or_default().to_string()),
    ] {
        table.push([k.to_string(), val]);
    }
    let report = json!({
        "alpha": spec.alpha(),
        "beta": spec.beta(),
        "datum": class,
        "verdict": verdict,
        "basis": v.basis,
        "notes": v.notes,
        "wave": wave_verdict,
    });
    let mut out = RunOutput::new(true, report);
    out.tables.push(table);
    Ok(out)
}

/// Largest wave residual accepted as a pass.
pub const WAVE_RESIDUAL_TOL: f64 = 1e-6;

fn run_wave(sc: &Scenario) -> Result<RunOutput, RunError> {
    let spec = sc.problem()?;
    let w = compute_wave(&spec, sc.n_grid.unwrap_or(DEFAULT_N_GRID), sc.w0.unwrap_or(0.0))?;
    let mut table = Table::new("wave.csv", &["x", "dist", "side", "w", "wx", "residual"]);
    for n in &w.nodes {
        let side = serde_json::to_value(n.side)?;
        table.push([num(n.x), num(n.dist), side.as_str().unwrap_or_default().into(), num(n.w), num(n.wx), num(n.residual)]);
    }
    let max_residual = w.max_residual();
    let report = json!({
        "c": w.c,
        "speed_preimage": w.speed_preimage,
        "g_total": w.g_total,
        "w0": w.w0,
        "nodes": w.nodes.len(),
        "max_residual": max_residual,
        "verdict": w.verdict,
        "rate_plus": w.rate_plus,
        "rate_minus": w.rate_minus,
    });
    let mut out = RunOutput::new(max_residual <= WAVE_RESIDUAL_TOL, report);
    out.constants.insert("c".into(), w.c);
    out.constants.insert("g_total".into(), w.g_total);
    out.tables.push(table);
    Ok(out)
}

fn build_barrier(sc: &Scenario) -> Result<BarrierFunction, RunError> {
    let spec = sc.problem()?;
    let bs = sc.barrier.as_ref().ok_or(ScenarioError::Missing("barrier"))?;
    let bf = match bs.family {
        BarrierFamily::SubVl => sub_vl(&spec, bs.param("L")?)?,
        BarrierFamily::SubUk => sub_uk(&spec, bs.param("k")?)?,
        BarrierFamily::SuperFamily => super_family(&spec, &SmoothProfile::zero(), bs.param("L0")?, bs.param("nu")?)?,
        BarrierFamily::HTail => h_tail(
            spec.half_width(),
            TailParams {
                gamma_plus: bs.param("gamma_plus")?,
                gamma_minus: bs.param("gamma_minus")?,
                d_plus: bs.param("d_plus")?,
                d_minus: bs.param("d_minus")?,
            },
            bs.param("b0")?,
        )?,
        BarrierFamily::TranslateWave => {
            translate_wave(&compute_wave(&spec, sc.n_grid.unwrap_or(DEFAULT_N_GRID), sc.w0.unwrap_or(0.0))?)
        }
    };
    Ok(bf)
}

fn run_barrier(sc: &Scenario) -> Result<RunOutput, RunError> {
    let spec = sc.problem()?;
    let bf = build_barrier(sc)?;
    let side = sc.barrier.as_ref().ok_or(ScenarioError::Missing("barrier"))?.side()?;
    let rep = verify_inequality(&bf, &spec, side, sc.samples.unwrap_or(DEFAULT_SAMPLES))?;
    let mut kinks = Table::new("kinks.csv", &["t", "x", "kind", "left_slope", "right_slope", "pass"]);
    for k in &rep.kink_checks {
        let kind = serde_json::to_value(k.kink.kind)?;
        kinks.push([
            num(k.t),
            num(k.kink.x),
            kind.as_str().unwrap_or_default().into(),
            num(k.kink.left_slope),
            num(k.kink.right_slope),
            k.pass.to_string(),
        ]);
    }
    let mut profile = Table::new("profile.csv", &["t", "x", "value"]);
    let (b, window) = (bf.half_width(), bf.sampling_window());
    for j in 0..5 {
        let t = window * j as f64 / 5.0;
        for i in 1..200 {
            let x = -b + 2.0 * b * i as f64 / 200.0;
            profile.push([num(t), num(x), num(bf.eval(x, t)?)]);
        }
    }
    let report = json!({
        "family": rep.family,
        "side": rep.side,
        "samples_requested": rep.samples_requested,
        "evaluated": rep.evaluated,
        "unrepresentable": rep.unrepresentable,
        "violations": rep.violations,
        "worst_residual": rep.worst_residual,
        "worst_normalized": rep.worst_normalized,
        "worst_point": rep.worst_point,
        "kink_checks": rep.kink_checks.len(),
        "kink_failures": rep.kink_checks.iter().filter(|k| !k.pass).count(),
        "valid_until": bf.valid_until(),
        "pass": rep.pass,
    });
    let mut out = RunOutput::new(rep.pass, report);
    out.constants = rep.constants.clone();
    out.seeds.insert("barrier_samples".into(), SAMPLE_SEED);
    out.tables.push(kinks);
    out.tables.push(profile);
    Ok(out)
}

pub const DEFAULT_N: usize = 400;

fn run_solve(sc: &Scenario) -> Result<RunOutput, RunError> {
    let spec = sc.problem()?;
    let cap = sc.cap.ok_or(ScenarioError::Missing("cap"))?;
    let t_end = sc.t_end.ok_or(ScenarioError::Missing("t_end"))?;
    let n = sc.n.unwrap_or(DEFAULT_N);
    let run = solve(&spec, n, cap, t_end)?;
    let u0 = spec.u0.values();
    let field = &run.final_field;
    let mut table = Table::new("solution.csv", &["x", "u0", "u"]);
    for i in 0..field.n {
        let x = field.x(i);
        table.push([num(x), num(u0(x).min(cap)), num(field.values[i])]);
    }
    let report = json!({
        "n": n,
        "cap": cap,
        "t_end": t_end,
        "final_time": field.time,
        "steps": run.dt_history,
        "comparison_violations": run.comparison_violations,
        "diverged": run.diverged,
        "blowup_time": run.blowup_time,
        "rate_fit": run.rate_fit,
    });
    let mut out = RunOutput::new(run.comparison_violations == 0, report);
    out.tables.push(table);
    Ok(out)
}

fn run_capstudy(sc: &Scenario) -> Result<RunOutput, RunError> {
    let spec = sc.problem()?;
    let caps = sc.caps.as_ref().ok_or(ScenarioError::Missing("caps"))?;
    let probe = sc.probe.ok_or(ScenarioError::Missing("probe"))?;
    let study = cap_study(&spec, sc.n.unwrap_or(DEFAULT_N), caps, probe)?;
    let mut table = Table::new("capstudy.csv", &["cap", "probe_value", "difference", "monotone", "diverged", "steps"]);
    for r in &study.rows {
        table.push([
            num(r.cap),
            num(r.probe_value),
            r.difference.map_or_else(String::new, num),
            r.monotone.to_string(),
            r.diverged.to_string(),
            r.steps.to_string(),
        ]);
    }
    let monotone = study.rows.iter().all(|r| r.monotone);
    let pass = match sc.expect {
        Some(want) => study.verdict == want,
        None => monotone,
    };
    let report = json!({
        "probe": study.probe,
        "verdict": study.verdict,
        "expected": sc.expect,
        "monotone_in_cap": monotone,
        "rows": study.rows,
    });
    let mut out = RunOutput::new(pass, report);
    out.tables.push(table);
    Ok(out)
}

fn run_verify() -> Result<RunOutput, RunError> {
    let suite = run_suite();
    let mut table = Table::new("checks.csv", &["module", "name", "pass", "detail"]);
    for c in &suite.checks {
        table.push([c.module.clone(), c.name.clone(), c.pass.to_string(), c.detail.clone()]);
    }
    let mut out = RunOutput::new(suite.all_pass(), serde_json::to_value(&suite)?);
    out.tables.push(table);
    Ok(out)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a Scenario,
    pass: bool,
    constants: &'a BTreeMap<String, f64>,
    seeds: &'a BTreeMap<String, u64>,
    files: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Writes the tables, `report.json` and `manifest.json` into `dir`.
pub fn write_outputs(sc: &Scenario, out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for t in &out.tables {
        let path = dir.join(&t.file);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&t.header)?;
        for row in &t.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(io_err(&path))?;
        written.push(path);
    }
    let mut report = json!({
        "name": sc.name,
        "experiment": sc.experiment,
        "pass": out.pass,
        "result": out.report,
    });
    if let Some(v) = out.report.get("verdict") {
        report["verdict"] = v.clone();
    }
    let report_path = dir.join("report.json");
    fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n").map_err(io_err(&report_path))?;
    written.push(report_path);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: sc,
        pass: out.pass,
        constants: &out.constants,
        seeds: &out.seeds,
        files: written.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect(),
    };
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(io_err(&manifest_path))?;
    written.push(manifest_path);
    Ok(written)
}

/// Where outputs go: explicit directory, then the scenario's, then `out/<name>`.
pub fn output_dir(sc: &Scenario, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| sc.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&sc.name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Preset;

    fn heat_classify() -> Scenario {
        let mut sc = Scenario::new("heat", Experiment::Classify);
        sc.preset = Some(Preset::PHeat);
        sc.params = [("p", 2.0), ("beta1", 1.0), ("eps", 0.1)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        sc
    }

    #[test]
    fn classify_heat_is_not_exists() {
        let out = execute(&heat_classify()).unwrap();
        assert!(out.pass);
        assert_eq!(out.report["verdict"], "not_exists");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let sc = heat_classify();
        let out = execute(&sc).unwrap();
        let files = write_outputs(&sc, &out, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let csv = std::fs::read_to_string(dir.path().join("classify.csv")).unwrap();
        assert!(csv.starts_with("key,value\n"));
        assert!(csv.contains("verdict,not_exists"));
    }
}
