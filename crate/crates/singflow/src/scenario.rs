//! Scenario files and the inline `k=v` / initial-datum mini-languages.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barriers::InequalitySide;
use crate::model::{
    preset_curvature, preset_p_heat, preset_power, psi_unchecked, BoundaryRate, DatumClass, DiffusionWeight,
    InitialDatum, ModelError, Nonlinearity, ProblemSpec,
};
use crate::solver::CapVerdict;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("parameter list: {0}")]
    Params(String),
    #[error("initial datum: {0}")]
    Datum(String),
    #[error("preset {preset}: {message}")]
    Preset { preset: String, message: String },
    #[error("missing field `{0}` for this experiment")]
    Missing(&'static str),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Classify,
    Wave,
    Barrier,
    Solve,
    Capstudy,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `f(s) = |s|^(b2-1) s`, `g = (1+s^2)^((1-3 b2)/(2 b2))`; params `beta2`.
    Curvature,
    /// Regularized p-Laplacian; params `p`, `beta1`, `eps`.
    PHeat,
    /// Signed power `f`, `g = (1+s^2)^(-alpha/2)`; params `alpha`, `beta`.
    Power,
}

impl Preset {
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Self::Curvature => &["beta2"],
            Self::PHeat => &["p", "beta1", "eps"],
            Self::Power => &["alpha", "beta"],
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Curvature => "curvature",
            Self::PHeat => "p_heat",
            Self::Power => "power",
        }
    }

    /// Builds `(f, g)`, requiring exactly the keys of this preset.
    pub fn build(self, params: &BTreeMap<String, f64>) -> Result<(Nonlinearity, DiffusionWeight), ScenarioError> {
        let fail = |message: String| ScenarioError::Preset { preset: self.label().into(), message };
        if let Some(k) = params.keys().find(|k| !self.keys().contains(&k.as_str())) {
            return Err(fail(format!("unknown parameter `{k}`, expected {:?}", self.keys())));
        }
        let get = |k: &str| params.get(k).copied().ok_or_else(|| fail(format!("missing parameter `{k}`")));
        let pair = match self {
            Self::Curvature => preset_curvature(get("beta2")?),
            Self::PHeat => preset_p_heat(get("p")?, get("beta1")?, get("eps")?),
            Self::Power => preset_power(get("alpha")?, get("beta")?),
        };
        pair.map_err(|e| fail(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierFamily {
    #[serde(alias = "vL", alias = "vl")]
    SubVl,
    #[serde(alias = "uk")]
    SubUk,
    #[serde(alias = "super")]
    SuperFamily,
    #[serde(alias = "h")]
    HTail,
    TranslateWave,
}

impl BarrierFamily {
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Self::SubVl => &["L"],
            Self::SubUk => &["k"],
            Self::SuperFamily => &["L0", "nu"],
            Self::HTail => &["gamma_plus", "gamma_minus", "d_plus", "d_minus", "b0"],
            Self::TranslateWave => &[],
        }
    }

    /// Inequality certified when the scenario names none.
    pub fn default_side(self) -> Option<InequalitySide> {
        match self {
            Self::SubVl | Self::SubUk | Self::TranslateWave => Some(InequalitySide::Sub),
            Self::SuperFamily => Some(InequalitySide::SuperStrict(1.0)),
            Self::HTail => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub family: BarrierFamily,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// `sub`, `super`, `sub_strict:<delta>` or `super_strict:<delta>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
}

impl BarrierSpec {
    pub fn side(&self) -> Result<InequalitySide, ScenarioError> {
        match &self.side {
            Some(s) => parse_side(s),
            None => self
                .family
                .default_side()
                .ok_or_else(|| ScenarioError::Invalid(format!("{:?} needs an explicit side", self.family))),
        }
    }

    pub fn param(&self, key: &'static str) -> Result<f64, ScenarioError> {
        if let Some(k) = self.params.keys().find(|k| !self.family.keys().contains(&k.as_str())) {
            return Err(ScenarioError::Invalid(format!("unknown barrier parameter `{k}`")));
        }
        self.params.get(key).copied().ok_or(ScenarioError::Missing(key))
    }
}

pub fn parse_side(s: &str) -> Result<InequalitySide, ScenarioError> {
    let (head, delta) = match s.split_once(':') {
        Some((h, d)) => (h.trim(), Some(parse_real(d)?)),
        None => (s.trim(), None),
    };
    match (head, delta) {
        ("sub", None) => Ok(InequalitySide::Sub),
        ("super", None) => Ok(InequalitySide::Super),
        ("sub_strict", Some(d)) if d >= 0.0 => Ok(InequalitySide::SubStrict(d)),
        ("super_strict", Some(d)) if d >= 0.0 => Ok(InequalitySide::SuperStrict(d)),
        _ => Err(ScenarioError::Invalid(format!("unrecognized side `{s}`"))),
    }
}

/// Everything a run needs; fields unused by the experiment are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "default_half_width")]
    pub b: f64,
    /// Inline datum such as `polynomial:1,0,2`; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<CapVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<BarrierSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_half_width() -> f64 {
    1.0
}

pub const DEFAULT_N_GRID: usize = 1 << 10;
pub const DEFAULT_SAMPLES: usize = 10_000;

impl Scenario {
    /// A scenario with defaults for everything but the name and experiment.
    pub fn new(name: impl Into<String>, experiment: Experiment) -> Self {
        Self {
            name: name.into(),
            experiment,
            preset: None,
            params: BTreeMap::new(),
            b: default_half_width(),
            u0: None,
            n: None,
            cap: None,
            caps: None,
            t_end: None,
            probe: None,
            expect: None,
            barrier: None,
            samples: None,
            n_grid: None,
            w0: None,
            output_dir: None,
        }
    }

    /// Parses a JSON document; syntax and schema errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let sc: Self = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        sc.validate()?;
        Ok(sc)
    }

    /// Checks cross-field requirements of the chosen experiment.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(ScenarioError::Invalid(format!("b must be positive and finite, got {}", self.b)));
        }
        if self.experiment == Experiment::Verify {
            return Ok(());
        }
        let preset = self.preset.ok_or(ScenarioError::Missing("preset"))?;
        preset.build(&self.params)?;
        if let Some(u0) = &self.u0 {
            DatumSpec::parse(u0)?;
        }
        match self.experiment {
            Experiment::Barrier => {
                let bs = self.barrier.as_ref().ok_or(ScenarioError::Missing("barrier"))?;
                bs.side()?;
                for key in bs.family.keys() {
                    bs.param(key)?;
                }
            }
            Experiment::Solve => {
                self.cap.ok_or(ScenarioError::Missing("cap"))?;
                self.t_end.ok_or(ScenarioError::Missing("t_end"))?;
            }
            Experiment::Capstudy => {
                self.caps.as_ref().ok_or(ScenarioError::Missing("caps"))?;
                self.probe.ok_or(ScenarioError::Missing("probe"))?;
            }
            _ => {}
        }
        Ok(())
    }

    /// The problem described by `preset`, `params`, `b` and `u0`.
    pub fn problem(&self) -> Result<ProblemSpec, ScenarioError> {
        let preset = self.preset.ok_or(ScenarioError::Missing("preset"))?;
        let pair = preset.build(&self.params)?;
        let base = ProblemSpec::new(self.b, pair, InitialDatum::zero())?;
        let datum = match &self.u0 {
            Some(s) => DatumSpec::parse(s)?.build(&base)?,
            None => InitialDatum::zero(),
        };
        Ok(base.with_datum(datum))
    }
}

/// Reads a snake_case tag through its serde name.
pub fn parse_tag<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, ScenarioError> {
    serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
        .map_err(|e| ScenarioError::Invalid(format!("`{s}`: {e}")))
}

fn parse_real(s: &str) -> Result<f64, ScenarioError> {
    let t = s.trim();
    let v: f64 = t.parse().map_err(|_| ScenarioError::Params(format!("`{t}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ScenarioError::Params(format!("`{t}` is not finite")))
    }
}

/// Parses `k=v,k=v` into a map. Keys are identifiers; values finite reals.
pub fn parse_params(s: &str) -> Result<BTreeMap<String, f64>, ScenarioError> {
    let mut out = BTreeMap::new();
    if s.trim().is_empty() {
        return Ok(out);
    }
    for item in s.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| ScenarioError::Params(format!("`{}` is not of the form key=value", item.trim())))?;
        let k = k.trim();
        let ident = k.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ident {
            return Err(ScenarioError::Params(format!("`{k}` is not a valid key")));
        }
        if out.insert(k.to_string(), parse_real(v)?).is_some() {
            return Err(ScenarioError::Params(format!("duplicate key `{k}`")));
        }
    }
    Ok(out)
}

/// Parses `"x,y"` into a pair of reals.
pub fn parse_pair(s: &str) -> Result<(f64, f64), ScenarioError> {
    let v = parse_list(s)?;
    match v.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(ScenarioError::Params(format!("expected two numbers, got `{s}`"))),
    }
}

/// Parses a comma-separated list of finite reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, ScenarioError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_real).collect()
}

/// Inline initial datum, `kind` or `kind:args`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DatumSpec {
    /// `constant:c`, bounded.
    Constant { value: f64 },
    /// `polynomial:a0,a1,...`, bounded.
    Polynomial { coeffs: Vec<f64> },
    /// `boundary_rate:gamma,D`: `D psi_gamma(b-x) + D psi_gamma(b+x)`, rate controlled.
    BoundaryRate { gamma: f64, d: f64 },
    /// `power:gamma,D`: `D (b-x)^-gamma + D (b+x)^-gamma`, unbounded with `gamma > 0`.
    Power { gamma: f64, d: f64 },
    /// `wave`: the traveling-wave profile of the problem, with `W(0) = 0`.
    Wave,
}

const MAX_POLYNOMIAL_DEGREE: usize = 32;

impl DatumSpec {
    pub fn parse(s: &str) -> Result<Self, ScenarioError> {
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let nums = |want: usize| -> Result<Vec<f64>, ScenarioError> {
            let v = parse_list(args.unwrap_or("")).map_err(|e| ScenarioError::Datum(e.to_string()))?;
            if v.len() == want {
                Ok(v)
            } else {
                Err(ScenarioError::Datum(format!("`{kind}` takes {want} numbers, got {}", v.len())))
            }
        };
        let out = match kind {
            "constant" => Self::Constant { value: nums(1)?[0] },
            "polynomial" => {
                let coeffs = parse_list(args.unwrap_or("")).map_err(|e| ScenarioError::Datum(e.to_string()))?;
                if coeffs.is_empty() || coeffs.len() > MAX_POLYNOMIAL_DEGREE + 1 {
                    return Err(ScenarioError::Datum(format!(
                        "polynomial needs 1 to {} coefficients",
                        MAX_POLYNOMIAL_DEGREE + 1
                    )));
                }
                Self::Polynomial { coeffs }
            }
            "boundary_rate" | "power" => {
                let v = nums(2)?;
                let (gamma, d) = (v[0], v[1]);
                let gamma_ok = if kind == "power" { gamma > 0.0 } else { gamma >= 0.0 };
                if !gamma_ok || !(d > 0.0) {
                    return Err(ScenarioError::Datum(format!("`{kind}` needs gamma in range and D > 0")));
                }
                if kind == "power" {
                    Self::Power { gamma, d }
                } else {
                    Self::BoundaryRate { gamma, d }
                }
            }
            "wave" if args.is_none() => Self::Wave,
            _ => return Err(ScenarioError::Datum(format!("unrecognized datum `{s}`"))),
        };
        Ok(out)
    }

    /// Concrete datum on `spec`'s interval.
    pub fn build(&self, spec: &ProblemSpec) -> Result<InitialDatum, ScenarioError> {
        let b = spec.half_width();
        let datum = match self.clone() {
            Self::Constant { value } => InitialDatum::new(DatumClass::Bounded, Arc::new(move |_| value)),
            Self::Polynomial { coeffs } => InitialDatum::new(
                DatumClass::Bounded,
                Arc::new(move |x| coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)),
            ),
            Self::BoundaryRate { gamma, d } => {
                let offset = d * psi_unchecked(gamma, 2.0 * b);
                let rate = BoundaryRate {
                    gamma_plus: gamma,
                    gamma_minus: gamma,
                    d_plus: d,
                    d_minus: d,
                    offset_plus: offset,
                    offset_minus: offset,
                };
                InitialDatum::new(
                    DatumClass::RateControlled(rate),
                    Arc::new(move |x| d * (psi_unchecked(gamma, b - x) + psi_unchecked(gamma, b + x))),
                )
            }
            Self::Power { gamma, d } => InitialDatum::new(
                DatumClass::Unbounded { gamma },
                Arc::new(move |x| d * ((b - x).powf(-gamma) + (b + x).powf(-gamma))),
            ),
            Self::Wave => {
                let wave = crate::wave::compute_wave(spec, DEFAULT_N_GRID, 0.0)
                    .map_err(|e| ScenarioError::Datum(e.to_string()))?;
                let class = match (wave.rate_plus, wave.rate_minus) {
                    (Some(p), Some(m)) => DatumClass::RateControlled(BoundaryRate {
                        gamma_plus: p.gamma,
                        gamma_minus: m.gamma,
                        d_plus: p.d,
                        d_minus: m.d,
                        offset_plus: p.offset,
                        offset_minus: m.offset,
                    }),
                    _ => DatumClass::Bounded,
                };
                InitialDatum::new(class, Arc::new(move |x| wave.value(x)))
            }
        };
        Ok(datum)
    }
}
