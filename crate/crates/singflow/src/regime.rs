//! Existence / non-existence classification over the exponents of `f`, `g`
//! and the class of the initial datum.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DatumClass, ProblemSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegimeError {
    #[error("insufficient data: alpha = {alpha} <= 1 requires a declared growth exponent for f")]
    MissingGrowthExponent { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ExistsUnique,
    Exists,
    NotExists,
    #[serde(rename = "needs_B2")]
    NeedsUnboundedData,
    OutsideTheory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub verdict: Verdict,
    /// Which threshold rule fired.
    pub basis: String,
    pub notes: String,
}

/// Inputs the classifier depends on; nothing else about the problem matters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeInputs {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub class: DatumClass,
    pub bounded_below: bool,
}

/// Rate threshold `max{(2-alpha)/(alpha-1), 0}` for uniqueness when `alpha > 1`.
pub fn uniqueness_threshold(alpha: f64) -> f64 {
    ((2.0 - alpha) / (alpha - 1.0)).max(0.0)
}

fn unique_rates(class: DatumClass, alpha: f64) -> bool {
    match class {
        DatumClass::RateControlled(r) => {
            let th = uniqueness_threshold(alpha);
            r.gamma_plus >= th && r.gamma_minus >= th
        }
        _ => false,
    }
}

fn verdict(v: Verdict, basis: &str, notes: String) -> RegimeVerdict {
    RegimeVerdict { verdict: v, basis: basis.to_string(), notes }
}

/// Pure decision rule on the exponent data.
pub fn classify_inputs(inp: RegimeInputs) -> Result<RegimeVerdict, RegimeError> {
    let RegimeInputs { alpha, beta, class, bounded_below } = inp;
    let unbounded = !matches!(class, DatumClass::Bounded);
    if alpha > 2.0 {
        if !unbounded {
            return Ok(verdict(
                Verdict::NeedsUnboundedData,
                "alpha > 2",
                "existence is only established for data diverging at the boundary".into(),
            ));
        }
        let v = if unique_rates(class, alpha) { Verdict::ExistsUnique } else { Verdict::Exists };
        return Ok(verdict(v, "alpha > 2 with diverging data", format!("alpha = {alpha}")));
    }
    if alpha > 1.0 {
        let v = if unique_rates(class, alpha) { Verdict::ExistsUnique } else { Verdict::Exists };
        return Ok(verdict(
            v,
            "1 < alpha <= 2",
            format!("uniqueness rate threshold {}", uniqueness_threshold(alpha)),
        ));
    }
    let beta = beta.ok_or(RegimeError::MissingGrowthExponent { alpha })?;
    if alpha == 1.0 {
        return Ok(verdict(Verdict::Exists, "alpha = 1", format!("beta = {beta}")));
    }
    let critical = 1.0 / (1.0 - alpha);
    if beta >= critical {
        if bounded_below {
            return Ok(verdict(
                Verdict::NotExists,
                "alpha < 1 and beta >= 1/(1-alpha)",
                format!("beta = {beta}, critical growth {critical}; interior blows up instantly"),
            ));
        }
        return Ok(verdict(
            Verdict::OutsideTheory,
            "alpha < 1 and beta >= 1/(1-alpha)",
            "datum is not bounded below".into(),
        ));
    }
    Ok(verdict(
        Verdict::Exists,
        "alpha < 1 and beta < 1/(1-alpha)",
        format!("beta = {beta}, critical growth {critical}"),
    ))
}

/// Classifies the Dirichlet problem for `spec`.
pub fn classify(spec: &ProblemSpec) -> Result<RegimeVerdict, RegimeError> {
    classify_inputs(RegimeInputs {
        alpha: spec.alpha(),
        beta: spec.beta(),
        class: spec.u0.class(),
        bounded_below: spec.u0.bounded_below(spec.half_width()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveVerdict {
    ExistsBounded,
    ExistsUnbounded,
    NotExists,
}

/// Whether a traveling wave `W(x) + ct` exists and whether `W` is bounded.
pub fn classify_wave(spec: &ProblemSpec) -> WaveVerdict {
    classify_wave_alpha(spec.alpha())
}

pub fn classify_wave_alpha(alpha: f64) -> WaveVerdict {
    if alpha > 2.0 {
        WaveVerdict::ExistsBounded
    } else if alpha > 1.0 {
        WaveVerdict::ExistsUnbounded
    } else {
        WaveVerdict::NotExists
    }
}
