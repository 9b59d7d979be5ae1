//! One-factor conditional response functions.
//!
//! Fixing every predictor but one in a fitted surface leaves a polynomial in
//! the remaining predictor, `Y(x_i | {x_j0}) = T0 + T1 x_i + T11 x_i^2 + ...`.
//! Its coefficients depend on where the other predictors are held, which is
//! the whole point once cross terms are present.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{CorrelationReport, QuartileSummary};
use crate::error::{Error, Result};
use crate::ols::{Assignment, FittedModel};

/// A univariate polynomial obtained by sectioning a fitted surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalResponse {
    pub target: String,
    pub fixed: Assignment,
    /// `poly[k]` multiplies `target^k`.
    pub poly: Vec<f64>,
}

impl ConditionalResponse {
    pub fn degree(&self) -> usize {
        self.poly.len() - 1
    }

    pub fn eval(&self, v: f64) -> f64 {
        self.poly.iter().rev().fold(0.0, |acc, c| acc * v + c)
    }

    /// `Y(at + 1) - Y(at)`.
    pub fn unit_effect(&self, at: f64) -> f64 {
        self.eval(at + 1.0) - self.eval(at)
    }

    /// Evenly spaced `(target, Y)` pairs from `lo` to `hi` inclusive.
    pub fn sweep(&self, lo: f64, hi: f64, steps: usize) -> Vec<(f64, f64)> {
        match steps {
            0 => Vec::new(),
            1 => vec![(lo, self.eval(lo))],
            _ => (0..steps)
                .map(|i| {
                    let v = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
                    (v, self.eval(v))
                })
                .collect(),
        }
    }
}

fn check_assignment(m: &FittedModel, target: &str, fixed: &Assignment) -> Result<()> {
    let predictors = m.spec.predictors();
    if !predictors.iter().any(|p| p == target) {
        return Err(Error::Argument(format!("target '{target}' does not appear in the model")));
    }
    for p in predictors.iter().filter(|p| *p != target) {
        if !fixed.contains_key(p) {
            return Err(Error::MissingPredictor(p.clone()));
        }
    }
    for key in fixed.keys() {
        if key == target || !predictors.contains(key) {
            return Err(Error::SuperfluousPredictor(key.clone()));
        }
    }
    Ok(())
}

/// Sections the model at `fixed`, collecting terms by powers of `target`.
pub fn derive(m: &FittedModel, target: &str, fixed: &Assignment) -> Result<ConditionalResponse> {
    check_assignment(m, target, fixed)?;
    let degree = m.spec.terms().iter().map(|t| t.power_of(target)).max().unwrap_or(0) as usize;
    let mut poly = vec![0.0; degree + 1];
    poly[0] = m.intercept();
    for (term, b) in m.spec.terms().iter().zip(m.term_coefs()) {
        let mut weight = *b;
        let mut power = 0;
        for (name, k) in term.factors() {
            if name == target {
                power = *k as usize;
            } else {
                weight *= fixed[name].powi(*k as i32);
            }
        }
        poly[power] += weight;
    }
    Ok(ConditionalResponse { target: target.to_string(), fixed: fixed.clone(), poly })
}

/// Change in the response when `target` moves from `at` to `at + 1`.
pub fn unit_effect(m: &FittedModel, target: &str, fixed: &Assignment, at: f64) -> Result<f64> {
    Ok(derive(m, target, fixed)?.unit_effect(at))
}

/// Named coefficients of a conditional response of degree at most two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TCoefficients {
    pub t0: f64,
    pub t_linear: f64,
    pub t_quad: f64,
}

pub fn t_coefficients(m: &FittedModel, target: &str, fixed: &Assignment) -> Result<TCoefficients> {
    let c = derive(m, target, fixed)?;
    if c.degree() > 2 {
        return Err(Error::Scope(format!(
            "model is of degree {} in '{target}'; use the full conditional polynomial",
            c.degree()
        )));
    }
    let at = |k: usize| c.poly.get(k).copied().unwrap_or(0.0);
    Ok(TCoefficients { t0: at(0), t_linear: at(1), t_quad: at(2) })
}

/// Summary statistic used as a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Min,
    Q25,
    Mean,
    Q75,
    Max,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Self::Min),
            "q25" => Ok(Self::Q25),
            "mean" => Ok(Self::Mean),
            "q75" => Ok(Self::Q75),
            "max" => Ok(Self::Max),
            other => Err(Error::Argument(format!("unknown preset '{other}'"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Min => "min",
            Self::Q25 => "q25",
            Self::Mean => "mean",
            Self::Q75 => "q75",
            Self::Max => "max",
        })
    }
}

/// Either a number or a per-column summary to be looked up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FixedValue {
    Value(f64),
    Preset(Preset),
}

impl FromStr for FixedValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Self::Value(v)),
            _ => s.parse().map(Self::Preset),
        }
    }
}

/// Turns presets into numbers using the per-column summaries.
pub fn resolve_fixed(fixed: &BTreeMap<String, FixedValue>, summary: Option<&QuartileSummary>) -> Result<Assignment> {
    fixed
        .iter()
        .map(|(name, v)| {
            let value = match v {
                FixedValue::Value(x) => *x,
                FixedValue::Preset(p) => {
                    let s = summary
                        .and_then(|s| s.get(name))
                        .ok_or_else(|| Error::Argument(format!("cannot resolve preset '{p}' for '{name}'")))?;
                    match p {
                        Preset::Min => s.min,
                        Preset::Q25 => s.q25,
                        Preset::Mean => s.mean,
                        Preset::Q75 => s.q75,
                        Preset::Max => s.max,
                    }
                }
            };
            Ok((name.clone(), value))
        })
        .collect()
}

/// A fixed predictor strongly correlated with the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caution {
    pub predictor: String,
    pub r: f64,
}

/// Fixed predictors whose |r| with the target exceeds `threshold`. Holding
/// such a predictor still while the target moves may leave the observed
/// region.
pub fn correlation_cautions(
    target: &str,
    fixed: &Assignment,
    corr: &CorrelationReport,
    threshold: f64,
) -> Vec<Caution> {
    fixed
        .keys()
        .filter_map(|name| {
            let r = corr.get(target, name)?;
            (r.abs() > threshold).then(|| Caution { predictor: name.clone(), r })
        })
        .collect()
}
