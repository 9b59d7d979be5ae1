//! How simple-regression slopes relate to multiple-regression coefficients.
//!
//! With two predictors the multiple-regression coefficients follow from the
//! simple slopes `a1`, `a2`, the inter-predictor slopes `c12` (x1 on x2) and
//! `c21` (x2 on x1), and their correlation `r`:
//!
//! ```text
//! b1 = (a1 - a2 c21) / (1 - r^2)
//! b2 = (a2 - a1 c12) / (1 - r^2)
//! ```
//!
//! Regressing the response on a predictor stripped of its linear dependence
//! on the others reproduces that predictor's multiple-regression coefficient.
//! The "adjusted effect" `b1 + sum_j b_j c_j1` of a predictor-linear model
//! collapses back to the simple slope `a1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{covariance, pearson, Dataset};
use crate::error::{Error, Result};
use crate::ols::fit;
use crate::terms::{ModelSpec, Term};
use crate::DEFAULT_CORR_THRESHOLD;

/// Slope of the simple regression of `y` on `x`.
pub fn slr_slope(y: &[f64], x: &[f64], x_name: &str) -> Result<f64> {
    let vx = covariance(x, x);
    if vx <= 0.0 {
        return Err(Error::Collinear { column: x_name.to_string() });
    }
    Ok(covariance(x, y) / vx)
}

/// Multiple-regression coefficients `(b1, b2)` from one-factor quantities.
pub fn reconstruct_two_factor(a1: f64, a2: f64, c12: f64, c21: f64, r: f64) -> Result<(f64, f64)> {
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return Err(Error::Collinear { column: "|r| = 1".into() });
    }
    Ok(((a1 - a2 * c21) / denom, (a2 - a1 * c12) / denom))
}

/// Two-predictor closed-form reconstruction next to the direct fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoFactorCheck {
    pub other: String,
    pub b_target: f64,
    pub b_other: f64,
    /// Largest relative gap between reconstruction and direct fit.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub target: String,
    /// Simple-regression slope of the response on the target.
    pub a: f64,
    /// Multiple-regression coefficient of the target.
    pub b: f64,
    /// Simple slopes of the response on every predictor.
    pub slr: BTreeMap<String, f64>,
    /// Multiple-regression coefficients of every predictor.
    pub mlr: BTreeMap<String, f64>,
    /// Slope of the target regressed on each other predictor.
    pub c_target_on: BTreeMap<String, f64>,
    /// Slope of each other predictor regressed on the target.
    pub c_on_target: BTreeMap<String, f64>,
    /// Pearson r between the target and each other predictor.
    pub r: BTreeMap<String, f64>,
    pub ac_sum: f64,
    pub sign_flip: bool,
    pub expectation_violation: Option<bool>,
    pub two_factor: Option<TwoFactorCheck>,
}

impl BridgeReport {
    /// Builds a report from known two-predictor summary constants instead of data.
    pub fn from_two_factor_constants(
        target: &str,
        other: &str,
        a_target: f64,
        a_other: f64,
        c_target_on_other: f64,
        c_other_on_target: f64,
        r: f64,
    ) -> Result<Self> {
        let (b_target, b_other) = reconstruct_two_factor(a_target, a_other, c_target_on_other, c_other_on_target, r)?;
        let one = |v: f64| BTreeMap::from([(other.to_string(), v)]);
        Ok(Self {
            target: target.to_string(),
            a: a_target,
            b: b_target,
            slr: BTreeMap::from([(target.to_string(), a_target), (other.to_string(), a_other)]),
            mlr: BTreeMap::from([(target.to_string(), b_target), (other.to_string(), b_other)]),
            c_target_on: one(c_target_on_other),
            c_on_target: one(c_other_on_target),
            r: one(r),
            ac_sum: b_target + b_other * c_other_on_target,
            sign_flip: a_target * b_target < 0.0,
            expectation_violation: None,
            two_factor: Some(TwoFactorCheck { other: other.to_string(), b_target, b_other, residual: 0.0 }),
        })
    }

    pub fn with_expected_sign(mut self, sign: Sign) -> Self {
        self.expectation_violation = Some(!sign.agrees(self.b));
        self
    }
}

fn check_target(predictors: &[&str], target: &str) -> Result<()> {
    if predictors.contains(&target) {
        Ok(())
    } else {
        Err(Error::Argument(format!("target '{target}' is not among the predictors")))
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn bridge(d: &Dataset, response: &str, predictors: &[&str], target: &str) -> Result<BridgeReport> {
    check_target(predictors, target)?;
    let y = d.column(response)?;
    let xt = d.column(target)?;

    let mut slr = BTreeMap::new();
    for p in predictors {
        slr.insert(p.to_string(), slr_slope(y, d.column(p)?, p)?);
    }
    let model = fit(d, &ModelSpec::linear(response, predictors)?)?;
    let mlr: BTreeMap<String, f64> = predictors
        .iter()
        .map(|p| (p.to_string(), model.coef_of(&Term::linear(p)).expect("linear term present")))
        .collect();

    let (mut c_target_on, mut c_on_target, mut r) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
    for other in predictors.iter().filter(|p| **p != target) {
        let xo = d.column(other)?;
        c_target_on.insert(other.to_string(), slr_slope(xt, xo, other)?);
        c_on_target.insert(other.to_string(), slr_slope(xo, xt, target)?);
        r.insert(other.to_string(), pearson(xt, xo).ok_or_else(|| Error::DegenerateColumn(other.to_string()))?);
    }

    let a = slr[target];
    let b = mlr[target];
    let ac_sum = b + c_on_target.iter().map(|(j, c)| mlr[j] * c).sum::<f64>();

    let two_factor = match predictors {
        [_, _] => {
            let other = predictors.iter().find(|p| **p != target).unwrap().to_string();
            let (b_target, b_other) =
                reconstruct_two_factor(a, slr[&other], c_target_on[&other], c_on_target[&other], r[&other])?;
            let residual = rel_gap(b_target, b).max(rel_gap(b_other, mlr[&other]));
            Some(TwoFactorCheck { other, b_target, b_other, residual })
        }
        _ => None,
    };

    Ok(BridgeReport {
        target: target.to_string(),
        a,
        b,
        slr,
        mlr,
        c_target_on,
        c_on_target,
        r,
        ac_sum,
        sign_flip: a * b < 0.0,
        expectation_violation: None,
        two_factor,
    })
}

/// A predictor with its linear dependence on co-predictors removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residualized {
    pub target: String,
    /// `target - sum_j c_j x_j`.
    pub values: Vec<f64>,
    /// Slopes from the regression of the target on all the others jointly.
    pub slopes: BTreeMap<String, f64>,
}

pub fn residualize(d: &Dataset, target: &str, others: &[&str]) -> Result<Residualized> {
    let xt = d.column(target)?;
    if others.is_empty() {
        return Ok(Residualized { target: target.to_string(), values: xt.to_vec(), slopes: BTreeMap::new() });
    }
    let aux = fit(d, &ModelSpec::linear(target, others)?)?;
    let mut values = xt.to_vec();
    let mut slopes = BTreeMap::new();
    for other in others {
        let c = aux.coef_of(&Term::linear(other)).expect("linear term present");
        for (v, x) in values.iter_mut().zip(d.column(other)?) {
            *v -= c * x;
        }
        slopes.insert(other.to_string(), c);
    }
    Ok(Residualized { target: target.to_string(), values, slopes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbbottCarroll {
    pub ac_sum: f64,
    pub a_target: f64,
    pub discrepancy: f64,
}

pub fn abbott_carroll(d: &Dataset, response: &str, predictors: &[&str], target: &str) -> Result<AbbottCarroll> {
    check_target(predictors, target)?;
    abbott_carroll_for(d, &ModelSpec::linear(response, predictors)?, target)
}

/// The adjusted-effect sum for an arbitrary model, summed over the linear
/// terms of the other predictors only. Higher-order terms are left out, so
/// the collapse to the simple slope is only guaranteed for predictor-linear
/// models.
pub fn abbott_carroll_for(d: &Dataset, spec: &ModelSpec, target: &str) -> Result<AbbottCarroll> {
    let target_term = Term::linear(target);
    if !spec.contains(&target_term) {
        return Err(Error::Argument(format!("model has no linear term for '{target}'")));
    }
    let model = fit(d, spec)?;
    let xt = d.column(target)?;
    let mut ac_sum = model.coef_of(&target_term).unwrap();
    for term in spec.terms() {
        match term.as_linear() {
            Some(name) if name != target => {
                let c = slr_slope(d.column(name)?, xt, target)?;
                ac_sum += model.coef_of(term).unwrap() * c;
            }
            _ => {}
        }
    }
    let a_target = slr_slope(d.column(&spec.response)?, xt, target)?;
    Ok(AbbottCarroll { ac_sum, a_target, discrepancy: (ac_sum - a_target).abs() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn agrees(self, v: f64) -> bool {
        match self {
            Sign::Positive => v > 0.0,
            Sign::Negative => v < 0.0,
        }
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "+1" | "1" | "positive" | "pos" => Ok(Sign::Positive),
            "-" | "-1" | "negative" | "neg" => Ok(Sign::Negative),
            other => Err(Error::Argument(format!("expected sign '+' or '-', got '{other}'"))),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    /// Simple slope and multiple-regression coefficient disagree in sign.
    SignFlip { predictor: String, slr: f64, mlr: f64 },
    /// The coefficient contradicts the declared direction of effect.
    ExpectationViolation { predictor: String, expected: Sign, mlr: f64 },
    /// A co-predictor correlates strongly enough to destabilise the fit.
    StrongCorrelation { predictor: String, with: String, r: f64 },
}

pub fn detect_paradox(report: &BridgeReport, expected_sign: Option<Sign>) -> Vec<Finding> {
    detect_paradox_with(report, expected_sign, DEFAULT_CORR_THRESHOLD)
}

pub fn detect_paradox_with(report: &BridgeReport, expected_sign: Option<Sign>, threshold: f64) -> Vec<Finding> {
    let mut findings = Vec::new();
    if report.sign_flip {
        findings.push(Finding::SignFlip { predictor: report.target.clone(), slr: report.a, mlr: report.b });
    }
    if let Some(sign) = expected_sign {
        if !sign.agrees(report.b) {
            findings.push(Finding::ExpectationViolation {
                predictor: report.target.clone(),
                expected: sign,
                mlr: report.b,
            });
        }
    }
    if let Some((with, r)) =
        report.r.iter().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).filter(|(_, r)| r.abs() > threshold)
    {
        findings.push(Finding::StrongCorrelation { predictor: report.target.clone(), with: with.clone(), r: *r });
    }
    findings
}
