//! JSON report documents (schema `condreg/1`) and TSV plot data.
//!
//! Rendering is deterministic: object keys are sorted, every float is rounded
//! to 12 significant digits and non-finite values become `null`.

use std::collections::BTreeMap;

use condreg_core::conditional::{Caution, TCoefficients};
use condreg_core::dataset::FiveNumber;
use condreg_core::relations::Residualized;
use condreg_core::selection::Advisory;
use condreg_core::{
    ActionClass, BridgeReport, ColumnStats, ConfidenceEllipse, CorrelationReport, Finding, FittedModel, PointClass,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::formula;

pub const SCHEMA: &str = "condreg/1";
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRow {
    pub term: String,
    pub coef: f64,
    pub se: Option<f64>,
    pub t: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitStats {
    pub n: usize,
    pub dof: usize,
    pub r2: f64,
    pub r2_adj: Option<f64>,
    pub rss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefSource {
    /// Estimated from data.
    Fitted,
    /// Supplied on the command line.
    Supplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub formula: String,
    pub source: CoefSource,
    pub table: Vec<ModelRow>,
    pub fit: Option<FitStats>,
}

impl ModelSection {
    pub fn from_model(m: &FittedModel, source: CoefSource) -> Self {
        let inf = m.inference.as_ref();
        let table = m
            .spec
            .labels()
            .into_iter()
            .enumerate()
            .map(|(i, term)| ModelRow {
                term,
                coef: m.coef[i],
                se: inf.map(|x| x.se[i]),
                t: inf.map(|x| x.t[i]),
                p: inf.map(|x| x.p[i]),
            })
            .collect();
        let fit = m.summary.as_ref().map(|s| FitStats { n: s.n, dof: s.dof, r2: s.r2, r2_adj: s.r2_adj, rss: s.rss });
        Self { formula: formula::print(&m.spec), source, table, fit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalSection {
    pub target: String,
    pub fixed: BTreeMap<String, f64>,
    /// `poly[k]` multiplies `target^k`.
    pub poly: Vec<f64>,
    /// Present when the section is at most quadratic.
    pub t: Option<TCoefficients>,
    pub sweep: Vec<[f64; 2]>,
    pub cautions: Vec<Caution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectSection {
    pub target: String,
    pub fixed: BTreeMap<String, f64>,
    pub at: f64,
    /// `Y(at + 1) - Y(at)`.
    pub delta: f64,
    /// Whether the effect depends on `at` or on the fixed values.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSection {
    pub report: BridgeReport,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualizeSection {
    pub residualized: Residualized,
    pub response: Option<String>,
    /// Slope of the response on the residualized target.
    pub response_slope: Option<f64>,
    /// Coefficient of the target in the full multiple regression.
    pub mlr_coef: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceStep {
    pub removed: String,
    pub p: f64,
    pub terms: usize,
    pub r2: Option<f64>,
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepwiseSection {
    pub alpha: f64,
    pub start: String,
    pub trace: Vec<TraceStep>,
    pub final_formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankedModel {
    pub formula: String,
    pub r2: f64,
    pub r2_adj: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetSection {
    pub size: usize,
    pub evaluated: usize,
    pub ranked: Vec<RankedModel>,
    pub skipped: Vec<condreg_core::selection::Skipped>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifiedPoint {
    pub x: f64,
    pub y: f64,
    pub distance2: f64,
    pub class: PointClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseSection {
    pub ellipse: ConfidenceEllipse,
    pub eigenvalues: [f64; 2],
    pub major_axis: [f64; 2],
    pub eccentricity: f64,
    pub points: Vec<ClassifiedPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSection {
    pub factors: [String; 2],
    pub alpha: f64,
    pub result: ActionClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSummary {
    pub name: String,
    pub stats: ColumnStats,
    pub quartiles: FiveNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummarySection {
    pub n: usize,
    pub dropped: usize,
    pub columns: Vec<ColumnSummary>,
}

/// Top-level document. Only the sections a command produces are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditional: Option<ConditionalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect: Option<EffectSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge: Option<BridgeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residualize: Option<ResidualizeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepwise: Option<StepwiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<SubsetSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ellipse: Option<EllipseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<SummarySection>,
    #[serde(default)]
    pub advisories: Vec<Advisory>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            schema: SCHEMA.into(),
            command: command.into(),
            model: None,
            conditional: None,
            effect: None,
            bridge: None,
            residualize: None,
            stepwise: None,
            subset: None,
            ellipse: None,
            action: None,
            correlation: None,
            summary: None,
            advisories: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report is serializable");
        round_numbers(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("value is serializable");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.schema != SCHEMA {
            return Err(serde::de::Error::custom(format!("unsupported schema '{}'", r.schema)));
        }
        Ok(r)
    }
}

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            *v = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Tab-separated columns under `#` comment lines.
pub fn plot_tsv(comments: &[String], header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&header.join("\t"));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| round_sig(*v).to_string()).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}
