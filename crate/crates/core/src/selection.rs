//! Model search: exhaustive best subsets and backward elimination.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{pearson, Dataset};
use crate::error::{Error, Result};
use crate::ols::{fit, FittedModel};
use crate::terms::{check_hierarchy, ModelSpec, Term};
use crate::{DEFAULT_ALPHA, DEFAULT_CORR_THRESHOLD};

/// Exhaustive searches larger than this are refused.
pub const MAX_CANDIDATES: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Advisory {
    /// Term count `k` is not below `n / 10`.
    TooManyTerms {
        k: usize,
        n: usize,
    },
    CorrelatedPredictors {
        a: String,
        b: String,
        r: f64,
    },
    /// Predictors used in higher-order terms without their own linear term.
    Hierarchy {
        missing: Vec<String>,
    },
}

pub fn advisories(d: &Dataset, spec: &ModelSpec) -> Vec<Advisory> {
    advisories_with(d, spec, DEFAULT_CORR_THRESHOLD)
}

pub fn advisories_with(d: &Dataset, spec: &ModelSpec, corr_threshold: f64) -> Vec<Advisory> {
    let mut out = Vec::new();
    let (k, n) = (spec.terms().len(), d.n());
    if k * 10 >= n {
        out.push(Advisory::TooManyTerms { k, n });
    }
    let predictors = spec.predictors();
    for (i, a) in predictors.iter().enumerate() {
        for b in &predictors[i + 1..] {
            let (Ok(xa), Ok(xb)) = (d.column(a), d.column(b)) else { continue };
            if let Some(r) = pearson(xa, xb).filter(|r| r.abs() > corr_threshold) {
                out.push(Advisory::CorrelatedPredictors { a: a.clone(), b: b.clone(), r });
            }
        }
    }
    let missing = check_hierarchy(spec);
    if !missing.is_empty() {
        out.push(Advisory::Hierarchy { missing });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub spec: ModelSpec,
    pub model: FittedModel,
    pub r2: f64,
    pub r2_adj: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub terms: Vec<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Sorted by R^2 descending, then fewer terms, then term order.
    pub ranked: Vec<Candidate>,
    pub skipped: Vec<Skipped>,
    /// Advisories for the top-ranked model.
    pub warnings: Vec<Advisory>,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else { break };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Fits every `size`-term subset of `pool` (each with an intercept) and ranks
/// them by R^2.
pub fn best_subset(d: &Dataset, response: &str, pool: &[Term], size: usize) -> Result<SearchResult> {
    if pool.is_empty() || size == 0 || size > pool.len() {
        return Err(Error::Argument(format!("subset size {size} must be between 1 and the pool size {}", pool.len())));
    }
    let mut pool = pool.to_vec();
    pool.sort();
    pool.dedup();
    if size > pool.len() {
        return Err(Error::Argument("pool holds duplicate terms".into()));
    }
    let count = binomial(pool.len(), size);
    if count > MAX_CANDIDATES {
        return Err(Error::SearchTooLarge(count));
    }

    let outcomes: Vec<std::result::Result<Candidate, Skipped>> = combinations(pool.len(), size)
        .into_par_iter()
        .map(|idx| {
            let terms: Vec<Term> = idx.iter().map(|&i| pool[i].clone()).collect();
            let labels = terms.iter().map(Term::to_string).collect();
            let spec =
                ModelSpec::new(response, true, terms).map_err(|e| Skipped { terms: labels, reason: e.to_string() })?;
            match fit(d, &spec) {
                Ok(model) => {
                    let s = model.summary.as_ref().expect("fitted to data");
                    Ok(Candidate { r2: s.r2, r2_adj: s.r2_adj, spec, model })
                }
                Err(e) => {
                    Err(Skipped { terms: spec.terms().iter().map(Term::to_string).collect(), reason: e.to_string() })
                }
            }
        })
        .collect();

    let mut ranked = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(c) => ranked.push(c),
            Err(s) => skipped.push(s),
        }
    }
    if ranked.is_empty() {
        return Err(Error::NoModel);
    }
    ranked.sort_by(|a, b| {
        b.r2.total_cmp(&a.r2)
            .then_with(|| a.spec.terms().len().cmp(&b.spec.terms().len()))
            .then_with(|| a.spec.terms().cmp(b.spec.terms()))
    });
    let warnings = advisories(d, &ranked[0].spec);
    Ok(SearchResult { ranked, skipped, warnings })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepwiseOptions {
    pub alpha: f64,
    pub protected: Vec<Term>,
    /// Keep linear terms while a higher-order term still uses their predictor.
    pub enforce_hierarchy: bool,
}

impl Default for StepwiseOptions {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, protected: Vec::new(), enforce_hierarchy: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub removed: Term,
    pub p_value: f64,
    /// Refitted model after the removal.
    pub model: FittedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseResult {
    pub start: FittedModel,
    pub steps: Vec<Step>,
    pub warnings: Vec<Advisory>,
}

impl StepwiseResult {
    pub fn final_model(&self) -> &FittedModel {
        self.steps.last().map_or(&self.start, |s| &s.model)
    }
}

/// Terms that may be dropped from `spec` under `options`.
pub fn removable_terms<'a>(spec: &'a ModelSpec, options: &StepwiseOptions) -> Vec<&'a Term> {
    if !spec.intercept && spec.terms().len() <= 1 {
        return Vec::new();
    }
    spec.terms()
        .iter()
        .filter(|t| !options.protected.contains(t))
        .filter(|t| {
            !options.enforce_hierarchy
                || t.as_linear().is_none_or(|name| !spec.terms().iter().any(|o| o.degree() >= 2 && o.contains(name)))
        })
        .collect()
}

/// Repeatedly drops the removable term with the largest p-value above
/// `alpha`, refitting after every removal.
pub fn backward_stepwise(d: &Dataset, start: &ModelSpec, options: &StepwiseOptions) -> Result<StepwiseResult> {
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 1), got {}", options.alpha)));
    }
    let first = fit(d, start)?;
    let mut steps: Vec<Step> = Vec::new();
    loop {
        let current = steps.last().map_or(&first, |s| &s.model);
        let Some(inference) = &current.inference else { break };
        let worst = removable_terms(&current.spec, options)
            .into_iter()
            .map(|t| (t, inference.p[current.spec.coef_index(t).unwrap()]))
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(a.0)));
        let Some((term, p)) = worst else { break };
        if p <= options.alpha {
            break;
        }
        let term = term.clone();
        let model = fit(d, &current.spec.without(&term))?;
        steps.push(Step { removed: term, p_value: p, model });
    }
    let warnings = advisories(d, &steps.last().map_or(&first, |s| &s.model).spec);
    Ok(StepwiseResult { start: first, steps, warnings })
}
