//! Term algebra and design-matrix expansion.
//!
//! A [`Term`] is a product of predictor powers such as `x1`, `x1:x2` or
//! `x1^2:x3`. A [`ModelSpec`] is a response name, an intercept flag and an
//! ordered list of distinct terms; fitted coefficients attach to the terms
//! positionally, intercept first.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Product of predictor powers, kept in canonical form: factors sorted by
/// predictor name, each predictor at most once, every power at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Term {
    factors: Vec<(String, u32)>,
}

impl Term {
    /// Builds a term, merging repeated predictors into powers
    /// (`x1 * x1` becomes `x1^2`).
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, u32)>) -> Result<Self> {
        let mut merged: BTreeMap<String, u32> = BTreeMap::new();
        for (name, power) in factors {
            let name = name.into();
            if name.is_empty() {
                return Err(Error::InvalidTerm("empty predictor name".into()));
            }
            if power == 0 {
                return Err(Error::InvalidTerm(format!("zero power on '{name}'")));
            }
            *merged.entry(name).or_default() += power;
        }
        if merged.is_empty() {
            return Err(Error::InvalidTerm("term has no factors".into()));
        }
        Ok(Self { factors: merged.into_iter().collect() })
    }

    pub fn linear(name: &str) -> Self {
        Self { factors: vec![(name.to_string(), 1)] }
    }

    pub fn power(name: &str, power: u32) -> Self {
        Self::new([(name, power)]).expect("power must be positive")
    }

    /// Product of distinct predictors, each to the first power.
    pub fn cross(names: &[&str]) -> Self {
        Self::new(names.iter().map(|n| (*n, 1))).expect("cross term needs factors")
    }

    pub fn factors(&self) -> &[(String, u32)] {
        &self.factors
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, p)| p).sum()
    }

    /// Power of `name` in this term, 0 if absent.
    pub fn power_of(&self, name: &str) -> u32 {
        self.factors.iter().find(|(n, _)| n == name).map_or(0, |(_, p)| *p)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.power_of(name) > 0
    }

    /// A single predictor to the first power.
    pub fn as_linear(&self) -> Option<&str> {
        match self.factors.as_slice() {
            [(n, 1)] => Some(n),
            _ => None,
        }
    }

    pub fn predictors(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|(n, _)| n.as_str())
    }

    /// Evaluates the term, looking predictor values up through `value_of`.
    pub fn eval(&self, mut value_of: impl FnMut(&str) -> Option<f64>) -> Result<f64> {
        self.factors.iter().try_fold(1.0, |acc, (n, p)| {
            let v = value_of(n).ok_or_else(|| Error::MissingPredictor(n.clone()))?;
            Ok(acc * v.powi(*p as i32))
        })
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.factors.cmp(&other.factors))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, power)) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            f.write_str(name)?;
            if *power > 1 {
                write!(f, "^{power}")?;
            }
        }
        Ok(())
    }
}

/// Label used for the intercept column.
pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub response: String,
    pub intercept: bool,
    terms: Vec<Term>,
}

impl ModelSpec {
    pub fn new(response: impl Into<String>, intercept: bool, terms: Vec<Term>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for t in &terms {
            if !seen.insert(t) {
                return Err(Error::DuplicateTerm(t.to_string()));
            }
        }
        Ok(Self { response: response.into(), intercept, terms })
    }

    /// `response ~ 1 + x_1 + ... + x_k`.
    pub fn linear(response: &str, predictors: &[&str]) -> Result<Self> {
        Self::new(response, true, predictors.iter().map(|p| Term::linear(p)).collect())
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Number of fitted coefficients, intercept included.
    pub fn n_params(&self) -> usize {
        self.terms.len() + usize::from(self.intercept)
    }

    /// Coefficient labels in fitted order.
    pub fn labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.n_params());
        if self.intercept {
            labels.push(INTERCEPT.to_string());
        }
        labels.extend(self.terms.iter().map(Term::to_string));
        labels
    }

    /// Distinct predictor names, sorted.
    pub fn predictors(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.terms.iter().flat_map(Term::predictors).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Position of `term` in the coefficient vector.
    pub fn coef_index(&self, term: &Term) -> Option<usize> {
        self.terms.iter().position(|t| t == term).map(|i| i + usize::from(self.intercept))
    }

    pub fn contains(&self, term: &Term) -> bool {
        self.terms.contains(term)
    }

    /// Copy with `term` appended.
    pub fn with_term(&self, term: Term) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.push(term);
        Self::new(self.response.clone(), self.intercept, terms)
    }

    /// Copy with `term` removed (no-op when absent).
    pub fn without(&self, term: &Term) -> Self {
        Self {
            response: self.response.clone(),
            intercept: self.intercept,
            terms: self.terms.iter().filter(|t| *t != term).cloned().collect(),
        }
    }

    /// Whether every term of `self` is also in `other`, with matching response
    /// and no intercept present only in `self`.
    pub fn is_nested_in(&self, other: &ModelSpec) -> bool {
        self.response == other.response
            && (!self.intercept || other.intercept)
            && self.terms.iter().all(|t| other.contains(t))
    }

    /// Errors on hierarchy violations when `strict`, otherwise returns them.
    pub fn validate_hierarchy(&self, strict: bool) -> Result<Vec<String>> {
        let violations = check_hierarchy(self);
        if strict && !violations.is_empty() {
            return Err(Error::Hierarchy(format!("missing linear terms for {}", violations.join(", "))));
        }
        Ok(violations)
    }
}

/// Predictors that appear in a higher-degree term but have no linear term of
/// their own, sorted by name.
pub fn check_hierarchy(spec: &ModelSpec) -> Vec<String> {
    let linear: BTreeSet<&str> = spec.terms.iter().filter_map(Term::as_linear).collect();
    let needed: BTreeSet<&str> = spec.terms.iter().filter(|t| t.degree() >= 2).flat_map(Term::predictors).collect();
    needed.difference(&linear).map(|s| s.to_string()).collect()
}

/// Intercept, all linear terms, all pairwise cross terms, all squares.
pub fn full_quadratic(response: &str, predictors: &[&str]) -> Result<ModelSpec> {
    if predictors.is_empty() {
        return Err(Error::Argument("full quadratic needs at least one predictor".into()));
    }
    let mut names: Vec<&str> = predictors.to_vec();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Argument(format!("duplicate predictor '{}'", w[0])));
    }
    let mut terms: Vec<Term> = names.iter().map(|n| Term::linear(n)).collect();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            terms.push(Term::cross(&[a, b]));
        }
    }
    terms.extend(names.iter().map(|n| Term::power(n, 2)));
    ModelSpec::new(response, true, terms)
}

/// Design matrix with its column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub matrix: DMatrix<f64>,
    pub labels: Vec<String>,
}

pub fn expand(d: &Dataset, spec: &ModelSpec) -> Result<Design> {
    let n = d.n();
    let p = spec.n_params();
    if p == 0 {
        return Err(Error::Argument("model has no columns".into()));
    }
    let mut columns: BTreeMap<&str, &[f64]> = BTreeMap::new();
    for name in spec.terms.iter().flat_map(Term::predictors) {
        columns.insert(name, d.column(name)?);
    }
    if p > n {
        return Err(Error::Underdetermined { params: p, n });
    }
    let offset = usize::from(spec.intercept);
    let matrix = DMatrix::from_fn(n, p, |row, col| {
        if col < offset {
            return 1.0;
        }
        spec.terms[col - offset]
            .factors()
            .iter()
            .map(|(name, power)| columns[name.as_str()][row].powi(*power as i32))
            .product()
    });
    Ok(Design { matrix, labels: spec.labels() })
}

/// Affine coding of raw doses onto [-1, +1].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CodedScale {
    ranges: BTreeMap<String, (f64, f64)>,
}

impl CodedScale {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_range(mut self, predictor: &str, raw_min: f64, raw_max: f64) -> Result<Self> {
        if raw_min.partial_cmp(&raw_max) != Some(std::cmp::Ordering::Less)
            || !raw_min.is_finite()
            || !raw_max.is_finite()
        {
            return Err(Error::Argument(format!(
                "coded range for '{predictor}' needs min < max, got [{raw_min}, {raw_max}]"
            )));
        }
        self.ranges.insert(predictor.to_string(), (raw_min, raw_max));
        Ok(self)
    }

    fn range(&self, predictor: &str) -> Result<(f64, f64)> {
        self.ranges.get(predictor).copied().ok_or_else(|| Error::UnknownColumn(predictor.to_string()))
    }

    pub fn code(&self, predictor: &str, raw: f64) -> Result<f64> {
        let (lo, hi) = self.range(predictor)?;
        Ok(2.0 * (raw - lo) / (hi - lo) - 1.0)
    }

    pub fn decode(&self, predictor: &str, coded: f64) -> Result<f64> {
        let (lo, hi) = self.range(predictor)?;
        Ok(lo + (coded + 1.0) * (hi - lo) / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(cols: Vec<(&str, Vec<f64>)>) -> Dataset {
        Dataset::new(cols).unwrap()
    }

    #[test]
    fn cross_term_row() {
        let d = ds(vec![("Y", vec![0.0; 4]), ("x1", vec![2.0, 1.0, 0.0, 5.0]), ("x2", vec![3.0, 1.0, 2.0, 4.0])]);
        let spec = ModelSpec::new("Y", true, vec![Term::linear("x1"), Term::linear("x2"), Term::cross(&["x1", "x2"])])
            .unwrap();
        let design = expand(&d, &spec).unwrap();
        assert_eq!(design.matrix.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 6.0]);
        assert_eq!(design.labels, vec!["(Intercept)", "x1", "x2", "x1:x2"]);
    }

    #[test]
    fn even_power_of_negative() {
        let d = ds(vec![("Y", vec![0.0, 1.0]), ("x1", vec![-1.0, 2.0])]);
        let spec = ModelSpec::new("Y", false, vec![Term::power("x1", 2)]).unwrap();
        let design = expand(&d, &spec).unwrap();
        assert_eq!(design.matrix[(0, 0)], 1.0);
    }

    #[test]
    fn unknown_predictor_and_underdetermined() {
        let d = ds(vec![("Y", vec![0.0, 1.0]), ("x1", vec![1.0, 2.0])]);
        let spec = ModelSpec::linear("Y", &["zz"]).unwrap();
        assert_eq!(expand(&d, &spec).unwrap_err(), Error::UnknownColumn("zz".into()));
        let spec = full_quadratic("Y", &["x1"]).unwrap();
        assert_eq!(expand(&d, &spec).unwrap_err(), Error::Underdetermined { params: 3, n: 2 });
    }

    #[test]
    fn quadratic_in_four_predictors_has_fourteen_terms() {
        let spec = full_quadratic("Y", &["x1", "x2", "x3", "x4"]).unwrap();
        assert_eq!(spec.terms().len(), 14);
        assert_eq!(spec.n_params(), 15);
    }

    #[test]
    fn quadratic_in_two_predictors() {
        let spec = full_quadratic("Y", &["x2", "x1"]).unwrap();
        let labels: Vec<String> = spec.terms().iter().map(Term::to_string).collect();
        assert_eq!(labels, vec!["x1", "x2", "x1:x2", "x1^2", "x2^2"]);
        let single = full_quadratic("Y", &["x1"]).unwrap();
        assert_eq!(single.terms(), &[Term::linear("x1"), Term::power("x1", 2)]);
        assert!(full_quadratic("Y", &["a", "a"]).is_err());
    }

    #[test]
    fn hierarchy_checks() {
        let ok = ModelSpec::new("Y", true, vec![Term::linear("x1"), Term::linear("x2"), Term::cross(&["x1", "x2"])])
            .unwrap();
        assert!(check_hierarchy(&ok).is_empty());

        let bare = ModelSpec::new("Y", true, vec![Term::cross(&["x1", "x2"])]).unwrap();
        assert_eq!(check_hierarchy(&bare), vec!["x1", "x2"]);

        let three = ModelSpec::new("Y", true, vec![Term::linear("x1"), Term::cross(&["x1", "x2", "x3"])]).unwrap();
        assert_eq!(check_hierarchy(&three), vec!["x2", "x3"]);
        assert!(three.validate_hierarchy(false).is_ok());
        assert!(matches!(three.validate_hierarchy(true), Err(Error::Hierarchy(_))));
    }

    #[test]
    fn canonical_term_equality() {
        assert_eq!(Term::cross(&["x2", "x1"]), Term::cross(&["x1", "x2"]));
        assert_eq!(Term::new([("x1", 1), ("x1", 1)]).unwrap(), Term::power("x1", 2));
        assert!(Term::new([("x1", 0)]).is_err());
        let dup = ModelSpec::new("Y", true, vec![Term::cross(&["a", "b"]), Term::cross(&["b", "a"])]);
        assert_eq!(dup.unwrap_err(), Error::DuplicateTerm("a:b".into()));
    }

    #[test]
    fn coded_doses() {
        let ld50 = 1.0;
        let scale = CodedScale::new().with_range("Pb", 0.0, 0.05 * ld50).unwrap();
        assert_eq!(scale.code("Pb", 0.0).unwrap(), -1.0);
        assert_eq!(scale.code("Pb", 0.025).unwrap(), 0.0);
        assert_eq!(scale.code("Pb", 0.05).unwrap(), 1.0);
        let back = scale.decode("Pb", scale.code("Pb", 0.037).unwrap()).unwrap();
        assert!((back - 0.037).abs() < 1e-12);
        assert!(scale.code("Cd", 0.0).is_err());
        assert!(CodedScale::new().with_range("Pb", 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn full_quadratic_term_count(k in 1usize..9) {
            let names: Vec<String> = (0..k).map(|i| format!("x{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let spec = full_quadratic("Y", &refs).unwrap();
            prop_assert_eq!(spec.terms().len(), k * (k + 3) / 2);
        }

        #[test]
        fn coding_round_trips(lo in -1e3f64..1e3, width in 1e-3f64..1e3, t in 0.0f64..=1.0) {
            let hi = lo + width;
            let scale = CodedScale::new().with_range("x", lo, hi).unwrap();
            let raw = lo + t * width;
            let back = scale.decode("x", scale.code("x", raw).unwrap()).unwrap();
            prop_assert!((back - raw).abs() <= 1e-12 * raw.abs().max(hi.abs()).max(1.0));
            let c = 2.0 * t - 1.0;
            let again = scale.code("x", scale.decode("x", c).unwrap()).unwrap();
            prop_assert!((again - c).abs() <= 1e-9);
        }

        #[test]
        fn expand_commutes_with_row_permutation(seed in 0u64..1000) {
            let n = 6;
            let vals = |k: u64| -> Vec<f64> { (0..n).map(|i| ((seed * 31 + k * 7 + i as u64 * 13) % 17) as f64 - 8.0).collect() };
            let d = ds(vec![("Y", vals(1)), ("a", vals(2)), ("b", vals(3))]);
            let spec = full_quadratic("Y", &["a", "b"]).unwrap();
            let perm: Vec<usize> = (0..n).rev().collect();
            let x = expand(&d, &spec).unwrap().matrix;
            let xp = expand(&d.select_rows(&perm), &spec).unwrap().matrix;
            for (i, &r) in perm.iter().enumerate() {
                prop_assert_eq!(xp.row(i), x.row(r));
            }
        }
    }
}
