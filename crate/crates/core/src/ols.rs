//! Ordinary least squares with coefficient inference.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dist::t_two_sided;
use crate::error::{Error, Result};
use crate::linalg::PivotedQr;
use crate::terms::{expand, ModelSpec};

/// Pivots below this fraction of the largest pivot mean rank deficiency.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Values for each predictor, keyed by name.
pub type Assignment = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitOptions {
    /// Accept `n == p`; the fit is exact and inference is suppressed.
    pub allow_exact: bool,
}

/// Goodness-of-fit statistics of a model fitted to data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub n: usize,
    pub dof: usize,
    pub rss: f64,
    /// Centered about the mean with an intercept, about zero without one.
    pub tss: f64,
    pub r2: f64,
    /// Undefined for exact fits.
    pub r2_adj: Option<f64>,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub sigma2: f64,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// A model with coefficients attached to its spec, intercept first.
///
/// Models built from supplied coefficients carry neither a summary nor
/// inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub coef: Vec<f64>,
    pub summary: Option<FitSummary>,
    pub inference: Option<Inference>,
}

pub fn fit(d: &Dataset, spec: &ModelSpec) -> Result<FittedModel> {
    fit_with(d, spec, &FitOptions::default())
}

pub fn fit_with(d: &Dataset, spec: &ModelSpec, options: &FitOptions) -> Result<FittedModel> {
    let design = expand(d, spec)?;
    let x = design.matrix;
    let (n, p) = x.shape();
    let dof = n - p;
    if dof == 0 && !options.allow_exact {
        return Err(Error::Saturated { params: p, n });
    }
    let y = DVector::from_column_slice(d.column(&spec.response)?);

    let qr =
        PivotedQr::new(&x, RANK_TOLERANCE).map_err(|e| Error::Collinear { column: design.labels[e.column].clone() })?;
    let coef = qr.solve(&y);
    let residuals = &y - &x * &coef;
    let rss = residuals.norm_squared();
    let tss = if spec.intercept {
        let m = y.mean();
        y.iter().map(|v| (v - m) * (v - m)).sum()
    } else {
        y.norm_squared()
    };
    let r2 = if tss > 0.0 { (1.0 - rss / tss).max(0.0) } else { 0.0 };
    let r2_adj = (dof > 0).then(|| 1.0 - (1.0 - r2) * (n as f64 - 1.0) / dof as f64);

    let inference = (dof > 0).then(|| {
        let sigma2 = rss / dof as f64;
        let gram_inv = qr.gram_inverse();
        let cov: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| sigma2 * gram_inv[(i, j)]).collect()).collect();
        let se: Vec<f64> = (0..p).map(|i| cov[i][i].max(0.0).sqrt()).collect();
        let t: Vec<f64> = coef
            .iter()
            .zip(&se)
            .map(|(b, s)| {
                if *s > 0.0 {
                    b / s
                } else if *b == 0.0 {
                    0.0
                } else {
                    b.signum() * f64::INFINITY
                }
            })
            .collect();
        let p_values = t.iter().map(|t| t_two_sided(*t, dof as f64)).collect();
        Inference { sigma2, se, t, p: p_values, cov }
    });

    Ok(FittedModel {
        spec: spec.clone(),
        coef: coef.iter().copied().collect(),
        summary: Some(FitSummary { n, dof, rss, tss, r2, r2_adj, residuals: residuals.iter().copied().collect() }),
        inference,
    })
}

impl FittedModel {
    /// Wraps externally supplied coefficients (intercept first).
    pub fn from_coefficients(spec: ModelSpec, coef: Vec<f64>) -> Result<Self> {
        if coef.len() != spec.n_params() {
            return Err(Error::Argument(format!(
                "model '{}' needs {} coefficients, got {}",
                spec.response,
                spec.n_params(),
                coef.len()
            )));
        }
        if coef.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument("coefficients must be finite".into()));
        }
        Ok(Self { spec, coef, summary: None, inference: None })
    }

    /// Coefficient of the intercept, or 0 for models without one.
    pub fn intercept(&self) -> f64 {
        if self.spec.intercept {
            self.coef[0]
        } else {
            0.0
        }
    }

    /// Term coefficients, in spec order.
    pub fn term_coefs(&self) -> &[f64] {
        &self.coef[usize::from(self.spec.intercept)..]
    }

    pub fn coef_of(&self, term: &crate::terms::Term) -> Option<f64> {
        self.spec.coef_index(term).map(|i| self.coef[i])
    }

    pub fn p_value_of(&self, term: &crate::terms::Term) -> Option<f64> {
        let i = self.spec.coef_index(term)?;
        self.inference.as_ref().map(|inf| inf.p[i])
    }

    pub fn r2(&self) -> Option<f64> {
        self.summary.as_ref().map(|s| s.r2)
    }

    pub fn predict(&self, point: &Assignment) -> Result<f64> {
        self.predict_with(|name| point.get(name).copied())
    }

    pub fn predict_with(&self, mut value_of: impl FnMut(&str) -> Option<f64>) -> Result<f64> {
        let mut y = self.intercept();
        for (term, b) in self.spec.terms().iter().zip(self.term_coefs()) {
            y += b * term.eval(&mut value_of)?;
        }
        Ok(y)
    }
}

/// Differences between a model and a larger model containing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedComparison {
    pub delta_r2: f64,
    pub delta_rss: f64,
    pub delta_dof: usize,
}

/// Compares `smaller` with `larger`, which must contain all of its terms.
pub fn compare(smaller: &FittedModel, larger: &FittedModel) -> Result<NestedComparison> {
    if !smaller.spec.is_nested_in(&larger.spec) {
        return Err(Error::NotNested(format!(
            "{} terms are not a subset of {} terms",
            smaller.spec.labels().join(" + "),
            larger.spec.labels().join(" + ")
        )));
    }
    let (Some(a), Some(b)) = (&smaller.summary, &larger.summary) else {
        return Err(Error::Argument("comparison needs models fitted to data".into()));
    };
    if a.n != b.n {
        return Err(Error::NotNested(format!("fitted on {} vs {} observations", a.n, b.n)));
    }
    Ok(NestedComparison { delta_r2: b.r2 - a.r2, delta_rss: a.rss - b.rss, delta_dof: a.dof - b.dof })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::Term;

    fn line(y: Vec<f64>, x: Vec<f64>) -> Dataset {
        Dataset::new(vec![("Y", y), ("x", x)]).unwrap()
    }

    #[test]
    fn exact_line() {
        let d = line(vec![0.0, 2.0, 4.0, 6.0], vec![0.0, 1.0, 2.0, 3.0]);
        let m = fit(&d, &ModelSpec::linear("Y", &["x"]).unwrap()).unwrap();
        assert!(m.coef[0].abs() < 1e-12);
        assert!((m.coef[1] - 2.0).abs() < 1e-12);
        assert!((m.r2().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simple_regression_matches_closed_form() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 2.0, 2.0, 4.0];
        // slope = Sxy / Sxx, intercept = ybar - slope * xbar
        let (xbar, ybar) = (1.5, 2.25);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
        let slope = sxy / sxx;
        let icept = ybar - slope * xbar;
        assert!((slope - 0.9).abs() < 1e-12 && (icept - 0.9).abs() < 1e-12);

        let m = fit(&line(ys.to_vec(), xs.to_vec()), &ModelSpec::linear("Y", &["x"]).unwrap()).unwrap();
        assert!((m.coef[0] - icept).abs() < 1e-12);
        assert!((m.coef[1] - slope).abs() < 1e-12);
        let inf = m.inference.as_ref().unwrap();
        for i in 0..2 {
            assert!((inf.t[i] - m.coef[i] / inf.se[i]).abs() < 1e-12);
            assert!(inf.p[i] > 0.0 && inf.p[i] <= 1.0);
        }
        let s = m.summary.as_ref().unwrap();
        assert!(s.r2_adj.unwrap() <= s.r2);
    }

    fn coded_cells() -> Dataset {
        Dataset::new(vec![
            ("SDH", vec![737.1, 639.9, 658.3, 736.7]),
            ("Pb", vec![-1.0, 1.0, -1.0, 1.0]),
            ("Cd", vec![-1.0, -1.0, 1.0, 1.0]),
        ])
        .unwrap()
    }

    fn cross_spec() -> ModelSpec {
        ModelSpec::new("SDH", true, vec![Term::linear("Pb"), Term::linear("Cd"), Term::cross(&["Pb", "Cd"])]).unwrap()
    }

    #[test]
    fn coded_factorial_cells() {
        let d = coded_cells();
        assert_eq!(fit(&d, &cross_spec()).unwrap_err(), Error::Saturated { params: 4, n: 4 });
        let m = fit_with(&d, &cross_spec(), &FitOptions { allow_exact: true }).unwrap();
        assert!(m.inference.is_none());
        for (got, want) in m.coef.iter().zip([693.0, -4.70, 4.49, 43.92]) {
            assert!((got - want).abs() < 0.05, "{got} vs {want}");
        }
        let at =
            |pb: f64, cd: f64| m.predict(&Assignment::from([("Pb".to_string(), pb), ("Cd".to_string(), cd)])).unwrap();
        assert!((at(-1.0, -1.0) - 737.1).abs() < 0.05);
        assert!((at(1.0, 1.0) - 736.7).abs() < 0.05);
    }

    #[test]
    fn predict_at_centroid_is_mean_response() {
        let d = Dataset::new(vec![
            ("Y", vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0]),
            ("a", vec![2.0, 7.0, 1.0, 8.0, 2.0, 8.0]),
            ("b", vec![1.0, 4.0, 1.0, 4.0, 2.0, 1.0]),
        ])
        .unwrap();
        let m = fit(&d, &ModelSpec::linear("Y", &["a", "b"]).unwrap()).unwrap();
        let point = Assignment::from([("a".to_string(), 28.0 / 6.0), ("b".to_string(), 13.0 / 6.0)]);
        assert!((m.predict(&point).unwrap() - 23.0 / 6.0).abs() < 1e-12);
        assert_eq!(
            m.predict(&Assignment::from([("a".to_string(), 1.0)])).unwrap_err(),
            Error::MissingPredictor("b".into())
        );
    }

    #[test]
    fn collinear_column_is_named() {
        let d = Dataset::new(vec![
            ("Y", vec![1.0, 2.0, 3.0, 5.0]),
            ("a", vec![1.0, 2.0, 3.0, 4.0]),
            ("b", vec![2.0, 4.0, 6.0, 8.0]),
        ])
        .unwrap();
        match fit(&d, &ModelSpec::linear("Y", &["a", "b"]).unwrap()) {
            Err(Error::Collinear { column }) => assert!(column == "a" || column == "b" || column == "(Intercept)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn compare_self_and_non_nested() {
        let d = coded_cells().with_column("noise", vec![0.3, -0.1, 0.2, 0.5]).unwrap();
        let small = fit(&d, &ModelSpec::linear("SDH", &["Pb"]).unwrap()).unwrap();
        let same = compare(&small, &small).unwrap();
        assert_eq!((same.delta_r2, same.delta_rss, same.delta_dof), (0.0, 0.0, 0));
        let other = fit(&d, &ModelSpec::linear("SDH", &["Cd"]).unwrap()).unwrap();
        assert!(matches!(compare(&small, &other), Err(Error::NotNested(_))));
        let big = fit(&d, &ModelSpec::linear("SDH", &["Pb", "Cd"]).unwrap()).unwrap();
        let cmp = compare(&small, &big).unwrap();
        assert!(cmp.delta_r2 >= 0.0 && cmp.delta_rss >= 0.0);
        assert_eq!(cmp.delta_dof, 1);
    }

    #[test]
    fn no_intercept_uses_uncentered_tss() {
        let d = line(vec![1.0, 2.0, 2.0], vec![1.0, 2.0, 3.0]);
        let spec = ModelSpec::new("Y", false, vec![Term::linear("x")]).unwrap();
        let m = fit(&d, &spec).unwrap();
        assert_eq!(m.summary.as_ref().unwrap().tss, 9.0);
    }

    #[test]
    fn coefficient_override_length_checked() {
        let spec = ModelSpec::linear("Y", &["x"]).unwrap();
        assert!(FittedModel::from_coefficients(spec.clone(), vec![1.0]).is_err());
        let m = FittedModel::from_coefficients(spec, vec![1.0, 2.0]).unwrap();
        assert_eq!(m.predict(&Assignment::from([("x".to_string(), 3.0)])).unwrap(), 7.0);
    }
}
