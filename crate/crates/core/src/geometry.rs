//! Predictor-domain geometry and joint-action classification.
//!
//! Correlated predictors only populate part of their joint plane; the sample
//! confidence ellipse marks the observed (interpolation) region. The cross
//! term of a two-factor model determines how two factors act together.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::dataset::{covariance, mean, Dataset};
use crate::dist::chi2_2_quantile;
use crate::error::{Error, Result};
use crate::ols::{Assignment, FittedModel};
use crate::terms::Term;

/// Points on exported ellipse boundaries.
pub const BOUNDARY_POINTS: usize = 360;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceEllipse {
    pub pair: (String, String),
    pub center: [f64; 2],
    /// Sample covariance (divisor n - 1).
    pub shape: [[f64; 2]; 2],
    pub level: f64,
    /// Chi-square (2 dof) quantile at `level`.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointClass {
    Inside,
    Outside,
}

pub fn ellipse(d: &Dataset, x: &str, y: &str, level: f64) -> Result<ConfidenceEllipse> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Argument(format!("level must lie in (0, 1), got {level}")));
    }
    if d.n() < 3 {
        return Err(Error::Argument(format!("ellipse needs at least 3 observations, got {}", d.n())));
    }
    let (xs, ys) = (d.column(x)?, d.column(y)?);
    let (sxx, syy, sxy) = (covariance(xs, xs), covariance(ys, ys), covariance(xs, ys));
    let det = sxx * syy - sxy * sxy;
    if sxx <= 0.0 || syy <= 0.0 || det <= 1e-12 * sxx * syy {
        return Err(Error::DegenerateEllipse(x.to_string(), y.to_string()));
    }
    Ok(ConfidenceEllipse {
        pair: (x.to_string(), y.to_string()),
        center: [mean(xs), mean(ys)],
        shape: [[sxx, sxy], [sxy, syy]],
        level,
        threshold: chi2_2_quantile(level),
    })
}

impl ConfidenceEllipse {
    pub fn mahalanobis2(&self, point: (f64, f64)) -> f64 {
        let [[a, b], [_, c]] = self.shape;
        let det = a * c - b * b;
        let (dx, dy) = (point.0 - self.center[0], point.1 - self.center[1]);
        (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det
    }

    pub fn classify(&self, point: (f64, f64)) -> PointClass {
        if self.mahalanobis2(point) <= self.threshold {
            PointClass::Inside
        } else {
            PointClass::Outside
        }
    }

    /// Eigenvalues (largest first) and the unit eigenvector of the largest.
    pub fn principal_axes(&self) -> ([f64; 2], [f64; 2]) {
        let [[a, b], [_, c]] = self.shape;
        let half_trace = (a + c) / 2.0;
        let disc = (((a - c) / 2.0).powi(2) + b * b).sqrt();
        let (l1, l2) = (half_trace + disc, half_trace - disc);
        let v = if b.abs() > 0.0 {
            [l1 - c, b]
        } else if a >= c {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        };
        let norm = v[0].hypot(v[1]);
        ([l1, l2], [v[0] / norm, v[1] / norm])
    }

    /// `sqrt(1 - minor^2 / major^2)`; 0 for a circle.
    pub fn eccentricity(&self) -> f64 {
        let ([l1, l2], _) = self.principal_axes();
        (1.0 - l2 / l1).max(0.0).sqrt()
    }

    /// `count` points evenly spaced in angle along the boundary.
    pub fn boundary(&self, count: usize) -> Vec<(f64, f64)> {
        let [[a, b], [_, c]] = self.shape;
        let l11 = a.sqrt();
        let l21 = b / l11;
        let l22 = (c - l21 * l21).max(0.0).sqrt();
        let s = self.threshold.sqrt();
        (0..count)
            .map(|k| {
                let (sin, cos) = (TAU * k as f64 / count as f64).sin_cos();
                (self.center[0] + s * l11 * cos, self.center[1] + s * (l21 * cos + l22 * sin))
            })
            .collect()
    }
}

pub fn classify_point(e: &ConfidenceEllipse, point: (f64, f64)) -> PointClass {
    e.classify(point)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionLabel {
    Additive,
    LessThanAdditive,
    GreaterThanAdditive,
    Antagonism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEvidence {
    pub cross_coef: f64,
    /// `None` when the model carries no inference; the cross term is then
    /// taken as significant.
    pub cross_p: Option<f64>,
    pub main_coefs: [f64; 2],
    /// Response at both factors low.
    pub control: f64,
    /// Change from control with only one factor raised.
    pub single_effects: [f64; 2],
    /// Change from control with both raised.
    pub joint_effect: f64,
    /// `joint_effect - single_effects[0] - single_effects[1]`.
    pub interaction: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionClass {
    pub label: ActionLabel,
    pub evidence: ActionEvidence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionOptions {
    /// Low and high level of each factor; coded (-1, +1) by default.
    pub levels: [(f64, f64); 2],
    /// Antagonism needs the joint response within this fraction of the corner
    /// response range of the control.
    pub tolerance_frac: f64,
    /// Values for any further predictors in the model.
    pub fixed: Assignment,
}

impl Default for ActionOptions {
    fn default() -> Self {
        Self { levels: [(-1.0, 1.0), (-1.0, 1.0)], tolerance_frac: 0.05, fixed: Assignment::new() }
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn classify_action(
    m: &FittedModel,
    f1: &str,
    f2: &str,
    alpha: f64,
    options: &ActionOptions,
) -> Result<ActionClass> {
    let cross = Term::cross(&[f1, f2]);
    let (Some(b1), Some(b2), Some(b12)) =
        (m.coef_of(&Term::linear(f1)), m.coef_of(&Term::linear(f2)), m.coef_of(&cross))
    else {
        return Err(Error::Scope(format!(
            "joint action needs linear terms for '{f1}' and '{f2}' and their cross term"
        )));
    };
    for (i, (lo, hi)) in options.levels.iter().enumerate() {
        if lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Argument(format!("factor {} needs low < high, got ({lo}, {hi})", i + 1)));
        }
    }
    let cross_p = m.p_value_of(&cross);

    let at = |v1: f64, v2: f64| {
        let mut point = options.fixed.clone();
        point.insert(f1.to_string(), v1);
        point.insert(f2.to_string(), v2);
        m.predict(&point)
    };
    let [(lo1, hi1), (lo2, hi2)] = options.levels;
    let control = at(lo1, lo2)?;
    let corners = [control, at(hi1, lo2)?, at(lo1, hi2)?, at(hi1, hi2)?];
    let single_effects = [corners[1] - control, corners[2] - control];
    let joint_effect = corners[3] - control;
    let interaction = joint_effect - single_effects[0] - single_effects[1];
    let range = corners.iter().copied().fold(f64::MIN, f64::max) - corners.iter().copied().fold(f64::MAX, f64::min);
    let tolerance = options.tolerance_frac * range;

    let significant = cross_p.is_none_or(|p| p <= alpha);
    let shared = match (sign(single_effects[0]), sign(single_effects[1])) {
        (a, b) if a == b && a != 0 => Some(a),
        _ => None,
    };
    let label = if !significant || sign(interaction) == 0 {
        ActionLabel::Additive
    } else if shared.is_some_and(|s| sign(interaction) == -s) && joint_effect.abs() <= tolerance {
        ActionLabel::Antagonism
    } else {
        let direction = shared.unwrap_or_else(|| sign(single_effects[0] + single_effects[1]));
        if sign(interaction) == -direction {
            ActionLabel::LessThanAdditive
        } else {
            ActionLabel::GreaterThanAdditive
        }
    };

    Ok(ActionClass {
        label,
        evidence: ActionEvidence {
            cross_coef: b12,
            cross_p,
            main_coefs: [b1, b2],
            control,
            single_effects,
            joint_effect,
            interaction,
            tolerance,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ols::Inference;
    use crate::terms::ModelSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn two_factor(f1: &str, f2: &str, coef: [f64; 4]) -> FittedModel {
        let spec = ModelSpec::new("Y", true, vec![Term::linear(f1), Term::linear(f2), Term::cross(&[f1, f2])]).unwrap();
        FittedModel::from_coefficients(spec, coef.to_vec()).unwrap()
    }

    fn correlated(n: usize, r: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            xs.push(a);
            ys.push(r * a + (1.0 - r * r).sqrt() * b);
        }
        Dataset::new(vec![("x", xs), ("y", ys)]).unwrap()
    }

    #[test]
    fn threshold_matches_bisection_on_cdf() {
        let cdf = |x: f64| 1.0 - (-x / 2.0).exp();
        let (mut lo, mut hi) = (0.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < 0.95 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let e = ellipse(&correlated(50, 0.3, 1), "x", "y", 0.95).unwrap();
        assert!((e.threshold - lo).abs() < 1e-9);
        assert!((e.threshold - 5.991).abs() < 1e-3);
    }

    #[test]
    fn uncorrelated_axes_are_aligned() {
        let d = Dataset::new(vec![("x", vec![-1.0, 1.0, -1.0, 1.0]), ("y", vec![-1.0, -1.0, 1.0, 1.0])]).unwrap();
        let e = ellipse(&d, "x", "y", 0.75).unwrap();
        assert_eq!(e.shape[0][1], 0.0);
        assert!(e.eccentricity() < 1e-12);
    }

    #[test]
    fn elongation_grows_with_correlation() {
        let ecc: Vec<f64> = [0.0, 0.5, 0.729, 0.95]
            .iter()
            .map(|r| ellipse(&correlated(4000, *r, 2), "x", "y", 0.95).unwrap().eccentricity())
            .collect();
        assert!(ecc.windows(2).all(|w| w[0] < w[1]), "{ecc:?}");
    }

    #[test]
    fn degenerate_pair_rejected() {
        let d = Dataset::new(vec![("x", vec![1.0, 2.0, 3.0]), ("y", vec![2.0, 4.0, 6.0])]).unwrap();
        assert!(matches!(ellipse(&d, "x", "y", 0.95), Err(Error::DegenerateEllipse(..))));
    }

    #[test]
    fn boundary_and_principal_axis_points() {
        let e = ellipse(&correlated(200, 0.729, 3), "x", "y", 0.95).unwrap();
        assert_eq!(e.classify((e.center[0], e.center[1])), PointClass::Inside);
        for p in e.boundary(BOUNDARY_POINTS) {
            assert!((e.mahalanobis2(p) - e.threshold).abs() < 1e-9);
        }
        // Along the major axis, distance^2 = t^2 / lambda.
        let ([l1, _], v) = e.principal_axes();
        let t_edge = (e.threshold * l1).sqrt();
        let eps = 1e-6;
        let along = |t: f64| (e.center[0] + t * v[0], e.center[1] + t * v[1]);
        assert_eq!(e.classify(along(t_edge * (1.0 - eps))), PointClass::Inside);
        assert_eq!(e.classify(along(t_edge * (1.0 + eps))), PointClass::Outside);
        // Low x with high y under positive correlation lies outside.
        assert_eq!(e.classify((e.center[0] - 2.0, e.center[1] + 2.0)), PointClass::Outside);
    }

    #[test]
    fn affine_invariance() {
        let d = correlated(100, 0.6, 4);
        let e = ellipse(&d, "x", "y", 0.9).unwrap();
        let (xs, ys) = (d.column("x").unwrap(), d.column("y").unwrap());
        let map = |x: f64, y: f64| (2.0 * x + 0.5 * y + 3.0, -x + 1.5 * y - 7.0);
        let (tx, ty): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).map(|(x, y)| map(*x, *y)).unzip();
        let t = ellipse(&Dataset::new(vec![("x", tx), ("y", ty)]).unwrap(), "x", "y", 0.9).unwrap();
        for p in [(0.0, 0.0), (1.5, -1.0), (2.0, 2.5), (-0.3, 0.9)] {
            let q = map(p.0, p.1);
            assert!((e.mahalanobis2(p) - t.mahalanobis2(q)).abs() < 1e-9);
        }
    }

    #[test]
    fn coded_cell_model_is_antagonism() {
        let m = two_factor("Pb", "Cd", [693.0, -4.70, 4.49, 43.92]);
        let c = classify_action(&m, "Pb", "Cd", 0.05, &ActionOptions::default()).unwrap();
        assert_eq!(c.label, ActionLabel::Antagonism);
        assert!(c.evidence.single_effects.iter().all(|e| *e < 0.0));
    }

    #[test]
    fn attenuating_cross_term_is_less_than_additive() {
        let m = two_factor("CO", "SO2", [204.0, 1674.0, 36.0, -413.0]);
        for levels in [[(-1.0, 1.0), (-1.0, 1.0)], [(0.0, 1.0), (0.0, 1.0)], [(0.5, 1.0), (0.598, 2.63)]] {
            let opts = ActionOptions { levels, ..ActionOptions::default() };
            let c = classify_action(&m, "CO", "SO2", 0.05, &opts).unwrap();
            assert_eq!(c.label, ActionLabel::LessThanAdditive);
        }
        let boosted = two_factor("a", "b", [0.0, 2.0, 3.0, 1.0]);
        let c = classify_action(&boosted, "a", "b", 0.05, &ActionOptions::default()).unwrap();
        assert_eq!(c.label, ActionLabel::GreaterThanAdditive);
    }

    #[test]
    fn insignificant_cross_term_is_additive() {
        let mut m = two_factor("a", "b", [1.0, 2.0, 3.0, -4.0]);
        m.inference = Some(Inference {
            sigma2: 1.0,
            se: vec![1.0; 4],
            t: vec![1.0; 4],
            p: vec![0.01, 0.01, 0.01, 0.5],
            cov: vec![vec![0.0; 4]; 4],
        });
        let c = classify_action(&m, "a", "b", 0.05, &ActionOptions::default()).unwrap();
        assert_eq!(c.label, ActionLabel::Additive);
        assert_eq!(c.evidence.cross_p, Some(0.5));
    }

    #[test]
    fn label_ignores_response_scale() {
        for coef in [[693.0, -4.70, 4.49, 43.92], [204.0, 1674.0, 36.0, -413.0], [0.0, 2.0, 3.0, 1.0]] {
            let base = classify_action(&two_factor("a", "b", coef), "a", "b", 0.05, &ActionOptions::default()).unwrap();
            let scaled = coef.map(|c| c * 12.5);
            let s = classify_action(&two_factor("a", "b", scaled), "a", "b", 0.05, &ActionOptions::default()).unwrap();
            assert_eq!(base.label, s.label);
        }
    }

    #[test]
    fn missing_cross_term_is_scope_error() {
        let spec = ModelSpec::linear("Y", &["a", "b"]).unwrap();
        let m = FittedModel::from_coefficients(spec, vec![0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(classify_action(&m, "a", "b", 0.05, &ActionOptions::default()), Err(Error::Scope(_))));
    }
}
