//! Sampling distributions used for p-values and ellipse thresholds.

use statrs::function::beta::beta_reg;

/// Two-sided p-value of a Student t statistic with `dof` degrees of freedom.
///
/// Uses `P(|T| > |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2)`.
pub fn t_two_sided(t: f64, dof: f64) -> f64 {
    if t.is_nan() || dof <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = dof / (dof + t * t);
    beta_reg(dof / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Two-sided p-value for a Pearson correlation `r` computed on `n` points.
pub fn pearson_p(r: f64, n: usize) -> f64 {
    let dof = n as f64 - 2.0;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * dof.sqrt() / (1.0 - r * r).sqrt();
    t_two_sided(t, dof)
}

/// Quantile of the chi-square distribution with two degrees of freedom.
///
/// The CDF is `1 - exp(-x/2)`, so the quantile is closed form.
pub fn chi2_2_quantile(level: f64) -> f64 {
    -2.0 * (1.0 - level).ln()
}
