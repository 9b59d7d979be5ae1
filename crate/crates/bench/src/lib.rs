//! Synthetic workloads shared by the benchmarks.

use condreg_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `k` predictors `x1..xk` with mild correlation and a response `Y` that
/// contains one cross term.
pub fn regression_data(n: usize, k: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<(String, Vec<f64>)> = Vec::with_capacity(k + 1);
    let base: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    for j in 0..k {
        let col = base.iter().map(|b| 0.4 * b + rng.random_range(-1.0..1.0)).collect();
        cols.push((format!("x{}", j + 1), col));
    }
    let y = (0..n)
        .map(|i| {
            let x = |j: usize| cols[j].1[i];
            let cross = if k >= 2 { 0.5 * x(0) * x(1) } else { 0.0 };
            1.0 + (0..k).map(|j| x(j) / (j + 1) as f64).sum::<f64>() + cross + rng.random_range(-0.1..0.1)
        })
        .collect();
    cols.push(("Y".into(), y));
    Dataset::new(cols).expect("generated columns are valid")
}

pub fn predictor_names(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("x{j}")).collect()
}
