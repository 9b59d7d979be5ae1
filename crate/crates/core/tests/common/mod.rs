#![allow(dead_code)]

use condreg_core::Dataset;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("x{i}")).collect()
}

/// Correlated predictors plus a noisy linear response `Y`.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Dataset {
    let mut cols: Vec<(String, Vec<f64>)> = Vec::with_capacity(k + 1);
    let shared: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    for name in names(k) {
        let mix: f64 = rng.random_range(-0.8..0.8);
        let scale: f64 = rng.random_range(0.5..5.0);
        let shift: f64 = rng.random_range(-10.0..10.0);
        let col = shared
            .iter()
            .map(|s| {
                let e: f64 = StandardNormal.sample(rng);
                shift + scale * (mix * s + e)
            })
            .collect();
        cols.push((name, col));
    }
    let betas: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
    let y = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(rng);
            1.5 + cols.iter().zip(&betas).map(|((_, c), b)| b * c[i]).sum::<f64>() + e
        })
        .collect();
    cols.push(("Y".into(), y));
    Dataset::new(cols).unwrap()
}

/// Least squares by Gauss-Jordan elimination on the normal equations.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
        a.swap(col, pivot);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != col {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.iter().map(|r| r[p]).collect()
}

/// `|a - b| <= tol * max(|a|, |b|, 1)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
