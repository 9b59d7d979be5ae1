//! Householder QR with column-norm pivoting.

use nalgebra::{DMatrix, DVector};

/// `X P = Q R` for a tall matrix `X` with full column rank.
pub(crate) struct PivotedQr {
    /// R in the upper triangle; reflectors are kept in `vectors`.
    r: DMatrix<f64>,
    vectors: Vec<DVector<f64>>,
    betas: Vec<f64>,
    /// `perm[k]` is the original column placed at position `k`.
    pub perm: Vec<usize>,
}

/// Failure to factor: position `k` in pivot order had a negligible pivot.
pub(crate) struct RankDeficient {
    pub column: usize,
}

impl PivotedQr {
    /// Factors `x`, declaring rank deficiency when a pivot drops below
    /// `rel_tol` times the first pivot.
    pub fn new(x: &DMatrix<f64>, rel_tol: f64) -> Result<Self, RankDeficient> {
        let (n, p) = x.shape();
        debug_assert!(n >= p);
        let mut a = x.clone();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut vectors = Vec::with_capacity(p);
        let mut betas = Vec::with_capacity(p);
        let mut first_pivot = 0.0;

        for k in 0..p {
            let (best, _) = (k..p)
                .map(|j| (j, a.view((k, j), (n - k, 1)).norm_squared()))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best != k {
                a.swap_columns(k, best);
                perm.swap(k, best);
            }

            let x_col: DVector<f64> = a.view((k, k), (n - k, 1)).column(0).into_owned();
            let norm = x_col.norm();
            if k == 0 {
                first_pivot = norm;
            }
            if norm == 0.0 || norm <= rel_tol * first_pivot {
                return Err(RankDeficient { column: perm[k] });
            }
            let alpha = if x_col[0] >= 0.0 { -norm } else { norm };
            let mut v = x_col;
            v[0] -= alpha;
            let beta = 2.0 / v.norm_squared();

            let mut block = a.view_mut((k, k), (n - k, p - k));
            let w = block.tr_mul(&v) * beta;
            block -= &v * w.transpose();

            vectors.push(v);
            betas.push(beta);
        }

        Ok(Self { r: a.rows(0, p).upper_triangle(), vectors, betas, perm })
    }

    /// Least-squares solution in the original column order.
    pub fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        let p = self.perm.len();
        let mut qty = y.clone();
        for (k, (v, beta)) in self.vectors.iter().zip(&self.betas).enumerate() {
            let mut tail = qty.rows_mut(k, v.len());
            let s = v.dot(&tail) * beta;
            tail.axpy(-s, v, 1.0);
        }
        let mut z = qty.rows(0, p).into_owned();
        for i in (0..p).rev() {
            let mut acc = z[i];
            for j in (i + 1)..p {
                acc -= self.r[(i, j)] * z[j];
            }
            z[i] = acc / self.r[(i, i)];
        }
        let mut out = DVector::zeros(p);
        for (k, &col) in self.perm.iter().enumerate() {
            out[col] = z[k];
        }
        out
    }

    /// `(X^T X)^{-1}` in the original column order.
    pub fn gram_inverse(&self) -> DMatrix<f64> {
        let p = self.perm.len();
        let mut r_inv = DMatrix::<f64>::identity(p, p);
        for col in 0..p {
            for i in (0..=col).rev() {
                let mut acc = if i == col { 1.0 } else { 0.0 };
                for j in (i + 1)..=col {
                    acc -= self.r[(i, j)] * r_inv[(j, col)];
                }
                r_inv[(i, col)] = acc / self.r[(i, i)];
            }
        }
        let permuted = &r_inv * r_inv.transpose();
        let mut out = DMatrix::zeros(p, p);
        for (a, &ca) in self.perm.iter().enumerate() {
            for (b, &cb) in self.perm.iter().enumerate() {
                out[(ca, cb)] = permuted[(a, b)];
            }
        }
        out
    }
}
