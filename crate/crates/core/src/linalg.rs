//! Ridge-regularized linear least squares via Householder QR.
//!
//! Solves `min ||A p - t||^2 + lambda ||p||^2` by factoring the stacked
//! system `[A; sqrt(lambda) I] p = [t; 0]`, which avoids squaring the
//! condition number the way the normal equations do.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("design matrix has {rows} rows but {targets} targets")]
    ShapeMismatch { rows: usize, targets: usize },
    #[error("least-squares system is rank deficient at column {0}; use a positive ridge")]
    RankDeficient(usize),
    #[error("ridge must be finite and non-negative, got {0}")]
    InvalidRidge(f64),
}

/// Dense row-major matrix, just enough for the consequent solve.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, p: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(p).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn ridge_least_squares(a: &Matrix, t: &[f64], ridge: f64) -> Result<Vec<f64>, SolveError> {
    if a.rows != t.len() {
        return Err(SolveError::ShapeMismatch {
            rows: a.rows,
            targets: t.len(),
        });
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(SolveError::InvalidRidge(ridge));
    }
    let n = a.cols;
    let m = a.rows + n;

    // column-major copy of the stacked system for cache-friendly reflections
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut col = Vec::with_capacity(m);
            col.extend((0..a.rows).map(|r| a.get(r, c)));
            col.extend((0..n).map(|k| if k == c { ridge.sqrt() } else { 0.0 }));
            col
        })
        .collect();
    let mut rhs: Vec<f64> = t.iter().copied().chain(std::iter::repeat_n(0.0, n)).collect();

    let scale = cols
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE) * m as f64;

    let mut diag = vec![0.0; n];
    for k in 0..n {
        let (head, tail) = cols.split_at_mut(k + 1);
        let v = &mut head[k];
        let norm = v[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= tiny {
            return Err(SolveError::RankDeficient(k));
        }
        let alpha = if v[k] > 0.0 { -norm } else { norm };
        v[k] -= alpha;
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v[k..].iter().zip(&target[k..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (x, vi) in target[k..].iter_mut().zip(&v[k..]) {
                *x -= f * vi;
            }
        };
        for col in tail.iter_mut() {
            reflect(col);
        }
        reflect(&mut rhs);
    }

    // back substitution on R p = Q^T t; R's diagonal is `diag`, above it `cols[j][i]`
    let mut p = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= cols[j][i] * p[j];
        }
        p[i] = s / diag[i];
    }
    Ok(p)
}
