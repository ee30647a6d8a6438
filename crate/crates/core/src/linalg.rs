//! Minimal dense linear algebra: row-major matrices and an LU solve with
//! partial pivoting. Everything here operates on problems with at most a few
//! hundred rows, so no attempt is made at blocking or sparsity.

use serde::{Deserialize, Serialize};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a row-major nested representation. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend_from_slice(row);
        }
        DenseMatrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    /// `A x` for a dense vector `x` of length `cols`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        self.iter_rows().map(|row| dot(row, x)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve the square system `M x = rhs` by LU with partial pivoting.
/// Returns `None` when the matrix is singular to working precision.
pub fn lu_solve(m: &DenseMatrix, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = m.rows();
    assert_eq!(n, m.cols(), "lu_solve requires a square matrix");
    assert_eq!(n, rhs.len());
    let mut a = m.data.clone();
    let mut x = rhs.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        // pivot search
        let mut best = col;
        let mut best_abs = a[perm[col] * n + col].abs();
        for r in col + 1..n {
            let v = a[perm[r] * n + col].abs();
            if v > best_abs {
                best = r;
                best_abs = v;
            }
        }
        if best_abs < 1e-12 {
            return None;
        }
        perm.swap(col, best);
        let prow = perm[col];
        let pivot = a[prow * n + col];
        for r in col + 1..n {
            let row = perm[r];
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for c in col + 1..n {
                a[row * n + c] -= factor * a[prow * n + c];
            }
            x[row] -= factor * x[prow];
        }
    }

    // back substitution
    let mut out = vec![0.0; n];
    for col in (0..n).rev() {
        let row = perm[col];
        let mut v = x[row];
        for c in col + 1..n {
            v -= a[row * n + c] * out[c];
        }
        out[col] = v / a[row * n + col];
    }
    Some(out)
}
