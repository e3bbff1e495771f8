//! Dense row-major matrices and the symmetric eigensolver used for hash
//! initialization and PCA.

use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Real> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix<S> {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// `self * other`, naive triple loop in i-k-j order.
    pub fn matmul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == S::zero() {
                    continue;
                }
                let orow = other.row(k);
                let crow = out.row_mut(i);
                for j in 0..other.cols {
                    crow[j] = crow[j] + a * orow[j];
                }
            }
        }
        out
    }

    /// `selfᵀ * other` without materializing the transpose.
    pub fn transpose_matmul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.rows, other.rows, "transpose_matmul shape mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = other.row(k);
            for i in 0..self.cols {
                let a = arow[i];
                if a == S::zero() {
                    continue;
                }
                let crow = out.row_mut(i);
                for j in 0..brow.len() {
                    crow[j] = crow[j] + a * brow[j];
                }
            }
        }
        out
    }

    pub fn scale_in_place(&mut self, s: S) {
        for v in &mut self.data {
            *v = *v * s;
        }
    }

    pub fn frobenius_norm(&self) -> S {
        self.data
            .iter()
            .fold(S::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }
}

pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for i in 0..a.len() {
        acc = acc + a[i] * b[i];
    }
    acc
}

pub fn norm<S: Real>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

pub fn squared_distance<S: Real>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc = acc + d * d;
    }
    acc
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// eigenvectors are the columns of the returned matrix. The sign of each
/// eigenvector is fixed so its largest-magnitude entry is positive, which
/// keeps results reproducible across platforms.
pub fn symmetric_eigen<S: Real>(m: &Matrix<S>) -> (Vec<S>, Matrix<S>) {
    assert_eq!(m.rows(), m.cols(), "symmetric_eigen requires square input");
    let n = m.rows();
    let mut a = m.clone();
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, S::one());
    }

    let tol = S::from_f64_lossy(1e-14) * off_diag_scale(&a).max(S::one());
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = S::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a.get(p, q).abs();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<S> = (0..n).map(|i| a.get(i, i)).collect();
    order.sort_by(|&i, &j| {
        evals[j]
            .partial_cmp(&evals[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut vals = Vec::with_capacity(n);
    let mut vecs = Matrix::zeros(n, n);
    for (out_c, &src_c) in order.iter().enumerate() {
        vals.push(evals[src_c]);
        let mut col: Vec<S> = (0..n).map(|r| v.get(r, src_c)).collect();
        fix_sign(&mut col);
        for r in 0..n {
            vecs.set(r, out_c, col[r]);
        }
    }
    (vals, vecs)
}

/// Flip a vector so its largest-magnitude entry is positive.
pub fn fix_sign<S: Real>(col: &mut [S]) {
    let mut best = 0usize;
    let mut best_abs = S::zero();
    for (i, &x) in col.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if col[best] < S::zero() {
        for x in col.iter_mut() {
            *x = -*x;
        }
    }
}

fn off_diag_scale<S: Real>(a: &Matrix<S>) -> S {
    let mut s = S::zero();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            s = s.max(a.get(i, j).abs());
        }
    }
    s
}

fn jacobi_rotate<S: Real>(a: &mut Matrix<S>, v: &mut Matrix<S>, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == S::zero() {
        return;
    }
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    let theta = (aqq - app) / (S::from_f64_lossy(2.0) * apq);
    let t = {
        let s = if theta >= S::zero() {
            S::one()
        } else {
            -S::one()
        };
        s / (theta.abs() + (theta * theta + S::one()).sqrt())
    };
    let c = S::one() / (t * t + S::one()).sqrt();
    let s = t * c;
    let n = a.rows();

    for i in 0..n {
        let aip = a.get(i, p);
        let aiq = a.get(i, q);
        a.set(i, p, c * aip - s * aiq);
        a.set(i, q, s * aip + c * aiq);
    }
    for j in 0..n {
        let apj = a.get(p, j);
        let aqj = a.get(q, j);
        a.set(p, j, c * apj - s * aqj);
        a.set(q, j, s * apj + c * aqj);
    }
    for i in 0..n {
        let vip = v.get(i, p);
        let viq = v.get(i, q);
        v.set(i, p, c * vip - s * viq);
        v.set(i, q, s * vip + c * viq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_is_sorted_identity() {
        let m = Matrix::from_vec(3, 3, vec![1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]);
        let (vals, vecs) = symmetric_eigen(&m);
        assert!((vals[0] - 3.0f64).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12);
        // first eigenvector is e1 (entry for the 3.0 eigenvalue)
        assert!((vecs.get(1, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs_symmetric_matrix() {
        let m = Matrix::from_vec(
            3,
            3,
            vec![4.0, 1.0, -2.0, 1.0, 2.0, 0.5, -2.0, 0.5, 3.0f64],
        );
        let (vals, vecs) = symmetric_eigen(&m);
        // V diag(vals) Vᵀ == M
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += vecs.get(i, k) * vals[k] * vecs.get(j, k);
                }
                assert!((acc - m.get(i, j)).abs() < 1e-10, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let m = Matrix::from_vec(
            4,
            4,
            vec![
                2.0, 0.3, 0.1, 0.0, 0.3, 1.0, 0.2, 0.4, 0.1, 0.2, 5.0, 0.1, 0.0, 0.4, 0.1, 0.5f64,
            ],
        );
        let (_, vecs) = symmetric_eigen(&m);
        for i in 0..4 {
            for j in 0..4 {
                let d = dot(&vecs.col(i), &vecs.col(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn matmul_matches_hand_computation() {
        let a = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0f64]);
        let b = Matrix::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
        let d = a.transpose().transpose_matmul(&b);
        assert_eq!(d.data(), c.data());
    }
}
