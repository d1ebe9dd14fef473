//! Small dense linear algebra kernel: row-major matrices and slice-based
//! vector helpers. Everything the solver needs is matrix-vector work, so
//! there is no factorization machinery beyond Gram-Schmidt.

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Scalar};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Resizes in place, zero-filling. Used for reusable Jacobian buffers.
    pub fn reset(&mut self, rows: usize, cols: usize) {
        self.rows = rows;
        self.cols = cols;
        self.data.clear();
        self.data.resize(rows * cols, T::zero());
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `out = self * x`
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `out += alpha * selfᵀ * y`
    pub fn mul_t_vec_add(&self, alpha: T, y: &[T], out: &mut [T]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (i, &yi) in y.iter().enumerate() {
            let s = alpha * yi;
            if s != T::zero() {
                axpy(s, self.row(i), out);
            }
        }
    }

    pub fn mul_t_vec(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        self.mul_t_vec_add(T::one(), y, &mut out);
        out
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                axpy(a, other.row(k), out.row_mut(i));
            }
        }
        out
    }

    /// `self * selfᵀ`
    pub fn gram_rows(&self) -> Mat<T> {
        let mut g = Mat::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let v = dot(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> T {
        norm(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| lit::<U>(v.to_f64_lossy())).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

#[inline]
pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

pub fn scale<T: Scalar>(alpha: T, x: &mut [T]) {
    for v in x {
        *v *= alpha;
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite operator, by power
/// iteration on the Rayleigh quotient. Stops when the relative change falls
/// below `rel_tol` or after `max_iter` products.
pub fn power_iteration_psd<T, F>(dim: usize, apply: F, rel_tol: T, max_iter: usize) -> T
where
    T: Scalar,
    F: Fn(&[T], &mut [T]),
{
    if dim == 0 {
        return T::zero();
    }
    // Deterministic, non-degenerate start vector.
    let mut v: Vec<T> = (0..dim)
        .map(|i| T::one() + lit::<T>(((i * 7919) % 101) as f64 / 101.0))
        .collect();
    let n0 = norm(&v);
    scale(T::one() / n0, &mut v);
    let mut w = vec![T::zero(); dim];
    let mut lambda = T::zero();
    for _ in 0..max_iter {
        apply(&v, &mut w);
        let rq = dot(&v, &w);
        let nw = norm(&w);
        if nw == T::zero() {
            return T::zero();
        }
        for (vi, &wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        let converged = (rq - lambda).abs() <= rel_tol * rq.abs();
        lambda = rq;
        if converged {
            break;
        }
    }
    // One more product so the reported value is the Rayleigh quotient of the
    // final normalized iterate.
    apply(&v, &mut w);
    dot(&v, &w).max(lambda)
}

/// Spectral norm of `AᵀA` (equivalently `‖A‖²`), computed on the smaller Gram matrix.
pub fn gram_spectral_norm<T: Scalar>(a: &Mat<T>, rel_tol: T) -> T {
    if a.rows() == 0 || a.cols() == 0 {
        return T::zero();
    }
    if a.rows() <= a.cols() {
        let g = a.gram_rows();
        power_iteration_psd(g.rows(), |x, y| g.mul_vec_into(x, y), rel_tol, 100_000)
    } else {
        let g = a.transpose().gram_rows();
        power_iteration_psd(g.rows(), |x, y| g.mul_vec_into(x, y), rel_tol, 100_000)
    }
}

/// Spectral norm (largest absolute eigenvalue) of a symmetric matrix, via
/// power iteration on its square.
pub fn symmetric_spectral_norm<T: Scalar>(q: &Mat<T>, rel_tol: T) -> T {
    let n = q.rows();
    let mut tmp = vec![T::zero(); n];
    let tmp_cell = std::cell::RefCell::new(&mut tmp);
    let sq = power_iteration_psd(
        n,
        |x, y| {
            let mut t = tmp_cell.borrow_mut();
            q.mul_vec_into(x, &mut t);
            q.mul_vec_into(&t, y);
        },
        rel_tol,
        100_000,
    );
    sq.sqrt()
}

/// Orthonormalizes the columns of `m` with classical Gram-Schmidt applied
/// twice per column. Columns that fall below `drop_tol` relative norm after
/// projection are discarded, so the result spans the column space of `m`.
pub fn orthonormal_columns<T: Scalar>(m: &Mat<T>, drop_tol: T) -> Vec<Vec<T>> {
    let mut basis: Vec<Vec<T>> = Vec::new();
    for j in 0..m.cols() {
        let mut v = m.column(j);
        let n0 = norm(&v);
        if n0 == T::zero() {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let p = dot(q, &v);
                axpy(-p, q, &mut v);
            }
        }
        let n1 = norm(&v);
        if n1 <= drop_tol * n0 {
            continue;
        }
        scale(T::one() / n1, &mut v);
        basis.push(v);
    }
    basis
}

/// Component of `y` orthogonal to the column space of `a`, i.e. its projection
/// onto `null(aᵀ)`.
pub fn null_space_component<T: Scalar>(a: &Mat<T>, y: &[T]) -> Vec<T> {
    let basis = orthonormal_columns(a, lit(1e-12));
    let mut r = y.to_vec();
    for q in &basis {
        let p = dot(q, &r);
        axpy(-p, q, &mut r);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn matvec_and_transpose_agree() {
        let a = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        assert_eq!(a.mul_vec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(a.mul_t_vec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        assert_eq!(a.transpose().mul_vec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn gram_norm_matches_known_value() {
        // A = [1 0; 0 2] -> ‖AᵀA‖ = 4
        let a = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        assert_relative_eq!(gram_spectral_norm(&a, 1e-14), 4.0, max_relative = 1e-10);
        let q = Mat::from_rows(&[vec![-3.0, 0.0], vec![0.0, 1.0]]);
        assert_relative_eq!(symmetric_spectral_norm(&q, 1e-14), 3.0, max_relative = 1e-8);
    }

    #[test]
    fn gram_schmidt_produces_orthonormal_basis() {
        let m = Mat::from_rows(&[
            vec![1.0, 1.0, 2.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
        ]);
        // third column is the sum of the first two
        let b = orthonormal_columns(&m, 1e-12);
        assert_eq!(b.len(), 2);
        assert_relative_eq!(dot(&b[0], &b[1]), 0.0, epsilon = 1e-14);
        assert_relative_eq!(norm(&b[1]), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn null_space_component_vanishes_on_range() {
        let a = Mat::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        let r = null_space_component(&a, &[2.0, 2.0]);
        assert!(norm(&r) < 1e-14);
        let r = null_space_component(&a, &[1.0, -1.0]);
        assert_relative_eq!(norm(&r), 2f64.sqrt(), epsilon = 1e-14);
    }
}
