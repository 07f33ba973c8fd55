//! Small dense matrices and Householder QR, sized for designs with a few
//! hundred rows and a handful of columns.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
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
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_vec(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Matrix from a subset of this matrix's columns, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self.get(i, idx[j]))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map(|v| v * factor)
    }

    /// diag(d) * M: row `i` multiplied by `d[i]`.
    pub fn scale_rows(&self, d: &[T]) -> Self {
        assert_eq!(self.rows, d.len());
        Self::from_fn(self.rows, self.cols, |i, j| d[i] * self.get(i, j))
    }

    /// M * diag(d): column `j` multiplied by `d[j]`.
    pub fn scale_cols(&self, d: &[T]) -> Self {
        assert_eq!(self.cols, d.len());
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * d[j])
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

/// Householder QR factorization of an n x p matrix with n >= p.
///
/// Reflectors are stored below the diagonal, the triangular factor on and
/// above it (diagonal separately).
#[derive(Debug, Clone)]
pub struct Qr<T> {
    factors: Mat<T>,
    rdiag: Vec<T>,
}

impl<T: Scalar> Qr<T> {
    pub fn new(a: &Mat<T>) -> Self {
        let (n, p) = (a.rows(), a.cols());
        assert!(n >= p, "QR requires rows >= cols");
        let mut qr = a.clone();
        let mut rdiag = vec![T::zero(); p];
        for k in 0..p {
            let mut norm = T::zero();
            for i in k..n {
                norm = norm.hypot(qr.get(i, k));
            }
            if norm == T::zero() {
                rdiag[k] = T::zero();
                continue;
            }
            let mut alpha = norm;
            if qr.get(k, k) > T::zero() {
                alpha = -alpha;
            }
            // v = x - alpha e1, stored normalized so v[k] = 1
            let vk = qr.get(k, k) - alpha;
            for i in (k + 1)..n {
                let v = qr.get(i, k) / vk;
                qr.set(i, k, v);
            }
            qr.set(k, k, T::one());
            let beta = -vk / alpha; // 2 / (v'v) with this normalization
            for j in (k + 1)..p {
                let mut dot = T::zero();
                for i in k..n {
                    dot += qr.get(i, k) * qr.get(i, j);
                }
                let scale = beta * dot;
                for i in k..n {
                    let v = qr.get(i, j) - scale * qr.get(i, k);
                    qr.set(i, j, v);
                }
            }
            rdiag[k] = alpha;
        }
        Self { factors: qr, rdiag }
    }

    pub fn cols(&self) -> usize {
        self.factors.cols()
    }

    /// Numerical full-column-rank check.
    pub fn is_full_rank(&self) -> bool {
        let scale = self
            .rdiag
            .iter()
            .fold(T::zero(), |acc, &r| acc.max(r.abs()));
        if scale == T::zero() {
            return self.cols() == 0;
        }
        let tol = scale * T::epsilon() * T::from_count(self.factors.rows().max(self.cols()) * 8);
        self.rdiag.iter().all(|&r| r.abs() > tol)
    }

    /// Apply Q^T to a vector of length n in place.
    fn apply_qt(&self, b: &mut [T]) {
        let (n, p) = (self.factors.rows(), self.factors.cols());
        for k in 0..p {
            if self.rdiag[k] == T::zero() {
                continue;
            }
            let mut dot = T::zero();
            for i in k..n {
                dot += self.factors.get(i, k) * b[i];
            }
            // beta = 2 / (v'v); with v[k] = 1 this is recoverable from the
            // reflector norm, but it is cheaper to recompute v'v directly.
            let mut vtv = T::zero();
            for i in k..n {
                vtv += self.factors.get(i, k).sq();
            }
            let scale = T::real(2.0) * dot / vtv;
            for i in k..n {
                b[i] = b[i] - scale * self.factors.get(i, k);
            }
        }
    }

    /// Least-squares solution of `A x = b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if !self.is_full_rank() {
            return Err(Error::Singular("rank-deficient least-squares solve".into()));
        }
        let p = self.cols();
        let mut work = b.to_vec();
        self.apply_qt(&mut work);
        let mut x = vec![T::zero(); p];
        for k in (0..p).rev() {
            let mut s = work[k];
            for j in (k + 1)..p {
                s -= self.factors.get(k, j) * x[j];
            }
            x[k] = s / self.rdiag[k];
        }
        Ok(x)
    }

    /// Least-squares solve with a matrix right-hand side, column by column.
    pub fn solve_mat(&self, b: &Mat<T>) -> Result<Mat<T>> {
        let mut out = Mat::zeros(self.cols(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(&b.col_vec(j))?;
            for (i, v) in x.into_iter().enumerate() {
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    /// The thin orthogonal factor Q (n x p).
    pub fn thin_q(&self) -> Mat<T> {
        let (n, p) = (self.factors.rows(), self.factors.cols());
        let mut q = Mat::zeros(n, p);
        for j in 0..p {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            // Q e_j = H_0 ... H_{p-1} e_j, apply reflectors in reverse
            for k in (0..p).rev() {
                if self.rdiag[k] == T::zero() {
                    continue;
                }
                let mut dot = T::zero();
                let mut vtv = T::zero();
                for i in k..n {
                    dot += self.factors.get(i, k) * e[i];
                    vtv += self.factors.get(i, k).sq();
                }
                let scale = T::real(2.0) * dot / vtv;
                for i in k..n {
                    e[i] = e[i] - scale * self.factors.get(i, k);
                }
            }
            for i in 0..n {
                q.set(i, j, e[i]);
            }
        }
        q
    }

    /// The upper-triangular factor R (p x p).
    pub fn r_upper(&self) -> Mat<T> {
        let p = self.cols();
        Mat::from_fn(p, p, |i, j| {
            if i == j {
                self.rdiag[i]
            } else if i < j {
                self.factors.get(i, j)
            } else {
                T::zero()
            }
        })
    }

    /// Inverse of the triangular factor.
    pub fn r_inverse(&self) -> Result<Mat<T>> {
        if !self.is_full_rank() {
            return Err(Error::Singular("triangular factor not invertible".into()));
        }
        let p = self.cols();
        let r = self.r_upper();
        let mut inv = Mat::zeros(p, p);
        for j in 0..p {
            let mut e = vec![T::zero(); p];
            e[j] = T::one();
            for k in (0..p).rev() {
                let mut s = e[k];
                for m in (k + 1)..p {
                    s -= r.get(k, m) * inv.get(m, j);
                }
                inv.set(k, j, s / r.get(k, k));
            }
        }
        Ok(inv)
    }
}

/// Solve `R^T u = b` for upper-triangular `R` (forward substitution).
pub fn solve_rt<T: Scalar>(r: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    let p = r.rows();
    assert_eq!(p, b.len());
    let mut u = vec![T::zero(); p];
    for k in 0..p {
        let mut s = b[k];
        for j in 0..k {
            s -= r.get(j, k) * u[j];
        }
        let d = r.get(k, k);
        if d == T::zero() {
            return Err(Error::Singular("singular triangular system".into()));
        }
        u[k] = s / d;
    }
    Ok(u)
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
