//! Small dense linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{cx, CMatrix, Real};

/// Frobenius norm of `m - m^H`.
pub fn hermitian_defect<T: Real>(m: &CMatrix<T>) -> T {
    (m - m.adjoint()).norm()
}

/// Checks `‖m − m^H‖ ≤ rel_tol·‖m‖` for a square matrix.
pub fn ensure_hermitian<T: Real>(m: &CMatrix<T>, rel_tol: T, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidCorrelation(format!("{what} is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    let defect = hermitian_defect(m);
    if defect > rel_tol * m.norm() {
        return Err(Error::InvalidCorrelation(format!("{what} is not Hermitian (defect {:.3e})", defect.as_f64())));
    }
    Ok(())
}

/// `(m + m^H) / 2`.
pub fn hermitize<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()).map(|z| z * T::lit(0.5))
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues (unordered) and
/// unit eigenvectors as columns.
pub fn hermitian_eigen<T: Real>(m: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let eig = SymmetricEigen::new(hermitize(m));
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Index and value of the largest entry.
pub(crate) fn argmax<T: Real>(values: &[T]) -> (usize, T) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    (best, values[best])
}

pub(crate) fn argmin<T: Real>(values: &[T]) -> (usize, T) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    (best, values[best])
}

/// Principal square root of a Hermitian PSD matrix; eigenvalues below zero are
/// clamped to zero.
pub fn hermitian_sqrt<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let (vals, vecs) = hermitian_eigen(m);
    let n = vals.len();
    let roots = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            cx(vals[i].max(T::zero()).sqrt(), T::zero())
        } else {
            cx(T::zero(), T::zero())
        }
    });
    &vecs * roots * vecs.adjoint()
}

/// Exponential correlation matrix with entries `rho^|i-j|`.
pub fn exponential_correlation<T: Real>(n: usize, rho: T) -> CMatrix<T> {
    DMatrix::from_fn(n, n, |i, j| {
        let d = i.abs_diff(j) as i32;
        cx(rho.powi(d), T::zero())
    })
}

/// Pairwise (tree) summation. The reduction order depends only on the slice
/// length, so results are reproducible for a fixed input order.
pub fn tree_sum<T: Real>(values: &[T]) -> T {
    match values.len() {
        0 => T::zero(),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            tree_sum(a) + tree_sum(b)
        }
    }
}

/// Real trace of `a·b` for Hermitian `a`, `b`, computed without forming the
/// product.
pub fn trace_product_re<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let mut acc = T::zero();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}
