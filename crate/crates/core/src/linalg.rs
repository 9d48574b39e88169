//! Dense and sparse helpers shared by the spectral modules.

use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

pub(crate) fn linalg_err(e: impl std::fmt::Debug) -> Error {
    Error::Linalg(format!("{e:?}"))
}

/// `(A + A^*) / 2`
pub fn hermitian_part(a: MatRef<'_, c64>) -> CMat {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_hermitian_eigenvalue(a: MatRef<'_, c64>) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let h = hermitian_part(a);
    let ev = h.self_adjoint_eigenvalues(Side::Lower).map_err(linalg_err)?;
    Ok(ev[0])
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower).map_err(linalg_err)
}

/// Singular values, non-increasing.
pub fn singular_values(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values().map_err(linalg_err)
}

pub fn spectral_norm(a: MatRef<'_, c64>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// `diag(left) * A * diag(right)`
pub fn scale_rows_cols(a: MatRef<'_, c64>, left: &[f64], right: &[f64]) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * (left[i] * right[j]))
}

pub fn adjoint(a: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Assembles a square sparse matrix, summing duplicate entries.
pub fn sparse_from_triplets<T>(n: usize, entries: &[(usize, usize, T)]) -> Result<SparseColMat<usize, T>>
where
    T: faer::traits::ComplexField + Copy,
{
    let trip: Vec<Triplet<usize, usize, T>> = entries.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    SparseColMat::try_new_from_triplets(n, n, &trip).map_err(linalg_err)
}

/// `y = A x` for a column-compressed matrix.
pub fn spmv<T>(a: &SparseColMat<usize, T>, x: &[T], y: &mut [T])
where
    T: Copy + Default + std::ops::Mul<Output = T> + std::ops::AddAssign,
{
    let col_ptr = a.col_ptr();
    let row_idx = a.row_idx();
    let val = a.val();
    y.iter_mut().for_each(|v| *v = T::default());
    for (j, &xj) in x.iter().enumerate() {
        for k in col_ptr[j]..col_ptr[j + 1] {
            y[row_idx[k]] += val[k] * xj;
        }
    }
}

pub fn sparse_to_complex(a: &SparseColMat<usize, f64>) -> Vec<(usize, usize, c64)> {
    let col_ptr = a.col_ptr();
    let row_idx = a.row_idx();
    let val = a.val();
    let mut out = Vec::with_capacity(val.len());
    for j in 0..a.ncols() {
        for k in col_ptr[j]..col_ptr[j + 1] {
            out.push((row_idx[k], j, c64::new(val[k], 0.0)));
        }
    }
    out
}

pub fn sparse_frobenius(a: &SparseColMat<usize, f64>) -> f64 {
    a.val().iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_part_of_anti_hermitian_is_zero() {
        let a = Mat::from_fn(4, 4, |i, j| {
            let x = c64::new(i as f64 - j as f64, (i + j) as f64);
            x
        });
        // a - a^* is anti-Hermitian
        let s = Mat::from_fn(4, 4, |i, j| a[(i, j)] - a[(j, i)].conj());
        assert!(frobenius(hermitian_part(s.as_ref()).as_ref()) < 1e-14);
    }

    #[test]
    fn spmv_sums_duplicates() {
        let a = sparse_from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1.0), (0, 1, -1.0)]).unwrap();
        let mut y = vec![0.0; 2];
        spmv(&a, &[1.0, 2.0], &mut y);
        assert_eq!(y, vec![1.0, 1.0]);
    }
}
