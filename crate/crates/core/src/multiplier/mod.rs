//! Truncated multiplication operators in the eigenbasis.

mod cantor;
mod lq;
mod tensor;

use std::sync::Arc;

use faer::{c64, Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use cantor::{cantor_measure_coeffs, DEFAULT_CANTOR_SAMPLES};
pub use lq::{lq_embedding_case, LqCase, LqEmbeddingQuery, LqVerdict};
pub use tensor::TripleProductTensor;

use crate::error::{Error, Result};
use crate::function::SpectralFunction;
use crate::linalg::{frobenius, linalg_err, min_hermitian_eigenvalue, scale_rows_cols, singular_values, CMat};
use crate::spectrum::BoundarySpectrum;

/// Relative PSD tolerance `1e-10 * ||A||_F` (absolute `1e-10` for `A = 0`).
pub fn tol_psd(a: faer::MatRef<'_, c64>) -> f64 {
    let f = frobenius(a);
    if f > 0.0 {
        1e-10 * f
    } else {
        1e-10
    }
}

/// Compression `A[m][n] = <phi Y_n, Y_m>` of multiplication by `phi`, tagged
/// with the Sobolev pair of the intended mapping `H^{s1} -> H^{-s2}`.
#[derive(Clone, Debug)]
pub struct MultiplierMatrix {
    spectrum: Arc<BoundarySpectrum>,
    matrix: CMat,
    pub s1: f64,
    pub s2: f64,
}

impl MultiplierMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn n_trunc(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectrum(&self) -> &Arc<BoundarySpectrum> {
        &self.spectrum
    }

    /// `diag(w(-s2)) A diag(w(s1))^{-1}`: the matrix whose spectral norm is
    /// the operator norm `H^{s1} -> H^{-s2}` on the truncation.
    pub fn weighted(&self) -> CMat {
        let n = self.n_trunc();
        let out = &self.spectrum.ht_weights(-self.s2)[..n];
        let inp: Vec<f64> = self.spectrum.ht_weights(self.s1)[..n].iter().map(|w| 1.0 / w).collect();
        scale_rows_cols(self.matrix.as_ref(), out, &inp)
    }

    /// Same matrix, different Sobolev bookkeeping.
    pub fn with_exponents(&self, s1: f64, s2: f64) -> Self {
        MultiplierMatrix { s1, s2, ..self.clone() }
    }
}

pub fn build_multiplier(phi: &SpectralFunction, s1: f64, s2: f64, n_trunc: usize) -> Result<MultiplierMatrix> {
    let tensor = TripleProductTensor::new(phi.spectrum().clone());
    build_multiplier_with(&tensor, phi, s1, s2, n_trunc)
}

/// [`build_multiplier`] reusing a tensor built on `phi`'s spectrum.
pub fn build_multiplier_with(
    tensor: &TripleProductTensor,
    phi: &SpectralFunction,
    s1: f64,
    s2: f64,
    n_trunc: usize,
) -> Result<MultiplierMatrix> {
    let spec = phi.spectrum();
    if n_trunc > spec.count() {
        return Err(Error::TruncationExceeded { requested: n_trunc, available: spec.count() });
    }
    if !Arc::ptr_eq(spec, tensor.spectrum()) && spec.mu() != tensor.spectrum().mu() {
        return Err(Error::InvalidParameter("tensor and function live on different spectra".into()));
    }
    Ok(MultiplierMatrix { spectrum: spec.clone(), matrix: tensor.contract(phi.coeffs(), n_trunc), s1, s2 })
}

pub fn multiplier_norm(a: &MultiplierMatrix) -> Result<f64> {
    Ok(singular_values(a.weighted().as_ref())?.first().copied().unwrap_or(0.0))
}

/// Singular values of the weighted matrix at 1-based `ranks`.
pub fn compactness_profile(a: &MultiplierMatrix, ranks: &[usize]) -> Result<Vec<f64>> {
    let sv = singular_values(a.weighted().as_ref())?;
    ranks
        .iter()
        .map(|&k| {
            if k == 0 || k > sv.len() {
                Err(Error::InvalidParameter(format!("rank {k} outside 1..={}", sv.len())))
            } else {
                Ok(sv[k - 1])
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub is_nonneg: bool,
    pub min_eig: f64,
    pub tol: f64,
}

/// Smallest eigenvalue of the Hermitian part of the unweighted multiplier.
pub fn positivity_test(phi: &SpectralFunction, n_trunc: usize) -> Result<PositivityReport> {
    let a = build_multiplier(phi, 0.0, 0.0, n_trunc)?;
    let min_eig = min_hermitian_eigenvalue(a.matrix.as_ref())?;
    let tol = tol_psd(a.matrix.as_ref());
    Ok(PositivityReport { is_nonneg: min_eig >= -tol, min_eig, tol })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub passed: bool,
    /// Smallest `<re z, |g|^2> / ||g||^2` over the test functions.
    pub min_value: f64,
    pub tol: f64,
    pub tests: usize,
}

/// `<re z, |g|^2> >= -tol` for `test_count` band-limited test functions `g`
/// in the span of the first `z.len()` modes.
pub fn accretivity_integral_test(z: &SpectralFunction, test_count: usize, seed: u64) -> Result<bool> {
    Ok(accretivity_integral_report(z, z.len(), test_count, seed)?.passed)
}

/// Integral form of the accretivity condition.
///
/// The pairing is evaluated through the coefficients of `|g|^2`. Test
/// functions are random Gaussian combinations plus the lowest Ritz vectors of
/// a Krylov search of dimension `test_count`; with `test_count >= band` the
/// search space is the whole band.
pub fn accretivity_integral_report(
    z: &SpectralFunction,
    band: usize,
    test_count: usize,
    seed: u64,
) -> Result<IntegralReport> {
    if band == 0 || band > z.len() {
        return Err(Error::TruncationExceeded { requested: band, available: z.len() });
    }
    let tensor = TripleProductTensor::new(z.spectrum().clone());
    let re_z: Vec<f64> = z.coeffs().iter().map(|c| c.re).collect();
    let re_zc: Vec<c64> = re_z.iter().map(|&x| c64::new(x, 0.0)).collect();
    let a_re = tensor.contract(&re_zc, band);
    let tol = tol_psd(a_re.as_ref());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut tests: Vec<Vec<c64>> =
        (0..test_count).map(|_| (0..band).map(|_| c64::new(gauss(), gauss())).collect()).collect();
    let start: Vec<c64> = (0..band).map(|_| c64::new(gauss(), 0.0)).collect();
    tests.extend(krylov_low_ritz(&a_re, start, test_count.max(1).min(band))?);

    let mut min_value = f64::INFINITY;
    for g in &tests {
        let norm2: f64 = g.iter().map(|c| c.norm_sqr()).sum();
        if norm2 == 0.0 {
            continue;
        }
        let h = tensor.square_coeffs(g, z.len());
        let pairing: f64 = re_z.iter().zip(&h).map(|(a, b)| a * b).sum();
        min_value = min_value.min(pairing / norm2);
    }
    Ok(IntegralReport { passed: min_value >= -tol, min_value, tol, tests: tests.len() })
}

/// Lowest Ritz vectors (up to two) of a real symmetric matrix from a
/// fully reorthogonalized Krylov space of dimension `dim`.
fn krylov_low_ritz(a: &CMat, start: Vec<c64>, dim: usize) -> Result<Vec<Vec<c64>>> {
    let n = a.nrows();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut v: Vec<f64> = start.iter().map(|c| c.re).collect();
    let mut restart = 1u64;
    while basis.len() < dim {
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..2 {
            for b in &basis {
                let h: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= h * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-10 * norm0 || norm == 0.0 {
            // Invariant subspace: continue from a fresh deterministic direction.
            v = (0..n).map(|i| ((i as u64 * 7919 + restart * 104729) % 1000) as f64 / 1000.0 - 0.5).collect();
            restart += 1;
            if restart > 8 {
                break;
            }
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v.clone());
        v = (0..n).map(|i| (0..n).map(|j| a[(i, j)].re * v[j]).sum()).collect();
    }
    let k = basis.len();
    let vmat = Mat::from_fn(n, k, |i, j| basis[j][i]);
    let av = Mat::from_fn(n, k, |i, j| (0..n).map(|l| a[(i, l)].re * vmat[(l, j)]).sum::<f64>());
    let t = vmat.transpose() * &av;
    let t = Mat::from_fn(k, k, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
    let evd = t.self_adjoint_eigen(Side::Lower).map_err(linalg_err)?;
    let u = evd.U();
    Ok((0..k.min(2))
        .map(|c| (0..n).map(|i| c64::new((0..k).map(|j| vmat[(i, j)] * u[(j, c)]).sum(), 0.0)).collect())
        .collect())
}
