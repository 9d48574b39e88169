//! Two-dimensional acoustic eigenproblem with generalized impedance boundary
//! conditions, in second-order form
//! `P(λ) p = K p - iλ B_Z p - λ² M p = 0`.
//!
//! `K` and `M` are P1 stiffness (`α^{-1}`-weighted) and mass (`β`-weighted)
//! matrices. The boundary matrix is `B_Z = Gᵀ Z^ G` with
//! `G[n][j] = ∫ Y_n φ_j dΣ`: the L² coefficients of a trace in the
//! orthonormal eigenbasis are exactly `G p`, so no boundary mass inverse
//! enters.

mod arnoldi;
mod delaunay;
pub mod mesh;

use std::collections::HashMap;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::SparseColMat;
use faer::{c64, Mat, Side};
use serde::{Deserialize, Serialize};

pub use mesh::{annulus_mesh, disk_mesh, polygon_mesh, BoundaryLoop, DomainMesh};

use crate::error::{Error, Result};
use crate::fgf::{sample_random_impedance, RandomImpedanceSpec};
use crate::impedance::ImpedanceOperator;
use crate::linalg::{linalg_err, min_hermitian_eigenvalue, singular_values, sparse_frobenius, sparse_from_triplets, CMat};
use crate::multiplier::{tol_psd, TripleProductTensor};
use crate::par::map_indices;
use crate::quadrature::gauss_legendre_unit;
use crate::spectrum::{BoundarySpectrum, Modes};

const EDGE_QUADRATURE: usize = 8;

pub fn halfplane_tol(lambda: c64) -> f64 {
    1e-8 * (1.0 + lambda.norm())
}

fn zero() -> c64 {
    c64::new(0.0, 0.0)
}

fn real_times(a: &SparseColMat<usize, f64>, x: &[c64], y: &mut [c64]) {
    let (cp, ri, val) = (a.col_ptr(), a.row_idx(), a.val());
    y.iter_mut().for_each(|v| *v = zero());
    for (j, &xj) in x.iter().enumerate() {
        for k in cp[j]..cp[j + 1] {
            y[ri[k]] += xj * val[k];
        }
    }
}

fn vec_norm(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// P1 stiffness and mass matrices.
pub fn assemble_fem(mesh: &DomainMesh) -> Result<(SparseColMat<usize, f64>, SparseColMat<usize, f64>)> {
    let n = mesh.vertex_count();
    let local = map_indices(mesh.triangles.len(), |t| {
        let v = mesh.triangles[t];
        let p = v.map(|i| mesh.vertices[i]);
        let area = mesh.triangle_area(t);
        // Gradients of the barycentric coordinates.
        let g: [[f64; 2]; 3] = std::array::from_fn(|k| {
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)]
        });
        let [a11, a12, a22] = mesh.alpha[t];
        let det = a11 * a22 - a12 * a12;
        let inv = [a22 / det, -a12 / det, a11 / det];
        let mut k_loc = [[0.0; 3]; 3];
        let mut m_loc = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let gi = g[i];
                let gj = g[j];
                let ag = [inv[0] * gj[0] + inv[1] * gj[1], inv[1] * gj[0] + inv[2] * gj[1]];
                k_loc[i][j] = area * (gi[0] * ag[0] + gi[1] * ag[1]);
                m_loc[i][j] = mesh.beta[t] * area / 12.0 * if i == j { 2.0 } else { 1.0 };
            }
        }
        (v, k_loc, m_loc)
    });
    let mut kt = Vec::with_capacity(9 * local.len());
    let mut mt = Vec::with_capacity(9 * local.len());
    for (v, k_loc, m_loc) in &local {
        for i in 0..3 {
            for j in 0..3 {
                kt.push((v[i], v[j], k_loc[i][j]));
                mt.push((v[i], v[j], m_loc[i][j]));
            }
        }
    }
    Ok((sparse_from_triplets(n, &kt)?, sparse_from_triplets(n, &mt)?))
}

/// Boundary degrees of freedom, the trace coefficient matrix
/// `G[n][b] = ∫ Y_n φ_b dΣ` for the first `n_b` modes, and the boundary mass.
pub struct TraceProjection {
    pub boundary_dofs: Vec<usize>,
    pub g: Mat<f64>,
    pub boundary_mass: Mat<f64>,
}

pub fn trace_projection(mesh: &DomainMesh, spec: &BoundarySpectrum, n_b: usize) -> Result<TraceProjection> {
    let Modes::Curve(modes) = spec.modes() else {
        return Err(Error::GeometryMismatch("acoustic boundaries need curve spectra".into()));
    };
    if n_b > spec.count() {
        return Err(Error::TruncationExceeded { requested: n_b, available: spec.count() });
    }
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut dofs = Vec::new();
    for l in &mesh.boundary {
        for &v in &l.vertices {
            index.entry(v).or_insert_with(|| {
                dofs.push(v);
                dofs.len() - 1
            });
        }
    }
    let nb = dofs.len();
    let (nodes, weights) = gauss_legendre_unit(EDGE_QUADRATURE);
    let mut g = Mat::<f64>::zeros(n_b, nb);
    let mut mb = Mat::<f64>::zeros(nb, nb);
    for (c, l) in mesh.boundary.iter().enumerate() {
        let m = l.vertices.len();
        for i in 0..m {
            let (a, b) = (index[&l.vertices[i]], index[&l.vertices[(i + 1) % m]]);
            let s0 = l.arclength[i];
            let s1 = if i + 1 == m { l.length } else { l.arclength[i + 1] };
            let len = s1 - s0;
            mb[(a, a)] += len / 3.0;
            mb[(b, b)] += len / 3.0;
            mb[(a, b)] += len / 6.0;
            mb[(b, a)] += len / 6.0;
            for (n, mode) in modes[..n_b].iter().enumerate() {
                if mode.component != c {
                    continue;
                }
                for (&t, &w) in nodes.iter().zip(&weights) {
                    let y = mode.value(s0 + t * len) * w * len;
                    g[(n, a)] += y * (1.0 - t);
                    g[(n, b)] += y * t;
                }
            }
        }
    }
    Ok(TraceProjection { boundary_dofs: dofs, g, boundary_mass: mb })
}

/// `P(λ) = K - iλ B - λ² M`, with `B` stored on the boundary block.
#[derive(Clone, Debug)]
pub struct AcousticPencil {
    pub k: SparseColMat<usize, f64>,
    pub m: SparseColMat<usize, f64>,
    pub boundary_dofs: Vec<usize>,
    pub g: Mat<f64>,
    pub boundary_mass: Mat<f64>,
    /// `Gᵀ Z^ G` on the boundary DOFs.
    pub b: CMat,
    pub n_b: usize,
    pub domain_components: usize,
    k_norm: f64,
    m_norm: f64,
    b_norm: f64,
}

/// `min(64, boundary DOFs / 2)`.
pub fn default_n_b(mesh: &DomainMesh) -> usize {
    let nb: usize = mesh.boundary.iter().map(|l| l.vertices.len()).sum();
    (nb / 2).min(64)
}

pub fn assemble_pencil(
    mesh: &DomainMesh,
    spec: &Arc<BoundarySpectrum>,
    z: &ImpedanceOperator,
    n_b: Option<usize>,
) -> Result<AcousticPencil> {
    mesh.check_boundary(spec.geometry())?;
    let n_b = n_b.unwrap_or_else(|| default_n_b(mesh));
    if n_b > spec.count() {
        return Err(Error::TruncationExceeded { requested: n_b, available: spec.count() });
    }
    let (k, m) = assemble_fem(mesh)?;
    let tp = trace_projection(mesh, spec, n_b)?;
    let mut pencil = AcousticPencil {
        k_norm: sparse_frobenius(&k),
        m_norm: sparse_frobenius(&m),
        k,
        m,
        boundary_dofs: tp.boundary_dofs,
        g: tp.g,
        boundary_mass: tp.boundary_mass,
        b: Mat::zeros(0, 0),
        n_b,
        domain_components: mesh.component_count(),
        b_norm: 0.0,
    };
    pencil.set_impedance(z)?;
    Ok(pencil)
}

impl AcousticPencil {
    pub fn size(&self) -> usize {
        self.k.nrows()
    }

    /// Replaces the boundary operator, keeping `K`, `M` and `G`.
    pub fn with_impedance(&self, z: &ImpedanceOperator) -> Result<Self> {
        let mut p = self.clone();
        p.set_impedance(z)?;
        Ok(p)
    }

    fn set_impedance(&mut self, z: &ImpedanceOperator) -> Result<()> {
        if z.n_trunc() < self.n_b {
            return Err(Error::TruncationExceeded { requested: self.n_b, available: z.n_trunc() });
        }
        let zb = z.realized().as_ref().submatrix(0, 0, self.n_b, self.n_b);
        let gc = Mat::from_fn(self.g.nrows(), self.g.ncols(), |i, j| c64::new(self.g[(i, j)], 0.0));
        self.b = gc.transpose() * zb * &gc;
        self.b_norm = crate::linalg::frobenius(self.b.as_ref());
        Ok(())
    }

    /// `P(λ) p`.
    pub fn apply(&self, lambda: c64, p: &[c64]) -> Vec<c64> {
        let n = self.size();
        let mut kp = vec![zero(); n];
        let mut mp = vec![zero(); n];
        real_times(&self.k, p, &mut kp);
        real_times(&self.m, p, &mut mp);
        let l2 = lambda * lambda;
        let mut out: Vec<c64> = (0..n).map(|i| kp[i] - l2 * mp[i]).collect();
        let il = c64::new(0.0, 1.0) * lambda;
        for (bi, &i) in self.boundary_dofs.iter().enumerate() {
            let mut s = zero();
            for (bj, &j) in self.boundary_dofs.iter().enumerate() {
                s += self.b[(bi, bj)] * p[j];
            }
            out[i] -= il * s;
        }
        out
    }

    /// `||P(λ) p|| / ((||K|| + |λ| ||B|| + |λ|² ||M||) ||p||)`, Frobenius norms.
    pub fn backward_error(&self, lambda: c64, p: &[c64]) -> f64 {
        let r = vec_norm(&self.apply(lambda, p));
        let l = lambda.norm();
        r / ((self.k_norm + l * self.b_norm + l * l * self.m_norm) * vec_norm(p))
    }

    fn shifted_matrix(&self, sigma: c64) -> Result<SparseColMat<usize, c64>> {
        let (cp, ri, kv) = (self.k.col_ptr(), self.k.row_idx(), self.k.val());
        let mut t = Vec::with_capacity(2 * kv.len() + self.b.nrows() * self.b.ncols());
        for j in 0..self.size() {
            for q in cp[j]..cp[j + 1] {
                t.push((ri[q], j, c64::new(kv[q], 0.0)));
            }
        }
        let (cp, ri, mv) = (self.m.col_ptr(), self.m.row_idx(), self.m.val());
        let s2 = sigma * sigma;
        for j in 0..self.size() {
            for q in cp[j]..cp[j + 1] {
                t.push((ri[q], j, -s2 * mv[q]));
            }
        }
        let is = c64::new(0.0, 1.0) * sigma;
        for (bj, &j) in self.boundary_dofs.iter().enumerate() {
            for (bi, &i) in self.boundary_dofs.iter().enumerate() {
                t.push((i, j, -is * self.b[(bi, bj)]));
            }
        }
        sparse_from_triplets(self.size(), &t)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    pub residual_tol: f64,
    /// Eigenvalues with `|λ|` at most this belong to the zero cluster.
    pub zero_tol: f64,
    pub ritz_tol: f64,
    pub max_dim: Option<usize>,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { residual_tol: 1e-8, zero_tol: 1e-6, ritz_tol: 1e-12, max_dim: None, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct EigenReport {
    /// Sorted by modulus.
    pub eigenvalues: Vec<c64>,
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    /// Unit eigenvectors as columns.
    pub vectors: CMat,
    pub shift: c64,
    pub zero_cluster_size: usize,
    /// Every eigenvalue outside the zero cluster has `Im λ <= halfplane_tol(λ)`.
    pub in_lower_halfplane: bool,
    /// Every eigenvalue outside the zero cluster has `|Im λ| <= halfplane_tol(λ)`.
    pub real_within_tol: bool,
    pub q_factors: Vec<Option<f64>>,
    pub zero_tol: f64,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    eigenvalues_re: Vec<f64>,
    eigenvalues_im: Vec<f64>,
    residuals: &'a [f64],
    converged: &'a [bool],
    q_factors: &'a [Option<f64>],
    zero_cluster_size: usize,
    in_lower_halfplane: bool,
    real_within_tol: bool,
}

impl EigenReport {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    /// Largest `Im λ` outside the zero cluster (`-inf` when empty).
    pub fn max_imag(&self) -> f64 {
        self.eigenvalues
            .iter()
            .filter(|l| l.norm() > self.zero_tol)
            .map(|l| l.im)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rows `re,im,residual,q_factor,sample_id`, no header.
    pub fn csv_rows(&self, sample_id: u64) -> String {
        let mut s = String::new();
        for (i, l) in self.eigenvalues.iter().enumerate() {
            let q = self.q_factors[i].map(|q| q.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{},{}\n", l.re, l.im, self.residuals[i], q, sample_id));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        format!("re,im,residual,q_factor,sample_id\n{}", self.csv_rows(0))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ReportFile {
            eigenvalues_re: self.eigenvalues.iter().map(|l| l.re).collect(),
            eigenvalues_im: self.eigenvalues.iter().map(|l| l.im).collect(),
            residuals: &self.residuals,
            converged: &self.converged,
            q_factors: &self.q_factors,
            zero_cluster_size: self.zero_cluster_size,
            in_lower_halfplane: self.in_lower_halfplane,
            real_within_tol: self.real_within_tol,
        })?)
    }
}

/// The `n_wanted` eigenvalues nearest `shift`, by shift-invert Arnoldi on the
/// linearization `A x = λ E x`, `x = (p, λp)`,
/// `A = [[-K, 0], [0, -M]]`, `E = [[-iB, -M], [-M, 0]]`, which is complex
/// symmetric whenever `B` is.
pub fn solve_pencil(pencil: &AcousticPencil, n_wanted: usize, shift: c64, opts: &SolveOptions) -> Result<EigenReport> {
    let n = pencil.size();
    if n_wanted == 0 || n_wanted > 2 * n {
        return Err(Error::InvalidParameter(format!("n_wanted = {n_wanted} for a pencil of size {n}")));
    }
    let lu = pencil.shifted_matrix(shift)?.sp_lu().map_err(linalg_err)?;
    let probe = pencil.apply(shift, &vec![c64::new(1.0, 0.0); n]);
    if probe.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidParameter("non-finite pencil entries".into()));
    }
    let dofs = &pencil.boundary_dofs;
    let mut mv1 = vec![zero(); n];
    let mut mv2 = vec![zero(); n];
    let apply = |x: &[c64], y: &mut [c64]| -> Result<()> {
        let (v1, v2) = x.split_at(n);
        real_times(&pencil.m, v1, &mut mv1);
        real_times(&pencil.m, v2, &mut mv2);
        let mut rhs = Mat::from_fn(n, 1, |i, _| mv2[i] + shift * mv1[i]);
        let i = c64::new(0.0, 1.0);
        for (bi, &r) in dofs.iter().enumerate() {
            let mut s = zero();
            for (bj, &c) in dofs.iter().enumerate() {
                s += pencil.b[(bi, bj)] * v1[c];
            }
            rhs[(r, 0)] += i * s;
        }
        lu.solve_in_place(rhs.as_mut());
        for k in 0..n {
            y[k] = rhs[(k, 0)];
            y[n + k] = shift * rhs[(k, 0)] + v1[k];
        }
        if rhs.col(0).iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Linalg(format!("shift {shift} is (numerically) an eigenvalue")));
        }
        Ok(())
    };
    let max_dim = opts.max_dim.unwrap_or((8 * n_wanted).max(200)).min(2 * n);
    let pairs = arnoldi::largest_ritz_pairs(2 * n, apply, n_wanted, max_dim, opts.ritz_tol, opts.seed)?;

    let mut found: Vec<(c64, f64, Vec<c64>)> = pairs
        .into_iter()
        .map(|rp| {
            let lambda = shift + c64::new(1.0, 0.0) / rp.theta;
            let (x1, x2) = rp.vector.split_at(n);
            let mut p: Vec<c64> =
                if lambda.norm() <= 1.0 { x1.to_vec() } else { x2.iter().map(|v| *v / lambda).collect() };
            let np = vec_norm(&p);
            p.iter_mut().for_each(|v| *v /= np);
            let res = pencil.backward_error(lambda, &p);
            (lambda, res, p)
        })
        .collect();
    found.sort_by(|a, b| a.0.norm().total_cmp(&b.0.norm()).then(a.0.re.total_cmp(&b.0.re)));

    let eigenvalues: Vec<c64> = found.iter().map(|f| f.0).collect();
    let residuals: Vec<f64> = found.iter().map(|f| f.1).collect();
    let converged = residuals.iter().map(|&r| r <= opts.residual_tol).collect();
    let vectors = Mat::from_fn(n, found.len(), |i, j| found[j].2[i]);
    let outside = || eigenvalues.iter().filter(|l| l.norm() > opts.zero_tol);
    let zero_cluster_size = eigenvalues.iter().filter(|l| l.norm() <= opts.zero_tol).count();
    let in_lower_halfplane = outside().all(|l| l.im <= halfplane_tol(*l));
    let real_within_tol = outside().all(|l| l.im.abs() <= halfplane_tol(*l));
    let q_factors = eigenvalues
        .iter()
        .map(|l| if l.im < -halfplane_tol(*l) { Some(l.re.abs() / (-2.0 * l.im)) } else { None })
        .collect();
    Ok(EigenReport {
        eigenvalues,
        residuals,
        converged,
        vectors,
        shift,
        zero_cluster_size,
        in_lower_halfplane,
        real_within_tol,
        q_factors,
        zero_tol: opts.zero_tol,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ResolventPoint {
    pub z: [f64; 2],
    /// `||(A_h - z)^{-1}||` in the energy norm.
    pub norm: f64,
    pub bound: f64,
    pub violation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MdissReport {
    /// Smallest eigenvalue of `Herm(B_Z)`.
    pub herm_check: f64,
    pub herm_tol: f64,
    /// Largest `Im λ` outside the zero cluster.
    pub halfplane_check: f64,
    pub halfplane_ok: bool,
    pub resolvent: Vec<ResolventPoint>,
    pub max_violation: f64,
}

/// `z = x + iy` for `x ∈ {-3, 0, 3}`, `y ∈ {0.1, 1, 3}`.
pub fn default_resolvent_grid() -> Vec<c64> {
    let mut pts = Vec::new();
    for x in [-3.0, 0.0, 3.0] {
        for y in [0.1, 1.0, 3.0] {
            pts.push(c64::new(x, y));
        }
    }
    pts
}

/// First-order discrete operator in the energy inner product, in a basis
/// where it reads `[[-i U_bᵀ B U_b, -i Θ^{1/2}], [i Θ^{1/2}, 0]]`, with
/// `K U = M U Θ`, `Uᵀ M U = I`. Pressure and velocity energies are
/// `p* M p` and `|w|²` with `w = (i/λ) R p`, `RᵀR = K`.
pub fn energy_operator(pencil: &AcousticPencil) -> Result<CMat> {
    let n = pencil.size();
    let kd = pencil.k.to_dense();
    let md = pencil.m.to_dense();
    let llt = md.llt(Side::Lower).map_err(linalg_err)?;
    let l = llt.L();
    let mut x = kd.clone();
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut h = x.transpose().to_owned();
    l.solve_lower_triangular_in_place(h.as_mut());
    let hs = Mat::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    let evd = hs.self_adjoint_eigen(Side::Lower).map_err(linalg_err)?;
    let theta: Vec<f64> = evd.S().column_vector().iter().map(|t| t.max(0.0)).collect();
    let mut u = evd.U().to_owned();
    l.transpose().solve_upper_triangular_in_place(u.as_mut());
    let nb = pencil.boundary_dofs.len();
    let ub = Mat::from_fn(nb, n, |i, j| c64::new(u[(pencil.boundary_dofs[i], j)], 0.0));
    let bp = ub.transpose() * &pencil.b * &ub;
    let i = c64::new(0.0, 1.0);
    Ok(Mat::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, true) => -i * bp[(r, c)],
        (true, false) if c - n == r => -i * theta[r].sqrt(),
        (false, true) if r - n == c => i * theta[c].sqrt(),
        _ => zero(),
    }))
}

/// `||(A - z)^{-1}||` for each `z`.
pub fn resolvent_norms(a: &CMat, points: &[c64]) -> Result<Vec<f64>> {
    map_indices(points.len(), |k| {
        let z = points[k];
        let shifted = Mat::from_fn(a.nrows(), a.ncols(), |i, j| if i == j { a[(i, j)] - z } else { a[(i, j)] });
        let sv = singular_values(shifted.as_ref())?;
        Ok(1.0 / sv.last().copied().unwrap_or(f64::INFINITY))
    })
    .into_iter()
    .collect()
}

pub fn verify_mdissipativity(pencil: &AcousticPencil, report: &EigenReport, points: &[c64]) -> Result<MdissReport> {
    let herm_check = min_hermitian_eigenvalue(pencil.b.as_ref())?;
    let herm_tol = tol_psd(pencil.b.as_ref());
    let halfplane_check = report.max_imag();
    let resolvent = if points.is_empty() {
        Vec::new()
    } else {
        let a = energy_operator(pencil)?;
        let norms = resolvent_norms(&a, points)?;
        points
            .iter()
            .zip(norms)
            .map(|(z, norm)| {
                let bound = 1.0 / z.im;
                ResolventPoint { z: [z.re, z.im], norm, bound, violation: norm - bound }
            })
            .collect()
    };
    let max_violation = resolvent.iter().map(|p| p.violation).fold(f64::NEG_INFINITY, f64::max);
    Ok(MdissReport {
        herm_check,
        herm_tol,
        halfplane_check,
        halfplane_ok: report.in_lower_halfplane,
        resolvent,
        max_violation,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefinementTable {
    pub h: Vec<f64>,
    /// `values[level][k]` as `[re, im]`.
    pub values: Vec<Vec<[f64; 2]>>,
    /// Self-convergence order from the last three levels, per tracked value.
    pub orders: Vec<Option<f64>>,
    /// Error orders against `oracle` between consecutive levels.
    pub oracle_orders: Vec<Vec<f64>>,
    pub oracle_errors: Vec<Vec<f64>>,
    /// Smallest distance between distinct tracked values, per level.
    pub min_gap: Vec<f64>,
    /// Relative change of each tracked value over the last refinement.
    pub last_change: Vec<f64>,
    pub ambiguous: bool,
    pub all_converged: bool,
}

fn distinct(a: c64, b: c64) -> bool {
    (a - b).norm() > 1e-6 * (1.0 + a.norm())
}

/// Tracks the `n_track` nonzero eigenvalues of smallest modulus with
/// `Re λ >= 0` from the first (coarsest) level through the finer ones by
/// nearest-neighbour matching with gap-ratio guard 0.5.
pub fn refinement_study(
    levels: &[(f64, AcousticPencil)],
    n_track: usize,
    shift: c64,
    oracle: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<RefinementTable> {
    if levels.len() < 3 {
        return Err(Error::InvalidParameter(format!("{} meshes given, at least 3 needed", levels.len())));
    }
    let wanted = 2 * n_track + 6;
    let reports = levels
        .iter()
        .map(|(_, p)| solve_pencil(p, wanted.min(2 * p.size()), shift, opts))
        .collect::<Result<Vec<_>>>()?;
    let all_converged = reports.iter().all(|r| r.all_converged());
    let pick = |r: &EigenReport| -> Vec<c64> {
        r.eigenvalues
            .iter()
            .copied()
            .filter(|l| l.norm() > opts.zero_tol && l.re >= -halfplane_tol(*l))
            .collect()
    };
    let first = pick(&reports[0]);
    if first.len() < n_track {
        return Err(Error::InvalidParameter(format!("only {} trackable eigenvalues on the coarsest mesh", first.len())));
    }
    let mut current: Vec<c64> = first[..n_track].to_vec();
    let mut values = vec![current.clone()];
    let mut ambiguous = false;
    for r in &reports[1..] {
        let cands = pick(r);
        let mut used = vec![false; cands.len()];
        let mut next = Vec::with_capacity(n_track);
        for &t in &current {
            let best = (0..cands.len())
                .filter(|&c| !used[c])
                .min_by(|&a, &b| (cands[a] - t).norm().total_cmp(&(cands[b] - t).norm()));
            let Some(best) = best else {
                ambiguous = true;
                next.push(t);
                continue;
            };
            used[best] = true;
            let d1 = (cands[best] - t).norm();
            let d2 = (0..cands.len())
                .filter(|&c| !used[c] && distinct(cands[c], cands[best]))
                .map(|c| (cands[c] - t).norm())
                .fold(f64::INFINITY, f64::min);
            if d1 > 0.5 * d2 {
                ambiguous = true;
            }
            next.push(cands[best]);
        }
        values.push(next.clone());
        current = next;
    }
    let h: Vec<f64> = levels.iter().map(|l| l.0).collect();
    let nl = levels.len();
    let orders = (0..n_track)
        .map(|k| {
            let e1 = (values[nl - 2][k] - values[nl - 3][k]).norm();
            let e2 = (values[nl - 1][k] - values[nl - 2][k]).norm();
            let r = h[nl - 2] / h[nl - 1];
            (e1 > 0.0 && e2 > 0.0).then(|| (e1 / e2).ln() / r.ln())
        })
        .collect();
    let (oracle_errors, oracle_orders) = match oracle {
        Some(o) => {
            let errs: Vec<Vec<f64>> =
                (0..n_track.min(o.len())).map(|k| values.iter().map(|v| (v[k] - o[k]).norm() / o[k].abs()).collect()).collect();
            let ords = errs
                .iter()
                .map(|e| (1..nl).map(|l| (e[l - 1] / e[l]).ln() / (h[l - 1] / h[l]).ln()).collect())
                .collect();
            (errs, ords)
        }
        None => (Vec::new(), Vec::new()),
    };
    let min_gap = values
        .iter()
        .map(|v| {
            let mut g = f64::INFINITY;
            for i in 0..v.len() {
                for j in 0..i {
                    if distinct(v[i], v[j]) {
                        g = g.min((v[i] - v[j]).norm());
                    }
                }
            }
            g
        })
        .collect();
    let last_change = (0..n_track)
        .map(|k| (values[nl - 1][k] - values[nl - 2][k]).norm() / values[nl - 1][k].norm())
        .collect();
    Ok(RefinementTable {
        h,
        values: values.iter().map(|v| v.iter().map(|l| [l.re, l.im]).collect()).collect(),
        orders,
        oracle_orders,
        oracle_errors,
        min_gap,
        last_change,
        ambiguous,
        all_converged,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub seed: u64,
    pub halfplane_ok: bool,
    pub real_spectrum: bool,
    pub max_imag: f64,
    pub all_converged: bool,
    pub eigenvalues: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub samples: Vec<SampleOutcome>,
    pub fraction_halfplane: f64,
    pub fraction_real: f64,
    pub failures: usize,
    /// `1.0` always, and real fraction `1.0` iff there is no kernel part.
    pub passed: bool,
}

impl EnsembleReport {
    /// Rows `re,im,residual,q_factor,sample_id` with header.
    pub fn cloud_csv(&self) -> String {
        let mut s = String::from("re,im,residual,q_factor,sample_id\n");
        for o in &self.samples {
            for (l, r) in o.eigenvalues.iter().zip(&o.residuals) {
                let q = if l[1] < -1e-8 * (1.0 + l[0].hypot(l[1])) { (l[0].abs() / (-2.0 * l[1])).to_string() } else { String::new() };
                s.push_str(&format!("{},{},{},{},{}\n", l[0], l[1], r, q, o.seed));
            }
        }
        s
    }
}

/// Spectra of `n_samples` random impedances `seeds..seeds + n_samples`.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_spectrum(
    pencil: &AcousticPencil,
    tensor: &TripleProductTensor,
    rspec: &RandomImpedanceSpec,
    n_samples: usize,
    seeds: u64,
    n_wanted: usize,
    shift: c64,
    opts: &SolveOptions,
) -> Result<EnsembleReport> {
    rspec.validate()?;
    let spec = tensor.spectrum().clone();
    if spec.dim_ambient() != 2 {
        return Err(Error::InvalidParameter("Monte Carlo spectra need a planar domain".into()));
    }
    let samples = map_indices(n_samples, |i| {
        let seed = seeds.wrapping_add(i as u64);
        let run = || -> Result<EigenReport> {
            let zeta = sample_random_impedance(spec.clone(), rspec, spec.count(), seed)?;
            let z = ImpedanceOperator::multiplier_with(tensor, &zeta, pencil.n_b)?;
            solve_pencil(&pencil.with_impedance(&z)?, n_wanted, shift, opts)
        };
        match run() {
            Ok(r) => SampleOutcome {
                seed,
                halfplane_ok: r.in_lower_halfplane,
                real_spectrum: r.real_within_tol,
                max_imag: r.max_imag(),
                all_converged: r.all_converged(),
                eigenvalues: r.eigenvalues.iter().map(|l| [l.re, l.im]).collect(),
                residuals: r.residuals.clone(),
                error: None,
            },
            Err(e) => SampleOutcome {
                seed,
                halfplane_ok: false,
                real_spectrum: false,
                max_imag: f64::NAN,
                all_converged: false,
                eigenvalues: Vec::new(),
                residuals: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    });
    let ok: Vec<&SampleOutcome> = samples.iter().filter(|s| s.error.is_none()).collect();
    let failures = samples.len() - ok.len();
    let frac = |f: &dyn Fn(&SampleOutcome) -> bool| {
        if ok.is_empty() {
            0.0
        } else {
            ok.iter().filter(|s| f(s)).count() as f64 / ok.len() as f64
        }
    };
    let fraction_halfplane = frac(&|s| s.halfplane_ok);
    let fraction_real = frac(&|s| s.real_spectrum);
    let expected_real = if rspec.has_kernel_part() { 0.0 } else { 1.0 };
    let passed = failures == 0 && fraction_halfplane == 1.0 && fraction_real == expected_real;
    Ok(EnsembleReport { samples, fraction_halfplane, fraction_real, failures, passed })
}

/// Spectrum of the mesh boundary with `count` modes.
pub fn boundary_spectrum(mesh: &DomainMesh, count: usize) -> Result<Arc<BoundarySpectrum>> {
    Ok(Arc::new(crate::spectrum::build_curve_spectrum(&mesh.boundary_geometry()?, count)?))
}
