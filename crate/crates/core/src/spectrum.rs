//! Laplace–Beltrami eigenpairs of closed boundaries.
//!
//! Curves are handled in closed form: on a component of length `L` the
//! operator is `-d²/ds²` with eigenvalues `(2 pi k / L)²`. Surfaces use P1
//! finite elements (cotangent stiffness, lumped or consistent mass).

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::io::{Read, Write};

use faer::sparse::SparseColMat;
use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cross3, dot3, norm3, sub3, BoundaryGeometry, TriSurface};
use crate::lanczos::{pencil_residuals, smallest_eigenpairs, LanczosOptions, MassOperator};
use crate::linalg::{linalg_err, sparse_from_triplets};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveModeKind {
    Constant,
    Cos,
    Sin,
}

/// Arclength Fourier mode on one curve component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveMode {
    pub component: usize,
    pub kind: CurveModeKind,
    pub k: usize,
    pub length: f64,
}

impl CurveMode {
    /// Angular frequency `2 pi k / L`.
    pub fn frequency(&self) -> f64 {
        2.0 * PI * self.k as f64 / self.length
    }

    pub fn eigenvalue(&self) -> f64 {
        match self.kind {
            CurveModeKind::Constant => 0.0,
            _ => self.frequency().powi(2),
        }
    }

    /// Value at arclength `s` on the mode's own component.
    pub fn value(&self, s: f64) -> f64 {
        let l = self.length;
        match self.kind {
            CurveModeKind::Constant => l.powf(-0.5),
            CurveModeKind::Cos => (2.0 / l).sqrt() * (self.frequency() * s).cos(),
            CurveModeKind::Sin => (2.0 / l).sqrt() * (self.frequency() * s).sin(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Modes {
    Curve(Vec<CurveMode>),
    /// Vertex values, one column per mode, mass-orthonormal.
    Nodal(Mat<f64>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassKind {
    #[default]
    Lumped,
    Consistent,
}

#[derive(Clone, Debug)]
pub struct SurfaceSolverOptions {
    pub mass: MassKind,
    pub lanczos: LanczosOptions,
    /// Meshes with at most this many vertices are solved densely.
    pub dense_below: usize,
}

impl Default for SurfaceSolverOptions {
    fn default() -> Self {
        SurfaceSolverOptions { mass: MassKind::Lumped, lanczos: LanczosOptions::default(), dense_below: 600 }
    }
}

#[derive(Clone, Debug)]
struct SurfaceData {
    mass: MassKind,
    lumped: Vec<f64>,
    consistent: Option<SparseColMat<usize, f64>>,
    labels: Vec<usize>,
}

/// Truncated eigen-decomposition of the Laplace–Beltrami operator of a
/// closed boundary. Immutable once built.
#[derive(Clone, Debug)]
pub struct BoundarySpectrum {
    geometry: BoundaryGeometry,
    mu: Vec<f64>,
    modes: Modes,
    b0: usize,
    residuals: Vec<f64>,
    surface: Option<SurfaceData>,
}

impl BoundarySpectrum {
    pub fn geometry(&self) -> &BoundaryGeometry {
        &self.geometry
    }

    pub fn count(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn b0(&self) -> usize {
        self.b0
    }

    pub fn modes(&self) -> &Modes {
        &self.modes
    }

    pub fn dim_ambient(&self) -> usize {
        self.geometry.dim_ambient()
    }

    pub fn total_measure(&self) -> f64 {
        self.geometry.total_measure()
    }

    /// Eigen-residuals (zero for the closed-form curve spectra).
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn mass_kind(&self) -> Option<MassKind> {
        self.surface.as_ref().map(|s| s.mass)
    }

    /// Lumped vertex masses (surfaces only).
    pub fn vertex_masses(&self) -> Option<&[f64]> {
        self.surface.as_ref().map(|s| s.lumped.as_slice())
    }

    pub fn consistent_mass(&self) -> Option<&SparseColMat<usize, f64>> {
        self.surface.as_ref().and_then(|s| s.consistent.as_ref())
    }

    /// Curve mode descriptor `n` (0-based).
    pub fn curve_mode(&self, n: usize) -> Option<&CurveMode> {
        match &self.modes {
            Modes::Curve(m) => m.get(n),
            Modes::Nodal(_) => None,
        }
    }

    /// Nodal values of all modes (surfaces only).
    pub fn nodal_modes(&self) -> Option<MatRef<'_, f64>> {
        match &self.modes {
            Modes::Nodal(m) => Some(m.as_ref()),
            Modes::Curve(_) => None,
        }
    }

    /// The first `n` eigenpairs as a spectrum of their own.
    pub fn truncated(&self, n: usize) -> Result<BoundarySpectrum> {
        if n < self.b0 {
            return Err(Error::TruncationBelowKernel { requested: n, b0: self.b0 });
        }
        if n > self.count() {
            return Err(Error::TruncationExceeded { requested: n, available: self.count() });
        }
        let modes = match &self.modes {
            Modes::Curve(m) => Modes::Curve(m[..n].to_vec()),
            Modes::Nodal(m) => Modes::Nodal(m.subcols(0, n).to_owned()),
        };
        Ok(BoundarySpectrum {
            geometry: self.geometry.clone(),
            mu: self.mu[..n].to_vec(),
            modes,
            b0: self.b0,
            residuals: self.residuals[..n].to_vec(),
            surface: self.surface.clone(),
        })
    }

    /// `G[m][n] = ∫ Y_m Y_n dΣ`, evaluated independently of the construction
    /// (uniform trapezoid rule on curves, exact for the retained band; the
    /// mass matrix on surfaces).
    pub fn gram_matrix(&self) -> Mat<f64> {
        let n = self.count();
        match &self.modes {
            Modes::Curve(modes) => {
                let mut g = Mat::<f64>::zeros(n, n);
                let comps = self.geometry.component_count();
                for j in 0..comps {
                    let idx: Vec<usize> = (0..n).filter(|&i| modes[i].component == j).collect();
                    if idx.is_empty() {
                        continue;
                    }
                    let kmax = idx.iter().map(|&i| modes[i].k).max().unwrap_or(0);
                    let p = (2 * kmax + 2).max(16);
                    let l = modes[idx[0]].length;
                    let w = l / p as f64;
                    for q in 0..p {
                        let s = l * q as f64 / p as f64;
                        let vals: Vec<f64> = idx.iter().map(|&i| modes[i].value(s)).collect();
                        for (a, &ia) in idx.iter().enumerate() {
                            for (b, &ib) in idx.iter().enumerate() {
                                g[(ia, ib)] += w * vals[a] * vals[b];
                            }
                        }
                    }
                }
                g
            }
            Modes::Nodal(y) => {
                let surf = self.surface.as_ref().expect("surface data");
                let my = match &surf.consistent {
                    Some(mm) if surf.mass == MassKind::Consistent => MassOperator::Sparse(mm).apply_mat(y.as_ref()),
                    _ => MassOperator::Diagonal(&surf.lumped).apply_mat(y.as_ref()),
                };
                y.transpose() * &my
            }
        }
    }

    /// `max |G - I|` over the Gram matrix.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.gram_matrix();
        let mut e: f64 = 0.0;
        for j in 0..g.ncols() {
            for i in 0..g.nrows() {
                e = e.max((g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        e
    }

    /// Default orthonormality tolerance for this kind of spectrum.
    pub fn tol_orth(&self) -> f64 {
        match self.modes {
            Modes::Curve(_) => 1e-10,
            Modes::Nodal(_) => 1e-8,
        }
    }

    /// `w_n(t)` for every retained mode.
    pub fn ht_weights(&self, t: f64) -> Vec<f64> {
        self.mu.iter().enumerate().map(|(n, &mu)| ht_weight(mu, t, n < self.b0)).collect()
    }

    /// CSV with columns `n,mu_n` (1-based `n`).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,mu_n\n");
        for (i, mu) in self.mu.iter().enumerate() {
            s.push_str(&format!("{},{:.17e}\n", i + 1, mu));
        }
        s
    }

    /// Binary dump: eigenvalues, residuals and (for surfaces) nodal modes,
    /// little-endian. Curve modes are not stored; they follow from the geometry.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        let rows = self.nodal_modes().map(|m| m.nrows()).unwrap_or(0);
        let mass = match self.mass_kind() {
            None => 0u64,
            Some(MassKind::Lumped) => 1,
            Some(MassKind::Consistent) => 2,
        };
        for v in [self.count() as u64, self.b0 as u64, rows as u64, mass] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.mu.iter().chain(&self.residuals) {
            w.write_all(&v.to_le_bytes())?;
        }
        if let Some(m) = self.nodal_modes() {
            for c in 0..m.ncols() {
                for r in 0..m.nrows() {
                    w.write_all(&m[(r, c)].to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// Inverse of [`write_binary`](Self::write_binary); `geometry` must be the
    /// geometry the dump was made from.
    pub fn read_binary(geometry: BoundaryGeometry, r: &mut impl Read) -> Result<BoundarySpectrum> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::InvalidParameter("not a spectrum dump".into()));
        }
        let mut u = || -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let (count, b0, rows, mass) = (u()? as usize, u()? as usize, u()? as usize, u()?);
        let mut f = |len: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(len);
            let mut b = [0u8; 8];
            for _ in 0..len {
                r.read_exact(&mut b)?;
                out.push(f64::from_le_bytes(b));
            }
            Ok(out)
        };
        let mu = f(count)?;
        let residuals = f(count)?;
        match &geometry {
            BoundaryGeometry::Curves(_) => {
                let spec = build_curve_spectrum(&geometry, count)?;
                if spec.b0 != b0 || spec.mu != mu {
                    return Err(Error::GeometryMismatch("cached curve spectrum differs".into()));
                }
                Ok(spec)
            }
            BoundaryGeometry::Surface(s) => {
                if rows != s.vertices.len() {
                    return Err(Error::GeometryMismatch("vertex count differs from cached spectrum".into()));
                }
                let data = f(rows * count)?;
                let kind = if mass == 2 { MassKind::Consistent } else { MassKind::Lumped };
                let surface = surface_data(s, kind)?;
                Ok(BoundarySpectrum {
                    geometry: geometry.clone(),
                    mu,
                    modes: Modes::Nodal(Mat::from_fn(rows, count, |i, c| data[c * rows + i])),
                    b0,
                    residuals,
                    surface: Some(surface),
                })
            }
        }
    }
}

const MAGIC: &[u8; 8] = b"GIBCSPC1";

/// Graph-norm weight `w(t)`: `(mu^t + 1)^{1/2}` for `t >= 0`,
/// `(mu^{-t} + 1)^{-1/2}` for `t < 0`; kernel modes always weigh 1.
pub fn ht_weight(mu: f64, t: f64, kernel: bool) -> f64 {
    if kernel {
        return 1.0;
    }
    if t >= 0.0 {
        (mu.powf(t) + 1.0).sqrt()
    } else {
        (mu.powf(-t) + 1.0).powf(-0.5)
    }
}

/// The N smallest eigenpairs of a union of closed curves, in closed form.
pub fn build_curve_spectrum(geom: &BoundaryGeometry, n: usize) -> Result<BoundarySpectrum> {
    let BoundaryGeometry::Curves(comps) = geom else {
        return Err(Error::InvalidGeometry("curve spectrum needs a d = 2 geometry".into()));
    };
    let b0 = comps.len();
    if n < b0 {
        return Err(Error::TruncationBelowKernel { requested: n, b0 });
    }
    let mut cands = Vec::new();
    for (j, c) in comps.iter().enumerate() {
        let length = c.length();
        if !(length > 0.0) {
            return Err(Error::DegenerateComponent { component: j });
        }
        cands.push(CurveMode { component: j, kind: CurveModeKind::Constant, k: 0, length });
        for k in 1..=n.div_ceil(2) {
            cands.push(CurveMode { component: j, kind: CurveModeKind::Cos, k, length });
            cands.push(CurveMode { component: j, kind: CurveModeKind::Sin, k, length });
        }
    }
    let rank = |k: CurveModeKind| match k {
        CurveModeKind::Constant => 0,
        CurveModeKind::Cos => 1,
        CurveModeKind::Sin => 2,
    };
    cands.sort_by(|a, b| {
        a.eigenvalue()
            .total_cmp(&b.eigenvalue())
            .then(a.component.cmp(&b.component))
            .then(rank(a.kind).cmp(&rank(b.kind)))
            .then(a.k.cmp(&b.k))
    });
    cands.truncate(n);
    Ok(BoundarySpectrum {
        geometry: geom.clone(),
        mu: cands.iter().map(CurveMode::eigenvalue).collect(),
        residuals: vec![0.0; n],
        modes: Modes::Curve(cands),
        b0,
        surface: None,
    })
}

/// Cotangent stiffness matrix `S_ij = ∫ ∇φ_i · ∇φ_j`.
pub fn cotangent_stiffness(s: &TriSurface) -> Result<SparseColMat<usize, f64>> {
    let mut e = Vec::with_capacity(9 * s.triangles.len());
    for tri in &s.triangles {
        let p = tri.map(|i| s.vertices[i]);
        for c in 0..3 {
            // Edge (a, b) opposite corner c.
            let (a, b) = ((c + 1) % 3, (c + 2) % 3);
            let u = sub3(p[a], p[c]);
            let v = sub3(p[b], p[c]);
            let cot = dot3(u, v) / norm3(cross3(u, v));
            let w = 0.5 * cot;
            let (i, j) = (tri[a], tri[b]);
            e.push((i, j, -w));
            e.push((j, i, -w));
            e.push((i, i, w));
            e.push((j, j, w));
        }
    }
    sparse_from_triplets(s.vertices.len(), &e)
}

/// Consistent P1 mass matrix.
pub fn consistent_mass(s: &TriSurface) -> Result<SparseColMat<usize, f64>> {
    let mut e = Vec::with_capacity(9 * s.triangles.len());
    for (t, tri) in s.triangles.iter().enumerate() {
        let area = s.triangle_area(t);
        for a in 0..3 {
            for b in 0..3 {
                e.push((tri[a], tri[b], if a == b { area / 6.0 } else { area / 12.0 }));
            }
        }
    }
    sparse_from_triplets(s.vertices.len(), &e)
}

fn surface_data(s: &TriSurface, mass: MassKind) -> Result<SurfaceData> {
    Ok(SurfaceData {
        mass,
        lumped: s.vertex_masses(),
        consistent: match mass {
            MassKind::Consistent => Some(consistent_mass(s)?),
            MassKind::Lumped => None,
        },
        labels: s.component_labels().0,
    })
}

/// The N smallest eigenpairs of the P1 Laplace–Beltrami operator on a closed
/// triangulated surface.
pub fn build_surface_spectrum(
    geom: &BoundaryGeometry,
    n: usize,
    opts: &SurfaceSolverOptions,
) -> Result<BoundarySpectrum> {
    let BoundaryGeometry::Surface(surf) = geom else {
        return Err(Error::InvalidGeometry("surface spectrum needs a d = 3 geometry".into()));
    };
    let nv = surf.vertices.len();
    let data = surface_data(surf, opts.mass)?;
    let b0 = geom.component_count();
    if n < b0 {
        return Err(Error::TruncationBelowKernel { requested: n, b0 });
    }
    if n > nv / 2 {
        return Err(Error::TruncationExceeded { requested: n, available: nv / 2 });
    }
    let stiff = cotangent_stiffness(surf)?;
    let mass_op = match &data.consistent {
        Some(m) => MassOperator::Sparse(m),
        None => MassOperator::Diagonal(&data.lumped),
    };

    let (mut mu, mut y) = if nv <= opts.dense_below {
        dense_pencil(&stiff, mass_op, n)?
    } else {
        let shift = 1.0 / geom.total_measure();
        let r = smallest_eigenpairs(&stiff, mass_op, n, shift, &opts.lanczos)?;
        (r.values, r.vectors)
    };

    // Kernel: exact zeros with normalized component indicators.
    let measures = geom.component_measures();
    let mut indicators = Mat::<f64>::zeros(nv, b0);
    for v in 0..nv {
        let j = data.labels[v];
        indicators[(v, j)] = measures[j].powf(-0.5);
    }
    let m_ind = mass_op.apply_mat(indicators.as_ref());
    // Remove any kernel component left in the other modes.
    let tail = y.subcols(b0, n - b0).to_owned();
    let h = m_ind.transpose() * &tail;
    let mut tail = tail - &indicators * &h;
    let m_tail = mass_op.apply_mat(tail.as_ref());
    for c in 0..tail.ncols() {
        let norm: f64 = (0..nv).map(|i| tail[(i, c)] * m_tail[(i, c)]).sum::<f64>().sqrt();
        let col: Vec<f64> = tail.col(c).iter().copied().collect();
        let scale = sign_of_first(&col) / norm;
        for i in 0..nv {
            tail[(i, c)] *= scale;
        }
    }
    y.subcols_mut(0, b0).copy_from(&indicators);
    y.subcols_mut(b0, n - b0).copy_from(&tail);
    for v in mu.iter_mut().take(b0) {
        *v = 0.0;
    }
    let residuals = pencil_residuals(&stiff, mass_op, &mu, y.as_ref());
    Ok(BoundarySpectrum { geometry: geom.clone(), mu, modes: Modes::Nodal(y), b0, residuals, surface: Some(data) })
}

fn sign_of_first(vals: &[f64]) -> f64 {
    let max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    vals.iter().find(|v| v.abs() > 1e-8 * max).map(|v| v.signum()).unwrap_or(1.0)
}

fn dense_pencil(s: &SparseColMat<usize, f64>, m: MassOperator<'_>, n: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    let nv = s.nrows();
    let sd = s.to_dense();
    // M^{-1/2}
    let (m_half_inv, m_diag) = match m {
        MassOperator::Diagonal(d) => (None, Some(d)),
        MassOperator::Sparse(mm) => {
            let evd = mm.to_dense().self_adjoint_eigen(Side::Lower).map_err(linalg_err)?;
            let u = evd.U();
            let d = evd.S().column_vector();
            let scaled = Mat::from_fn(nv, nv, |i, j| u[(i, j)] / d[j].sqrt());
            (Some(&scaled * u.transpose()), None)
        }
    };
    let c = match (&m_half_inv, m_diag) {
        (None, Some(d)) => Mat::from_fn(nv, nv, |i, j| sd[(i, j)] / (d[i] * d[j]).sqrt()),
        (Some(h), _) => h * &sd * h,
        _ => unreachable!(),
    };
    let c = Mat::from_fn(nv, nv, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = c.self_adjoint_eigen(Side::Lower).map_err(linalg_err)?;
    let vals = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..nv).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(Ordering::Equal));
    let mu: Vec<f64> = order[..n].iter().map(|&i| vals[i]).collect();
    let usel = Mat::from_fn(nv, n, |i, k| u[(i, order[k])]);
    let y = match (&m_half_inv, m_diag) {
        (None, Some(d)) => Mat::from_fn(nv, n, |i, k| usel[(i, k)] / d[i].sqrt()),
        (Some(h), _) => h * &usel,
        _ => unreachable!(),
    };
    Ok((mu, y))
}

/// Build the spectrum appropriate for the geometry.
pub fn build_spectrum(geom: &BoundaryGeometry, n: usize, opts: &SurfaceSolverOptions) -> Result<BoundarySpectrum> {
    match geom {
        BoundaryGeometry::Curves(_) => build_curve_spectrum(geom, n),
        BoundaryGeometry::Surface(_) => build_surface_spectrum(geom, n, opts),
    }
}

/// Diagonal `(mu_n + c)^{s/2}`: the coefficient action of `(Δ + c)^{s/2}`.
pub fn fractional_power_weights(spec: &BoundarySpectrum, s: f64, c: f64) -> Result<Vec<f64>> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("shift c must be positive, got {c}")));
    }
    Ok(spec.mu.iter().map(|&mu| (mu + c).powf(s / 2.0)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub slope: f64,
    pub intercept: f64,
    pub c_lower: f64,
    pub c_upper: f64,
}

/// Least-squares slope of `log mu_n` against `log n` for 1-based `n` in
/// `lo..=hi`, and the extreme ratios `mu_n / n^{2/(d-1)}` over that range.
pub fn weyl_diagnostic(spec: &BoundarySpectrum, lo: usize, hi: usize) -> Result<WeylFit> {
    if lo <= spec.b0 {
        return Err(Error::BadFitRange(format!("[{lo}, {hi}] reaches the kernel (b0 = {})", spec.b0)));
    }
    if hi > spec.count() {
        return Err(Error::BadFitRange(format!("[{lo}, {hi}] exceeds the truncation {}", spec.count())));
    }
    if hi < lo || hi - lo + 1 < 20 {
        return Err(Error::BadFitRange(format!("[{lo}, {hi}] has fewer than 20 points")));
    }
    let pts: Vec<(f64, f64)> = (lo..=hi).map(|n| (n as f64, spec.mu[n - 1])).collect();
    if pts.iter().any(|&(_, mu)| !(mu > 0.0)) {
        return Err(Error::BadFitRange(format!("[{lo}, {hi}] contains zero eigenvalues")));
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(n, mu)| (a + n.ln(), b + mu.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(n, mu) in &pts {
        sxy += (n.ln() - mx) * (mu.ln() - my);
        sxx += (n.ln() - mx).powi(2);
    }
    let slope = sxy / sxx;
    let p = 2.0 / (spec.dim_ambient() as f64 - 1.0);
    let ratios = pts.iter().map(|&(n, mu)| mu / n.powf(p));
    let c_lower = ratios.clone().fold(f64::INFINITY, f64::min);
    let c_upper = ratios.fold(0.0, f64::max);
    Ok(WeylFit { slope, intercept: my - slope * mx, c_lower, c_upper })
}

/// `#{n : mu_n <= lambda}`.
pub fn counting_function(spec: &BoundarySpectrum, lambda: f64) -> Result<usize> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    let mu_max = *spec.mu.last().expect("nonempty spectrum");
    if lambda >= mu_max {
        return Err(Error::CountingTruncated { lambda, mu_max });
    }
    Ok(spec.mu.partition_point(|&m| m <= lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{icosphere, surface_union, CurveComponent};

    fn circle(r: f64) -> CurveComponent {
        CurveComponent::Circle { center: [0.0, 0.0], radius: r }
    }

    #[test]
    fn unit_circle_first_five() {
        let s = build_curve_spectrum(&BoundaryGeometry::unit_circle(), 5).unwrap();
        assert_eq!(s.mu(), &[0.0, 1.0, 1.0, 4.0, 4.0]);
        assert_eq!(s.b0(), 1);
        let kinds: Vec<_> = (0..5).map(|n| s.curve_mode(n).unwrap().kind).collect();
        use CurveModeKind::*;
        assert_eq!(kinds, vec![Constant, Cos, Sin, Cos, Sin]);
    }

    #[test]
    fn two_circles_union_spectrum() {
        let g = BoundaryGeometry::curves(vec![circle(1.0), circle(0.5)]).unwrap();
        let s = build_curve_spectrum(&g, 3).unwrap();
        assert_eq!(s.mu(), &[0.0, 0.0, 1.0]);
        assert_eq!(s.b0(), 2);
        // Kernel modes are (length)^{-1/2} on their own component.
        let c1 = s.curve_mode(1).unwrap();
        assert_eq!(c1.component, 1);
        assert!((c1.value(0.3) - PI.powf(-0.5)).abs() < 1e-15);
    }

    /// Periodic second difference on a uniform arclength grid of the square;
    /// its lowest eigenvalues approach (2 pi k / 4)^2.
    #[test]
    fn square_matches_finite_differences() {
        let sq = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let g = BoundaryGeometry::curves(vec![CurveComponent::Polyline(sq)]).unwrap();
        let s = build_curve_spectrum(&g, 3).unwrap();
        let q = (2.0 * PI / 4.0).powi(2);
        assert_eq!(s.mu()[0], 0.0);
        assert!((s.mu()[1] - q).abs() < 1e-14 && (s.mu()[2] - q).abs() < 1e-14);

        let m = 400;
        let h = 4.0 / m as f64;
        let fd = Mat::from_fn(m, m, |i, j| {
            let d = (i as isize - j as isize).rem_euclid(m as isize);
            if d == 0 {
                2.0 / (h * h)
            } else if d == 1 || d == m as isize - 1 {
                -1.0 / (h * h)
            } else {
                0.0
            }
        });
        let ev = crate::linalg::symmetric_eigenvalues(fd.as_ref()).unwrap();
        for k in 0..3 {
            assert!((ev[k] - s.mu()[k]).abs() <= 1e-4 * (1.0 + s.mu()[k]), "{} vs {}", ev[k], s.mu()[k]);
        }
    }

    #[test]
    fn curve_modes_are_orthonormal() {
        let g = BoundaryGeometry::curves(vec![
            CurveComponent::Polyline(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 1.5]]),
            circle(0.7),
        ])
        .unwrap();
        let s = build_curve_spectrum(&g, 60).unwrap();
        assert!(s.orthonormality_error() < 1e-10);
    }

    #[test]
    fn degenerate_and_short_truncations_are_rejected() {
        let g = BoundaryGeometry::curves(vec![circle(1.0), circle(2.0)]).unwrap();
        assert!(matches!(build_curve_spectrum(&g, 1), Err(Error::TruncationBelowKernel { .. })));
    }

    #[test]
    fn sphere_low_modes() {
        let g = BoundaryGeometry::Surface(icosphere(3, 1.0, [0.0; 3]));
        let s = build_surface_spectrum(&g, 9, &SurfaceSolverOptions::default()).unwrap();
        let exact = [0.0, 2.0, 2.0, 2.0, 6.0, 6.0, 6.0, 6.0, 6.0];
        for (m, e) in s.mu().iter().zip(exact) {
            assert!((m - e).abs() <= 0.03 * e.max(1.0), "{m} vs {e}");
        }
        assert!(s.orthonormality_error() < 1e-8);
        assert!(s.residuals().iter().all(|&r| r <= 1e-8));
    }

    #[test]
    fn dense_and_lanczos_paths_agree() {
        let g = BoundaryGeometry::Surface(icosphere(2, 1.0, [0.0; 3]));
        let dense = build_surface_spectrum(&g, 20, &SurfaceSolverOptions::default()).unwrap();
        let opts = SurfaceSolverOptions { dense_below: 0, ..Default::default() };
        let sparse = build_surface_spectrum(&g, 20, &opts).unwrap();
        for (a, b) in dense.mu().iter().zip(sparse.mu()) {
            assert!((a - b).abs() < 1e-8 * (1.0 + a), "{a} vs {b}");
        }
        let cons = SurfaceSolverOptions { mass: MassKind::Consistent, ..Default::default() };
        let c = build_surface_spectrum(&g, 20, &cons).unwrap();
        let cons_sparse = SurfaceSolverOptions { dense_below: 0, ..cons };
        let cs = build_surface_spectrum(&g, 20, &cons_sparse).unwrap();
        for (a, b) in c.mu().iter().zip(cs.mu()) {
            assert!((a - b).abs() < 1e-8 * (1.0 + a), "{a} vs {b}");
        }
        assert!(cs.orthonormality_error() < 1e-8);
    }

    #[test]
    fn constant_kernel_mode_on_any_mesh() {
        let g = BoundaryGeometry::Surface(icosphere(1, 2.0, [1.0, 0.0, 0.0]));
        let s = build_surface_spectrum(&g, 1, &SurfaceSolverOptions::default()).unwrap();
        assert_eq!(s.mu(), &[0.0]);
        let y = s.nodal_modes().unwrap();
        let v0 = y[(0, 0)];
        assert!(v0 > 0.0 && (0..y.nrows()).all(|i| y[(i, 0)] == v0));
    }

    #[test]
    fn two_spheres_have_two_zero_modes() {
        let u = surface_union(&[icosphere(2, 1.0, [0.0; 3]), icosphere(2, 1.0, [5.0, 0.0, 0.0])]);
        let g = BoundaryGeometry::Surface(u);
        let s = build_surface_spectrum(&g, 2, &SurfaceSolverOptions::default()).unwrap();
        assert_eq!(s.mu(), &[0.0, 0.0]);
        assert_eq!(s.b0(), 2);
    }

    #[test]
    fn ht_weights_follow_graph_norm() {
        assert_eq!(ht_weight(0.0, 0.7, true), 1.0);
        assert_eq!(ht_weight(0.0, -0.7, true), 1.0);
        assert!((ht_weight(4.0, 0.5, false) - 3f64.sqrt()).abs() < 1e-15);
        assert!((ht_weight(4.0, -0.5, false) - 3f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn fractional_weights() {
        let s = build_curve_spectrum(&BoundaryGeometry::unit_circle(), 5).unwrap();
        assert_eq!(fractional_power_weights(&s, 0.0, 1.0).unwrap(), vec![1.0; 5]);
        let w = fractional_power_weights(&s, -0.5, 1.0).unwrap();
        assert!((w[1] - 2f64.powf(-0.25)).abs() < 1e-15);
        assert!(fractional_power_weights(&s, 1.0, 0.0).is_err());
    }

    /// s = 2, c = 1 is (Δ + 1) itself: compare with the discrete operator
    /// applied to the nodal modes.
    #[test]
    fn second_power_matches_operator() {
        let g = BoundaryGeometry::Surface(icosphere(2, 1.0, [0.0; 3]));
        let BoundaryGeometry::Surface(surf) = &g else { unreachable!() };
        let s = build_surface_spectrum(&g, 10, &SurfaceSolverOptions::default()).unwrap();
        let w = fractional_power_weights(&s, 2.0, 1.0).unwrap();
        let stiff = cotangent_stiffness(surf).unwrap();
        let m = surf.vertex_masses();
        let y = s.nodal_modes().unwrap();
        let mut sy = vec![0.0; y.nrows()];
        for n in 0..10 {
            let col: Vec<f64> = (0..y.nrows()).map(|i| y[(i, n)]).collect();
            crate::linalg::spmv(&stiff, &col, &mut sy);
            // <(Δ + 1) Y_n, Y_n> with Δ = M^{-1} S
            let q: f64 = (0..y.nrows()).map(|i| (sy[i] + m[i] * col[i]) * col[i]).sum();
            assert!((q - w[n]).abs() < 1e-8 * w[n]);
        }
    }

    #[test]
    fn weyl_on_circle() {
        let s = build_curve_spectrum(&BoundaryGeometry::unit_circle(), 400).unwrap();
        let fit = weyl_diagnostic(&s, 21, 200).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.02, "{}", fit.slope);
        assert!(fit.c_lower > 0.0 && fit.c_upper / fit.c_lower <= 10.0);
        assert!(weyl_diagnostic(&s, 1, 40).is_err());
        assert!(weyl_diagnostic(&s, 21, 30).is_err());
    }

    #[test]
    fn counting_on_circle() {
        let s = build_curve_spectrum(&BoundaryGeometry::unit_circle(), 20).unwrap();
        assert_eq!(counting_function(&s, 0.0).unwrap(), 1);
        assert_eq!(counting_function(&s, 1.0).unwrap(), 3);
        assert_eq!(counting_function(&s, 4.5).unwrap(), 5);
        assert!(matches!(counting_function(&s, 1e4), Err(Error::CountingTruncated { .. })));
    }

    #[test]
    fn binary_round_trip() {
        let g = BoundaryGeometry::Surface(icosphere(1, 1.0, [0.0; 3]));
        let s = build_surface_spectrum(&g, 6, &SurfaceSolverOptions::default()).unwrap();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        let r = BoundarySpectrum::read_binary(g, &mut buf.as_slice()).unwrap();
        assert_eq!(r.mu(), s.mu());
        assert_eq!(r.nodal_modes().unwrap(), s.nodal_modes().unwrap());
    }
}
