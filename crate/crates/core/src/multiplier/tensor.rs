use std::collections::HashMap;
use std::sync::Arc;

use faer::{c64, Mat};

use crate::linalg::CMat;
use crate::par::map_indices;
use crate::spectrum::{BoundarySpectrum, CurveMode, CurveModeKind, MassKind, Modes};

/// `G[a][b][c] = ∫ Y_a Y_b Y_c dΣ` for the modes of one spectrum.
///
/// Curves use exact product-to-sum identities. Surfaces integrate with the
/// same rule as the mass matrix (vertex quadrature for lumped mass, exact P1
/// triple integrals for consistent mass), so multiplier matrices of
/// nonnegative data stay exactly positive semidefinite.
#[derive(Clone, Debug)]
pub struct TripleProductTensor {
    spectrum: Arc<BoundarySpectrum>,
    inner: Inner,
}

#[derive(Clone, Debug)]
enum Inner {
    /// `(component, k)` to the index of the cos (or constant) and sin mode.
    Curve(HashMap<(usize, usize), [Option<usize>; 2]>),
    Lumped(Vec<f64>),
    Consistent { triangles: Vec<[usize; 3]>, areas: Vec<f64> },
}

/// P1 triple integral over a triangle of area `a`, by how many of the three
/// local indices coincide.
fn p1_triple(a: f64, i: usize, j: usize, k: usize) -> f64 {
    if i == j && j == k {
        a / 10.0
    } else if i == j || j == k || i == k {
        a / 30.0
    } else {
        a / 60.0
    }
}

/// Exponential form `Y = sum amp * e^{i f theta}` with `theta = 2 pi s / L`.
fn exp_terms(m: &CurveMode) -> ([(i64, c64); 2], usize) {
    let k = m.k as i64;
    let l = m.length;
    let z = c64::new(0.0, 0.0);
    match m.kind {
        CurveModeKind::Constant => ([(0, c64::new(l.powf(-0.5), 0.0)), (0, z)], 1),
        CurveModeKind::Cos => {
            let a = c64::new(0.5 * (2.0 / l).sqrt(), 0.0);
            ([(k, a), (-k, a)], 2)
        }
        CurveModeKind::Sin => {
            // 1 / (2i) = -i / 2
            let a = c64::new(0.0, -0.5 * (2.0 / l).sqrt());
            ([(k, a), (-k, -a)], 2)
        }
    }
}

/// Triple product of curve modes `a, b, c`, evaluated in a canonical index
/// order so the result is bitwise symmetric.
fn curve_triple_idx(modes: &[CurveMode], a: usize, b: usize, c: usize) -> f64 {
    let mut i = [a, b, c];
    i.sort_unstable();
    curve_triple(&modes[i[0]], &modes[i[1]], &modes[i[2]])
}

fn curve_triple(a: &CurveMode, b: &CurveMode, c: &CurveMode) -> f64 {
    if a.component != b.component || b.component != c.component {
        return 0.0;
    }
    let (ta, na) = exp_terms(a);
    let (tb, nb) = exp_terms(b);
    let (tc, nc) = exp_terms(c);
    let mut acc = c64::new(0.0, 0.0);
    for &(fa, xa) in &ta[..na] {
        for &(fb, xb) in &tb[..nb] {
            for &(fc, xc) in &tc[..nc] {
                if fa + fb + fc == 0 {
                    acc += xa * xb * xc;
                }
            }
        }
    }
    acc.re * a.length
}

impl TripleProductTensor {
    pub fn new(spectrum: Arc<BoundarySpectrum>) -> Self {
        let inner = match spectrum.modes() {
            Modes::Curve(modes) => {
                let mut map: HashMap<(usize, usize), [Option<usize>; 2]> = HashMap::new();
                for (i, m) in modes.iter().enumerate() {
                    let e = map.entry((m.component, m.k)).or_default();
                    match m.kind {
                        CurveModeKind::Sin => e[1] = Some(i),
                        _ => e[0] = Some(i),
                    }
                }
                Inner::Curve(map)
            }
            Modes::Nodal(_) => match spectrum.mass_kind() {
                Some(MassKind::Consistent) => {
                    let crate::geometry::BoundaryGeometry::Surface(s) = spectrum.geometry() else {
                        unreachable!("nodal modes live on surfaces")
                    };
                    Inner::Consistent {
                        triangles: s.triangles.clone(),
                        areas: (0..s.triangles.len()).map(|t| s.triangle_area(t)).collect(),
                    }
                }
                _ => Inner::Lumped(spectrum.vertex_masses().expect("surface masses").to_vec()),
            },
        };
        TripleProductTensor { spectrum, inner }
    }

    pub fn spectrum(&self) -> &Arc<BoundarySpectrum> {
        &self.spectrum
    }

    /// A single entry `G[a][b][c]`.
    pub fn entry(&self, a: usize, b: usize, c: usize) -> f64 {
        match (&self.inner, self.spectrum.modes()) {
            (Inner::Curve(_), Modes::Curve(m)) => curve_triple_idx(m, a, b, c),
            (Inner::Lumped(w), Modes::Nodal(y)) => (0..y.nrows()).map(|v| w[v] * y[(v, a)] * y[(v, b)] * y[(v, c)]).sum(),
            (Inner::Consistent { triangles, areas }, Modes::Nodal(y)) => {
                let mut s = 0.0;
                for (tri, &ar) in triangles.iter().zip(areas) {
                    for i in 0..3 {
                        for j in 0..3 {
                            for k in 0..3 {
                                s += p1_triple(ar, i, j, k) * y[(tri[i], a)] * y[(tri[j], b)] * y[(tri[k], c)];
                            }
                        }
                    }
                }
                s
            }
            _ => unreachable!(),
        }
    }

    /// Mode indices `k` (below `limit`) for which `G[k][m][n]` can be nonzero.
    fn curve_partners(&self, m: usize, n: usize, limit: usize) -> impl Iterator<Item = usize> + '_ {
        let Inner::Curve(map) = &self.inner else { unreachable!() };
        let Modes::Curve(modes) = self.spectrum.modes() else { unreachable!() };
        let (a, b) = (&modes[m], &modes[n]);
        let mut out: [Option<usize>; 4] = [None; 4];
        if a.component == b.component {
            let sum = a.k + b.k;
            let diff = a.k.abs_diff(b.k);
            let hit = |k: usize| map.get(&(a.component, k)).copied().unwrap_or([None, None]);
            let s = hit(sum);
            out[0] = s[0];
            out[1] = s[1];
            if diff != sum {
                let d = hit(diff);
                out[2] = d[0];
                out[3] = d[1];
            }
        }
        out.into_iter().flatten().filter(move |&k| k < limit)
    }

    /// `A[m][n] = sum_k phi_k G[k][n][m]` for `m, n < n_trunc`, i.e. the
    /// compression of multiplication by `phi = sum_k phi_k Y_k`.
    pub fn contract(&self, phi: &[c64], n_trunc: usize) -> CMat {
        match (&self.inner, self.spectrum.modes()) {
            (Inner::Curve(_), Modes::Curve(modes)) => {
                let rows = map_indices(n_trunc, |m| {
                    (0..n_trunc)
                        .map(|n| {
                            self.curve_partners(m, n, phi.len())
                                .map(|k| phi[k] * curve_triple_idx(modes, k, n, m))
                                .sum::<c64>()
                        })
                        .collect::<Vec<c64>>()
                });
                Mat::from_fn(n_trunc, n_trunc, |i, j| rows[i][j])
            }
            (_, Modes::Nodal(y)) => {
                let nv = y.nrows();
                let yn = y.subcols(0, n_trunc);
                let phi_v: Vec<c64> =
                    (0..nv).map(|v| phi.iter().enumerate().map(|(k, &c)| c * y[(v, k)]).sum()).collect();
                let part = |f: &dyn Fn(c64) -> f64| -> Mat<f64> {
                    let weighted = match &self.inner {
                        Inner::Lumped(w) => Mat::from_fn(nv, n_trunc, |v, c| w[v] * f(phi_v[v]) * yn[(v, c)]),
                        Inner::Consistent { triangles, areas } => {
                            let mut out = Mat::<f64>::zeros(nv, n_trunc);
                            for (tri, &ar) in triangles.iter().zip(areas) {
                                for i in 0..3 {
                                    for j in 0..3 {
                                        let q: f64 = (0..3).map(|k| p1_triple(ar, i, j, k) * f(phi_v[tri[k]])).sum();
                                        for c in 0..n_trunc {
                                            out[(tri[i], c)] += q * yn[(tri[j], c)];
                                        }
                                    }
                                }
                            }
                            out
                        }
                        Inner::Curve(_) => unreachable!(),
                    };
                    yn.transpose() * &weighted
                };
                let re = part(&|z| z.re);
                let im = part(&|z| z.im);
                // The exact matrix is complex symmetric; remove rounding asymmetry.
                Mat::from_fn(n_trunc, n_trunc, |i, j| {
                    c64::new(0.5 * (re[(i, j)] + re[(j, i)]), 0.5 * (im[(i, j)] + im[(j, i)]))
                })
            }
            _ => unreachable!(),
        }
    }

    /// Coefficients `h_k = ∫ Y_k |g|^2 dΣ` for `k < n_out`, where
    /// `g = sum_n g_n Y_n`.
    pub fn square_coeffs(&self, g: &[c64], n_out: usize) -> Vec<f64> {
        match (&self.inner, self.spectrum.modes()) {
            (Inner::Curve(_), Modes::Curve(modes)) => {
                let mut h = vec![0.0; n_out];
                for m in 0..g.len() {
                    for n in 0..g.len() {
                        let w = (g[m] * g[n].conj()).re;
                        if w == 0.0 {
                            continue;
                        }
                        for k in self.curve_partners(m, n, n_out) {
                            h[k] += w * curve_triple_idx(modes, k, m, n);
                        }
                    }
                }
                h
            }
            (_, Modes::Nodal(y)) => {
                let nv = y.nrows();
                let gv: Vec<c64> = (0..nv).map(|v| g.iter().enumerate().map(|(n, &c)| c * y[(v, n)]).sum()).collect();
                // Nodal load vector of |g|^2 under the mass-consistent rule.
                let mut load = vec![0.0; nv];
                match &self.inner {
                    Inner::Lumped(w) => {
                        for v in 0..nv {
                            load[v] = w[v] * gv[v].norm_sqr();
                        }
                    }
                    Inner::Consistent { triangles, areas } => {
                        for (tri, &ar) in triangles.iter().zip(areas) {
                            for i in 0..3 {
                                for j in 0..3 {
                                    for k in 0..3 {
                                        load[tri[i]] += p1_triple(ar, i, j, k) * (gv[tri[j]] * gv[tri[k]].conj()).re;
                                    }
                                }
                            }
                        }
                    }
                    Inner::Curve(_) => unreachable!(),
                }
                (0..n_out).map(|k| (0..nv).map(|v| load[v] * y[(v, k)]).sum()).collect()
            }
            _ => unreachable!(),
        }
    }
}
