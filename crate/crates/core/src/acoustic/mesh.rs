//! Triangulated planar domains with boundary loops and piecewise-constant
//! material fields.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::delaunay::{orient, triangulate};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryGeometry, CurveComponent};

/// One closed boundary curve as a cycle of mesh vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    pub vertices: Vec<usize>,
    /// Arclength of each vertex from the first one.
    pub arclength: Vec<f64>,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryLoop>,
    /// `[a11, a12, a22]` of the symmetric positive-definite `alpha` per triangle.
    pub alpha: Vec<[f64; 3]>,
    pub beta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<f64>>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn make_loop(vertices: &[[f64; 2]], ids: Vec<usize>) -> BoundaryLoop {
    let mut arclength = Vec::with_capacity(ids.len());
    let mut acc = 0.0;
    for i in 0..ids.len() {
        arclength.push(acc);
        acc += dist(vertices[ids[i]], vertices[ids[(i + 1) % ids.len()]]);
    }
    BoundaryLoop { vertices: ids, arclength, length: acc }
}

impl DomainMesh {
    /// Builds and validates a mesh with `alpha = I`, `beta = 1`.
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, loops: Vec<Vec<usize>>) -> Result<Self> {
        let nt = triangles.len();
        Self::with_materials(vertices, triangles, loops, vec![[1.0, 0.0, 1.0]; nt], vec![1.0; nt])
    }

    pub fn with_materials(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        loops: Vec<Vec<usize>>,
        alpha: Vec<[f64; 3]>,
        beta: Vec<f64>,
    ) -> Result<Self> {
        let bad = |m: String| Error::InvalidGeometry(m);
        for t in triangles.iter_mut() {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(bad(format!("triangle {t:?} references a missing vertex")));
            }
            let o = orient(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if o == 0.0 {
                return Err(bad(format!("degenerate triangle {t:?}")));
            }
            if o < 0.0 {
                t.swap(1, 2);
            }
        }
        if alpha.len() != triangles.len() || beta.len() != triangles.len() {
            return Err(bad("material arrays must have one entry per triangle".into()));
        }
        for (k, a) in alpha.iter().enumerate() {
            let det = a[0] * a[2] - a[1] * a[1];
            if !(a[0] > 0.0 && det > 0.0) {
                return Err(Error::InvalidParameter(format!("alpha on triangle {k} is not positive definite")));
            }
        }
        if let Some(k) = beta.iter().position(|b| !(*b > 0.0)) {
            return Err(Error::InvalidParameter(format!("beta on triangle {k} is not positive")));
        }

        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if count.values().any(|&c| c > 2) {
            return Err(bad("an edge is shared by more than two triangles".into()));
        }
        let open: HashSet<(usize, usize)> = count.iter().filter(|(_, &c)| c == 1).map(|(e, _)| *e).collect();
        let mut listed = HashSet::new();
        for l in &loops {
            if l.len() < 3 {
                return Err(bad("boundary loop with fewer than 3 vertices".into()));
            }
            for i in 0..l.len() {
                let (a, b) = (l[i], l[(i + 1) % l.len()]);
                if !listed.insert((a.min(b), a.max(b))) {
                    return Err(bad(format!("boundary edge ({a}, {b}) listed twice")));
                }
            }
        }
        if listed != open {
            return Err(bad(format!(
                "boundary loops cover {} edges but the triangulation has {} boundary edges",
                listed.len(),
                open.len()
            )));
        }
        let boundary = loops.into_iter().map(|l| make_loop(&vertices, l)).collect();
        Ok(DomainMesh { vertices, triangles, boundary, alpha, beta })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: MeshFile = serde_json::from_str(text)?;
        let nt = f.triangles.len();
        Self::with_materials(
            f.vertices,
            f.triangles,
            f.boundary_loops,
            f.alpha.unwrap_or_else(|| vec![[1.0, 0.0, 1.0]; nt]),
            f.beta.unwrap_or_else(|| vec![1.0; nt]),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MeshFile {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            boundary_loops: self.boundary.iter().map(|l| l.vertices.clone()).collect(),
            alpha: Some(self.alpha.clone()),
            beta: Some(self.beta.clone()),
        })?)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let v = self.triangles[t];
        0.5 * orient(self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Longest edge.
    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| dist(self.vertices[a], self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Number of connected components of the domain (through shared vertices).
    pub fn component_count(&self) -> usize {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut used = vec![false; n];
        for t in &self.triangles {
            for &i in t {
                used[i] = true;
            }
            for k in 1..3 {
                let (a, b) = (find(&mut parent, t[0]), find(&mut parent, t[k]));
                parent[a] = b;
            }
        }
        (0..n).filter(|&i| used[i] && find(&mut parent, i) == i).count()
    }

    /// The boundary as arclength-parametrized closed polylines, one per loop.
    pub fn boundary_geometry(&self) -> Result<BoundaryGeometry> {
        BoundaryGeometry::curves(
            self.boundary
                .iter()
                .map(|l| CurveComponent::Polyline(l.vertices.iter().map(|&i| self.vertices[i]).collect()))
                .collect(),
        )
    }

    /// Checks that `geom` has the mesh's boundary loops as components with
    /// matching arclength coordinates.
    pub fn check_boundary(&self, geom: &BoundaryGeometry) -> Result<()> {
        let BoundaryGeometry::Curves(comps) = geom else {
            return Err(Error::GeometryMismatch("a planar mesh needs a curve boundary".into()));
        };
        if comps.len() != self.boundary.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} boundary loops, {} curve components",
                self.boundary.len(),
                comps.len()
            )));
        }
        for (j, (l, c)) in self.boundary.iter().zip(comps).enumerate() {
            let scale = 1.0 + l.length;
            if (c.length() - l.length).abs() > 1e-10 * scale {
                return Err(Error::GeometryMismatch(format!(
                    "component {j}: length {} vs {}",
                    c.length(),
                    l.length
                )));
            }
            for (&v, &s) in l.vertices.iter().zip(&l.arclength) {
                if dist(c.point_at(s), self.vertices[v]) > 1e-10 * scale {
                    return Err(Error::GeometryMismatch(format!("component {j}: vertex {v} off the curve at s = {s}")));
                }
            }
        }
        Ok(())
    }
}

/// Counter-clockwise ring of `n` points at radius `r`, first at angle 0.
fn ring(center: [f64; 2], r: f64, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / n as f64;
            [center[0] + r * a.cos(), center[1] + r * a.sin()]
        })
        .collect()
}

/// Triangles between two concentric counter-clockwise rings, both starting
/// at angle 0, by merging their angular orders.
fn stitch(inner: &[usize], outer: &[usize], out: &mut Vec<[usize; 3]>) {
    let (na, nb) = (inner.len(), outer.len());
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let advance_inner = j == nb || (i < na && (i + 1) * nb <= (j + 1) * na);
        if advance_inner {
            out.push([inner[i % na], outer[j % nb], inner[(i + 1) % na]]);
            i += 1;
        } else {
            out.push([inner[i % na], outer[j % nb], outer[(j + 1) % nb]]);
            j += 1;
        }
    }
}

/// Disk by concentric rings: `ceil(radius / h)` rings, ring `k` carrying `6k`
/// equally spaced points.
pub fn disk_mesh(center: [f64; 2], radius: f64, h: f64) -> Result<DomainMesh> {
    if !(radius > 0.0 && h > 0.0) {
        return Err(Error::InvalidParameter("radius and h must be positive".into()));
    }
    let rings = (radius / h).ceil() as usize;
    let mut vertices = vec![center];
    let mut prev = vec![0usize];
    let mut triangles = Vec::new();
    for k in 1..=rings {
        let r = radius * k as f64 / rings as f64;
        let start = vertices.len();
        vertices.extend(ring(center, r, 6 * k));
        let cur: Vec<usize> = (start..vertices.len()).collect();
        if k == 1 {
            for j in 0..6 {
                triangles.push([0, cur[j], cur[(j + 1) % 6]]);
            }
        } else {
            stitch(&prev, &cur, &mut triangles);
        }
        prev = cur;
    }
    DomainMesh::new(vertices, triangles, vec![prev])
}

/// Annulus by concentric rings of roughly spacing `h`.
pub fn annulus_mesh(center: [f64; 2], r_in: f64, r_out: f64, h: f64) -> Result<DomainMesh> {
    if !(r_in > 0.0 && r_out > r_in && h > 0.0) {
        return Err(Error::InvalidParameter("need 0 < r_in < r_out and h > 0".into()));
    }
    let rings = ((r_out - r_in) / h).ceil() as usize;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut first = Vec::new();
    let mut prev: Vec<usize> = Vec::new();
    for k in 0..=rings {
        let r = r_in + (r_out - r_in) * k as f64 / rings as f64;
        let n = ((2.0 * PI * r / h).round() as usize).max(6);
        let start = vertices.len();
        vertices.extend(ring(center, r, n));
        let cur: Vec<usize> = (start..vertices.len()).collect();
        if k == 0 {
            first = cur.clone();
        } else {
            stitch(&prev, &cur, &mut triangles);
        }
        prev = cur;
    }
    DomainMesh::new(vertices, triangles, vec![prev, first])
}

fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}

/// Polygon (with optional polygonal holes) meshed by Delaunay triangulation of
/// subdivided boundary edges and an interior hexagonal lattice of spacing `h`.
/// Corners sharper than a right angle may lose boundary edges; that is
/// reported as an error.
pub fn polygon_mesh(outer: &[[f64; 2]], holes: &[Vec<[f64; 2]>], h: f64) -> Result<DomainMesh> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("h must be positive".into()));
    }
    let polys: Vec<&[[f64; 2]]> = std::iter::once(outer).chain(holes.iter().map(|v| v.as_slice())).collect();
    if polys.iter().any(|p| p.len() < 3) {
        return Err(Error::InvalidGeometry("polygons need at least 3 vertices".into()));
    }
    let mut points = Vec::new();
    let mut loops = Vec::new();
    for poly in &polys {
        let mut ids = Vec::new();
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let m = (dist(a, b) / h).ceil().max(1.0) as usize;
            for k in 0..m {
                let t = k as f64 / m as f64;
                ids.push(points.len());
                points.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        loops.push(ids);
    }
    let inside = |p: [f64; 2]| point_in_polygon(p, outer) && !holes.iter().any(|hp| point_in_polygon(p, hp));
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in outer {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let mut row = 0;
    let mut y = lo[1] + dy / 2.0;
    while y < hi[1] {
        let mut x = lo[0] + if row % 2 == 1 { h / 2.0 } else { 0.0 };
        while x < hi[0] {
            let p = [x, y];
            let clear = polys
                .iter()
                .all(|poly| (0..poly.len()).all(|i| segment_distance(p, poly[i], poly[(i + 1) % poly.len()]) > 0.6 * h));
            if clear && inside(p) {
                points.push(p);
            }
            x += h;
        }
        y += dy;
        row += 1;
    }
    let triangles: Vec<[usize; 3]> = triangulate(&points)
        .into_iter()
        .filter(|t| {
            let c = [
                (points[t[0]][0] + points[t[1]][0] + points[t[2]][0]) / 3.0,
                (points[t[0]][1] + points[t[1]][1] + points[t[2]][1]) / 3.0,
            ];
            inside(c)
        })
        .collect();
    DomainMesh::new(points, triangles, loops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_counts_and_area() {
        let m = disk_mesh([0.0, 0.0], 1.0, 0.05).unwrap();
        assert_eq!(m.vertex_count(), 1 + 6 * 20 * 21 / 2);
        assert_eq!(m.triangles.len(), 6 * 20 * 20);
        let n = 120.0;
        let polygon_area = 0.5 * n * (2.0 * PI / n).sin();
        assert!((m.area() - polygon_area).abs() < 1e-12);
        assert_eq!(m.boundary.len(), 1);
        assert_eq!(m.component_count(), 1);
        m.check_boundary(&m.boundary_geometry().unwrap()).unwrap();
        assert!(m.check_boundary(&BoundaryGeometry::unit_circle()).is_err());
    }

    #[test]
    fn annulus_has_two_loops() {
        let m = annulus_mesh([0.0, 0.0], 0.5, 1.0, 0.1).unwrap();
        assert_eq!(m.boundary.len(), 2);
        let exact = PI * (1.0 - 0.25);
        assert!((m.area() - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn l_shape_and_square_with_hole() {
        let l = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        let m = polygon_mesh(&l, &[], 0.2).unwrap();
        assert!((m.area() - 3.0).abs() < 1e-12);
        let sq = [[0.0, 0.0], [3.0, 0.0], [3.0, 3.0], [0.0, 3.0]];
        let hole = vec![[1.0, 1.0], [1.0, 2.0], [2.0, 2.0], [2.0, 1.0]];
        let m = polygon_mesh(&sq, &[hole], 0.25).unwrap();
        assert!((m.area() - 8.0).abs() < 1e-12);
        assert_eq!(m.boundary.len(), 2);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let m = disk_mesh([0.0, 0.0], 1.0, 0.5).unwrap();
        let back = DomainMesh::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let broken = r#"{"vertices":[[0,0],[1,0],[0,1]],"triangles":[[0,1,2]],"boundary_loops":[[0,1]]}"#;
        assert!(DomainMesh::from_json(broken).is_err());
        let neg = r#"{"vertices":[[0,0],[1,0],[0,1]],"triangles":[[0,1,2]],"boundary_loops":[[0,1,2]],"beta":[-1]}"#;
        assert!(DomainMesh::from_json(neg).is_err());
    }
}
