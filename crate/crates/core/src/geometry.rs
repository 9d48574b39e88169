//! Closed boundaries: unions of closed curves in the plane, or closed
//! triangulated surfaces in space.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One closed curve, parametrized by arclength starting at its first point.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveComponent {
    /// Closed polyline; the last vertex connects back to the first.
    Polyline(Vec<[f64; 2]>),
    /// Exact circle, traversed counter-clockwise from angle 0.
    Circle { center: [f64; 2], radius: f64 },
}

impl CurveComponent {
    pub fn length(&self) -> f64 {
        match self {
            CurveComponent::Circle { radius, .. } => 2.0 * PI * radius,
            CurveComponent::Polyline(v) => (0..v.len()).map(|i| dist2(v[i], v[(i + 1) % v.len()])).sum(),
        }
    }

    /// Cumulative arclength at each polyline vertex (first entry 0).
    pub fn vertex_arclengths(&self) -> Vec<f64> {
        match self {
            CurveComponent::Circle { .. } => vec![0.0],
            CurveComponent::Polyline(v) => {
                let mut s = Vec::with_capacity(v.len());
                let mut acc = 0.0;
                for i in 0..v.len() {
                    s.push(acc);
                    acc += dist2(v[i], v[(i + 1) % v.len()]);
                }
                s
            }
        }
    }

    /// Point at arclength `s` (taken modulo the length).
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let len = self.length();
        let s = s.rem_euclid(len);
        match self {
            CurveComponent::Circle { center, radius } => {
                let a = s / radius;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
            CurveComponent::Polyline(v) => {
                let mut acc = 0.0;
                for i in 0..v.len() {
                    let a = v[i];
                    let b = v[(i + 1) % v.len()];
                    let l = dist2(a, b);
                    if s <= acc + l || i + 1 == v.len() {
                        let t = if l > 0.0 { ((s - acc) / l).clamp(0.0, 1.0) } else { 0.0 };
                        return [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    }
                    acc += l;
                }
                v[0]
            }
        }
    }
}

/// Closed triangulated surface.
#[derive(Clone, Debug, PartialEq)]
pub struct TriSurface {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriSurface {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * norm3(cross3(sub3(b, a), sub3(c, a)))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Lumped (barycentric) vertex masses.
    pub fn vertex_masses(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.triangle_area(t) / 3.0;
            for &i in tri {
                m[i] += a;
            }
        }
        m
    }

    /// Connected-component label of every vertex, labels ordered by first
    /// appearance in the vertex list.
    pub fn component_labels(&self) -> (Vec<usize>, usize) {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for tri in &self.triangles {
            for k in 1..3 {
                let (a, b) = (find(&mut parent, tri[0]), find(&mut parent, tri[k]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut labels = vec![usize::MAX; n];
        let mut root_label = HashMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            let next = root_label.len();
            labels[v] = *root_label.entry(r).or_insert(next);
        }
        (labels, root_label.len())
    }

    fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::InvalidGeometry("surface has no triangles".into()));
        }
        let n = self.vertices.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::InvalidGeometry(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidGeometry(format!("triangle {t} is degenerate")));
            }
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::DegenerateComponent { component: t });
            }
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                *directed.entry(e).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 {
                return Err(Error::InvalidGeometry(format!(
                    "directed edge ({a},{b}) used {count} times: surface is non-manifold or not orientable"
                )));
            }
            if !directed.contains_key(&(b, a)) {
                return Err(Error::InvalidGeometry(format!("edge ({a},{b}) is a boundary edge: surface is not closed")));
            }
        }
        let mut used = vec![false; n];
        for tri in &self.triangles {
            for &i in tri {
                used[i] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidGeometry(format!("vertex {v} belongs to no triangle")));
        }
        Ok(())
    }
}

/// A closed boundary of a bounded domain in dimension 2 or 3.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryGeometry {
    Curves(Vec<CurveComponent>),
    Surface(TriSurface),
}

impl BoundaryGeometry {
    pub fn curves(components: Vec<CurveComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidGeometry("no components".into()));
        }
        for (j, c) in components.iter().enumerate() {
            match c {
                CurveComponent::Circle { radius, .. } if !(*radius > 0.0) => {
                    return Err(Error::DegenerateComponent { component: j })
                }
                CurveComponent::Polyline(v) if v.len() < 3 => {
                    return Err(Error::InvalidGeometry(format!("polyline {j} has fewer than 3 vertices")))
                }
                _ => {}
            }
            if !(c.length() > 0.0) {
                return Err(Error::DegenerateComponent { component: j });
            }
        }
        Ok(BoundaryGeometry::Curves(components))
    }

    pub fn surface(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let s = TriSurface { vertices, triangles };
        s.validate()?;
        Ok(BoundaryGeometry::Surface(s))
    }

    pub fn unit_circle() -> Self {
        BoundaryGeometry::Curves(vec![CurveComponent::Circle { center: [0.0, 0.0], radius: 1.0 }])
    }

    /// Regular polygon with `sides` vertices on the circle of radius `radius`.
    pub fn regular_polygon(sides: usize, radius: f64) -> Result<Self> {
        let v = (0..sides)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / sides as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        Self::curves(vec![CurveComponent::Polyline(v)])
    }

    pub fn dim_ambient(&self) -> usize {
        match self {
            BoundaryGeometry::Curves(_) => 2,
            BoundaryGeometry::Surface(_) => 3,
        }
    }

    pub fn total_measure(&self) -> f64 {
        match self {
            BoundaryGeometry::Curves(c) => c.iter().map(CurveComponent::length).sum(),
            BoundaryGeometry::Surface(s) => s.area(),
        }
    }

    pub fn component_count(&self) -> usize {
        match self {
            BoundaryGeometry::Curves(c) => c.len(),
            BoundaryGeometry::Surface(s) => s.component_labels().1,
        }
    }

    /// Measure of each connected component.
    pub fn component_measures(&self) -> Vec<f64> {
        match self {
            BoundaryGeometry::Curves(c) => c.iter().map(CurveComponent::length).collect(),
            BoundaryGeometry::Surface(s) => {
                let (labels, count) = s.component_labels();
                let mut m = vec![0.0; count];
                for (v, w) in s.vertex_masses().iter().enumerate() {
                    m[labels[v]] += w;
                }
                m
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GeometryFile = serde_json::from_str(text)?;
        file.into_geometry()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = match self {
            BoundaryGeometry::Curves(c) => GeometryFile {
                dim: 2,
                components: Some(
                    c.iter()
                        .map(|c| match c {
                            CurveComponent::Polyline(v) => ComponentFile::Polyline(v.clone()),
                            CurveComponent::Circle { center, radius } => {
                                ComponentFile::Circle { circle: CircleFile { center: *center, radius: *radius } }
                            }
                        })
                        .collect(),
                ),
                vertices: None,
                triangles: None,
            },
            BoundaryGeometry::Surface(s) => GeometryFile {
                dim: 3,
                components: None,
                vertices: Some(s.vertices.clone()),
                triangles: Some(s.triangles.clone()),
            },
        };
        Ok(serde_json::to_string(&file)?)
    }
}

#[derive(Serialize, Deserialize)]
struct GeometryFile {
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    components: Option<Vec<ComponentFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    triangles: Option<Vec<[usize; 3]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ComponentFile {
    Polyline(Vec<[f64; 2]>),
    Circle { circle: CircleFile },
}

#[derive(Serialize, Deserialize)]
struct CircleFile {
    center: [f64; 2],
    radius: f64,
}

impl GeometryFile {
    fn into_geometry(self) -> Result<BoundaryGeometry> {
        match self.dim {
            2 => {
                let comps = self
                    .components
                    .ok_or_else(|| Error::InvalidGeometry("dim 2 geometry needs \"components\"".into()))?;
                BoundaryGeometry::curves(
                    comps
                        .into_iter()
                        .map(|c| match c {
                            ComponentFile::Polyline(v) => CurveComponent::Polyline(v),
                            ComponentFile::Circle { circle } => {
                                CurveComponent::Circle { center: circle.center, radius: circle.radius }
                            }
                        })
                        .collect(),
                )
            }
            3 => {
                let (Some(v), Some(t)) = (self.vertices, self.triangles) else {
                    return Err(Error::InvalidGeometry("dim 3 geometry needs \"vertices\" and \"triangles\"".into()));
                };
                BoundaryGeometry::surface(v, t)
            }
            d => Err(Error::InvalidGeometry(format!("unsupported dimension {d}"))),
        }
    }
}

/// Geodesic icosphere: the icosahedron refined `level` times with vertices
/// projected to the sphere. Level 4 has 2562 vertices, level 5 has 10242.
pub fn icosphere(level: usize, radius: f64, center: [f64; 3]) -> TriSurface {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize3)
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize3([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let vertices = verts
        .into_iter()
        .map(|p| [center[0] + radius * p[0], center[1] + radius * p[1], center[2] + radius * p[2]])
        .collect();
    TriSurface { vertices, triangles: tris }
}

/// Disjoint union of surfaces (vertex indices of later pieces are shifted).
pub fn surface_union(parts: &[TriSurface]) -> TriSurface {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for p in parts {
        let off = vertices.len();
        vertices.extend_from_slice(&p.vertices);
        triangles.extend(p.triangles.iter().map(|t| t.map(|i| i + off)));
    }
    TriSurface { vertices, triangles }
}

pub(crate) fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

fn normalize3(a: [f64; 3]) -> [f64; 3] {
    let n = norm3(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_is_closed_with_expected_counts() {
        for (level, nv) in [(0, 12), (1, 42), (2, 162), (4, 2562)] {
            let s = icosphere(level, 1.0, [0.0; 3]);
            assert_eq!(s.vertices.len(), nv);
            assert!(s.validate().is_ok());
        }
        let s = icosphere(3, 1.0, [0.0; 3]);
        assert!((s.area() - 4.0 * PI).abs() < 0.05 * 4.0 * PI);
        let m: f64 = s.vertex_masses().iter().sum();
        assert!((m - s.area()).abs() < 1e-12 * s.area());
    }

    #[test]
    fn open_surface_is_rejected() {
        let mut s = icosphere(1, 1.0, [0.0; 3]);
        s.triangles.pop();
        let err = BoundaryGeometry::surface(s.vertices, s.triangles).unwrap_err();
        assert!(err.to_string().contains("not closed"));
    }

    #[test]
    fn flipped_triangle_is_rejected() {
        let mut s = icosphere(1, 1.0, [0.0; 3]);
        s.triangles[3].swap(0, 1);
        assert!(BoundaryGeometry::surface(s.vertices, s.triangles).is_err());
    }

    #[test]
    fn union_counts_components() {
        let a = icosphere(1, 1.0, [0.0; 3]);
        let b = icosphere(1, 0.5, [5.0, 0.0, 0.0]);
        let g = BoundaryGeometry::Surface(surface_union(&[a, b]));
        assert_eq!(g.component_count(), 2);
        let m = g.component_measures();
        assert!(m[0] > m[1]);
    }

    #[test]
    fn polyline_measure_is_sum_of_segments() {
        let g = BoundaryGeometry::curves(vec![CurveComponent::Polyline(vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
        ])])
        .unwrap();
        assert_eq!(g.total_measure(), 4.0);
        let BoundaryGeometry::Curves(c) = &g else { unreachable!() };
        assert_eq!(c[0].point_at(1.5), [1.0, 0.5]);
        assert_eq!(c[0].point_at(4.25), [0.25, 0.0]);
    }

    #[test]
    fn degenerate_components_are_rejected() {
        assert!(matches!(
            BoundaryGeometry::curves(vec![CurveComponent::Circle { center: [0.0; 2], radius: 0.0 }]),
            Err(Error::DegenerateComponent { component: 0 })
        ));
        let zero = CurveComponent::Polyline(vec![[1.0, 1.0]; 4]);
        assert!(BoundaryGeometry::curves(vec![zero]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"dim": 2, "components": [[[0,0],[2,0],[2,1]], {"circle": {"center": [5,5], "radius": 0.5}}]}"#;
        let g = BoundaryGeometry::from_json(text).unwrap();
        assert_eq!(g.component_count(), 2);
        let back = BoundaryGeometry::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(g, back);
        let s = icosphere(0, 1.0, [0.0; 3]);
        let g3 = BoundaryGeometry::Surface(s);
        assert_eq!(BoundaryGeometry::from_json(&g3.to_json().unwrap()).unwrap(), g3);
    }
}
