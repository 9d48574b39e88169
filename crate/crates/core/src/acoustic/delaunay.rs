//! Bowyer–Watson Delaunay triangulation of a planar point set.

use std::collections::HashMap;

#[derive(Clone, Copy)]
struct Tri {
    v: [usize; 3],
    center: [f64; 2],
    r2: f64,
}

fn circumcircle(p: &[[f64; 2]], v: [usize; 3]) -> ([f64; 2], f64) {
    let [a, b, c] = v.map(|i| p[i]);
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    let (a2, b2, c2) = (a[0] * a[0] + a[1] * a[1], b[0] * b[0] + b[1] * b[1], c[0] * c[0] + c[1] * c[1]);
    let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
    let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
    let r2 = (a[0] - ux).powi(2) + (a[1] - uy).powi(2);
    ([ux, uy], r2)
}

pub(crate) fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Counter-clockwise triangles over `points` (indices into `points`).
pub(crate) fn triangulate(points: &[[f64; 2]]) -> Vec<[usize; 3]> {
    let n = points.len();
    if n < 3 {
        return Vec::new();
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let mut p = points.to_vec();
    p.push([mid[0] - 20.0 * span, mid[1] - 10.0 * span]);
    p.push([mid[0] + 20.0 * span, mid[1] - 10.0 * span]);
    p.push([mid[0], mid[1] + 20.0 * span]);

    let make = |p: &[[f64; 2]], v: [usize; 3]| {
        let (center, r2) = circumcircle(p, v);
        Tri { v, center, r2 }
    };
    let mut tris = vec![make(&p, [n, n + 1, n + 2])];
    for i in 0..n {
        let q = p[i];
        let mut bad = Vec::new();
        let mut keep = Vec::with_capacity(tris.len() + 2);
        for t in tris.drain(..) {
            let d2 = (q[0] - t.center[0]).powi(2) + (q[1] - t.center[1]).powi(2);
            if d2 < t.r2 * (1.0 - 1e-12) {
                bad.push(t);
            } else {
                keep.push(t);
            }
        }
        let mut edges: HashMap<(usize, usize), (usize, usize, usize)> = HashMap::new();
        for t in &bad {
            for k in 0..3 {
                let (a, b) = (t.v[k], t.v[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                edges.entry(key).and_modify(|e| e.2 += 1).or_insert((a, b, 1));
            }
        }
        tris = keep;
        let mut boundary: Vec<(usize, usize)> =
            edges.values().filter(|e| e.2 == 1).map(|&(a, b, _)| (a, b)).collect();
        boundary.sort_unstable();
        for (a, b) in boundary {
            let mut v = [a, b, i];
            if orient(p[v[0]], p[v[1]], p[v[2]]) < 0.0 {
                v.swap(0, 1);
            }
            tris.push(make(&p, v));
        }
    }
    tris.into_iter().filter(|t| t.v.iter().all(|&k| k < n)).map(|t| t.v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_center() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let t = triangulate(&pts);
        assert_eq!(t.len(), 4);
        let area: f64 = t.iter().map(|v| 0.5 * orient(pts[v[0]], pts[v[1]], pts[v[2]])).sum();
        assert!((area - 1.0).abs() < 1e-14);
    }

    #[test]
    fn delaunay_property_on_scattered_points() {
        let pts: Vec<[f64; 2]> =
            (0..60).map(|i| [((i * 37) % 61) as f64 / 61.0, ((i * 53) % 67) as f64 / 67.0]).collect();
        let t = triangulate(&pts);
        for v in &t {
            assert!(orient(pts[v[0]], pts[v[1]], pts[v[2]]) > 0.0);
            let (c, r2) = circumcircle(&pts, *v);
            for (k, q) in pts.iter().enumerate() {
                if !v.contains(&k) {
                    assert!((q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2) >= r2 * (1.0 - 1e-9));
                }
            }
        }
    }
}
