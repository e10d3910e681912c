//! Fiber surfaces: preimages of range-space control polygons.
//!
//! The polygon is turned into a signed distance on range space, evaluated at
//! every grid vertex and contoured at zero with marching tetrahedra over the
//! same Freudenthal split the CSP uses. Crossing points are keyed by their
//! grid edge, so neighbouring tetrahedra share vertices and the mesh is
//! watertight.

mod mesh;
mod polygon;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::grid::BivariateField;
use crate::num::Real;
use crate::tet::{cell_corners, FREUDENTHAL_TETS};

pub use mesh::{export_mesh, read_mesh_json, MeshFormat, TriangleMesh};
pub use polygon::{polygon_signed_distance, ControlPolygon, SIMPLICITY_TOL};

/// Triangles with a smaller world-space area are dropped.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

type EdgeKey = (usize, usize);

struct Crossing<T> {
    key: EdgeKey,
    position: [T; 3],
    value: [T; 2],
}

fn crossing<T: Real>(field: &BivariateField<T>, s: &[T], a: usize, b: usize) -> Crossing<T> {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let t = s[lo] / (s[lo] - s[hi]);
    let spec = field.spec();
    let [pl, ph] = [lo, hi].map(|v| {
        let [i, j, k] = spec.coords(v);
        spec.position(i, j, k)
    });
    let [vl, vh] = [field.value(lo), field.value(hi)];
    Crossing {
        key: (lo, hi),
        position: [0, 1, 2].map(|c| pl[c] + t * (ph[c] - pl[c])),
        value: [0, 1].map(|c| vl[c] + t * (vh[c] - vl[c])),
    }
}

fn dot3<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub3<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3<T: Real>(u: [T; 3], v: [T; 3]) -> [T; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

/// Zero level set of the per-vertex scalar `s`, where `s < 0` counts as
/// inside. Triangles face towards increasing `s`. Vertex order depends only
/// on the input, not on the thread count.
pub fn marching_tets<T: Real>(field: &BivariateField<T>, s: &[T]) -> TriangleMesh<T> {
    let spec = field.spec();
    assert_eq!(s.len(), spec.num_vertices(), "one scalar per grid vertex");
    let [cx, cy, cz] = spec.cell_dims();
    let min_area = T::lit(MIN_TRIANGLE_AREA);

    let slabs: Vec<Vec<[Crossing<T>; 3]>> = (0..cz)
        .into_par_iter()
        .map(|k| {
            let mut tris = Vec::new();
            for j in 0..cy {
                for i in 0..cx {
                    let corners = cell_corners(spec, [i, j, k]);
                    for local in FREUDENTHAL_TETS {
                        let tet = local.map(|c| corners[c]);
                        march_tet(field, s, tet, min_area, &mut tris);
                    }
                }
            }
            tris
        })
        .collect();

    let mut mesh = TriangleMesh::default();
    let mut ids: HashMap<EdgeKey, u32> = HashMap::new();
    for tri in slabs.into_iter().flatten() {
        let idx = tri.map(|c| {
            *ids.entry(c.key).or_insert_with(|| {
                mesh.positions.push(c.position);
                mesh.values.push(c.value);
                (mesh.positions.len() - 1) as u32
            })
        });
        mesh.triangles.push(idx);
    }
    mesh
}

fn march_tet<T: Real>(
    field: &BivariateField<T>,
    s: &[T],
    tet: [usize; 4],
    min_area: T,
    out: &mut Vec<[Crossing<T>; 3]>,
) {
    let inside: Vec<usize> = tet.iter().copied().filter(|&v| s[v] < T::zero()).collect();
    let outside: Vec<usize> = tet.iter().copied().filter(|&v| s[v] >= T::zero()).collect();
    let polys: Vec<[Crossing<T>; 3]> = match (inside.as_slice(), outside.as_slice()) {
        ([a], [b, c, d]) | ([b, c, d], [a]) => {
            vec![[
                crossing(field, s, *a, *b),
                crossing(field, s, *a, *c),
                crossing(field, s, *a, *d),
            ]]
        }
        ([a, b], [c, d]) => {
            // quad ac, ad, bd, bc in cyclic order
            let q = [(*a, *c), (*a, *d), (*b, *d), (*b, *c)];
            vec![
                [0, 1, 2].map(|i| crossing(field, s, q[i].0, q[i].1)),
                [0, 2, 3].map(|i| crossing(field, s, q[i].0, q[i].1)),
            ]
        }
        _ => return,
    };
    let spec = field.spec();
    let far = *outside
        .iter()
        .max_by(|&&x, &&y| s[x].partial_cmp(&s[y]).unwrap_or(std::cmp::Ordering::Equal))
        .expect("crossing tets have an outside vertex");
    let [i, j, k] = spec.coords(far);
    let far_pos = spec.position(i, j, k);
    for mut tri in polys {
        let [p0, p1, p2] = [tri[0].position, tri[1].position, tri[2].position];
        let n = cross3(sub3(p1, p0), sub3(p2, p0));
        if mesh::triangle_area(p0, p1, p2) <= min_area {
            continue;
        }
        if dot3(n, sub3(far_pos, p0)) < T::zero() {
            tri.swap(1, 2);
        }
        out.push(tri);
    }
}

/// Fiber surface of `poly`: zero set of the signed range-space distance.
/// Returns an empty mesh if the polygon boundary misses the field's range.
pub fn extract_fiber_surface<T: Real>(field: &BivariateField<T>, poly: &ControlPolygon<T>) -> TriangleMesh<T> {
    let s = signed_distances(field, poly);
    marching_tets(field, &s)
}

/// `polygon_signed_distance` at every grid vertex.
pub fn signed_distances<T: Real>(field: &BivariateField<T>, poly: &ControlPolygon<T>) -> Vec<T> {
    (0..field.spec().num_vertices())
        .into_par_iter()
        .map(|v| polygon_signed_distance(field.value(v), poly))
        .collect()
}

/// Isosurface `f_channel = iso`; `channel` is 0 for f1 and 1 for f2.
pub fn extract_isosurface<T: Real>(field: &BivariateField<T>, channel: usize, iso: T) -> TriangleMesh<T> {
    let g = if channel == 0 { field.f1() } else { field.f2() };
    let s: Vec<T> = g.values().iter().map(|&v| v - iso).collect();
    marching_tets(field, &s)
}

/// Fiber of a single bivariate value: the intersection of the isosurfaces
/// `f1 = value[0]` and `f2 = value[1]`, as line segments in world space.
pub fn extract_fiber<T: Real>(field: &BivariateField<T>, value: [T; 2]) -> Vec<[[T; 3]; 2]> {
    let spec = field.spec();
    let g1: Vec<T> = field.f1().values().iter().map(|&v| v - value[0]).collect();
    let g2: Vec<T> = field.f2().values().iter().map(|&v| v - value[1]).collect();
    let [cx, cy, cz] = spec.cell_dims();
    let mut segments = Vec::new();
    for k in 0..cz {
        for j in 0..cy {
            for i in 0..cx {
                let corners = cell_corners(spec, [i, j, k]);
                for local in FREUDENTHAL_TETS {
                    let tet = local.map(|c| corners[c]);
                    let mut tris = Vec::new();
                    march_tet(field, &g1, tet, T::zero(), &mut tris);
                    for tri in tris {
                        // g2 is linear on the tet, so it is linear along each
                        // edge of the f1 isosurface triangle
                        let g2_at = |c: &Crossing<T>| {
                            let (lo, hi) = c.key;
                            let t = g1[lo] / (g1[lo] - g1[hi]);
                            g2[lo] + t * (g2[hi] - g2[lo])
                        };
                        let h = [g2_at(&tri[0]), g2_at(&tri[1]), g2_at(&tri[2])];
                        let mut ends = Vec::with_capacity(2);
                        for e in 0..3 {
                            let (a, b) = (e, (e + 1) % 3);
                            if (h[a] < T::zero()) != (h[b] < T::zero()) {
                                let t = h[a] / (h[a] - h[b]);
                                let (pa, pb) = (tri[a].position, tri[b].position);
                                ends.push([0, 1, 2].map(|c| pa[c] + t * (pb[c] - pa[c])));
                            }
                        }
                        if let [p, q] = ends[..] {
                            segments.push([p, q]);
                        }
                    }
                }
            }
        }
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, ScalarGrid};

    fn xy_field(n: usize) -> BivariateField<f64> {
        let spec = GridSpec::spanning([n, n, n], [0.0; 3], [1.0; 3]).unwrap();
        BivariateField::new(
            ScalarGrid::from_fn(spec.clone(), |p| p[0]).unwrap(),
            ScalarGrid::from_fn(spec, |p| p[1]).unwrap(),
        )
        .unwrap()
    }

    fn square(lo: f64, hi: f64) -> ControlPolygon<f64> {
        ControlPolygon::new(vec![[lo, lo], [hi, lo], [hi, hi], [lo, hi]]).unwrap()
    }

    #[test]
    fn square_gives_box_walls() {
        let f = xy_field(17);
        let m = extract_fiber_surface(&f, &square(0.3, 0.7));
        assert!(!m.is_empty());
        m.validate().unwrap();
        let bound = 1.0 / 16.0 * 2f64.sqrt();
        for v in &m.values {
            assert!(polygon_signed_distance(*v, &square(0.3, 0.7)).abs() <= bound);
        }
        // wall area is perimeter 1.6 times height 1, less the corners the
        // linear interpolation of the distance field cuts off
        let area: f64 = (0..m.triangles.len()).map(|t| m.triangle_area(t)).sum();
        assert!(area < 1.6 && area > 1.45, "area {area}");
    }

    #[test]
    fn constant_inside_gives_empty_mesh() {
        let spec = GridSpec::spanning([4, 4, 4], [0.0; 3], [1.0; 3]).unwrap();
        let f = BivariateField::new(
            ScalarGrid::from_fn(spec.clone(), |_| 0.5).unwrap(),
            ScalarGrid::from_fn(spec, |_| 0.5).unwrap(),
        )
        .unwrap();
        assert!(extract_fiber_surface(&f, &square(0.25, 0.75)).is_empty());
        assert!(extract_fiber_surface(&xy_field(4), &square(3.0, 4.0)).is_empty());
    }

    #[test]
    fn mesh_is_closed_where_it_does_not_hit_the_domain_boundary() {
        // a polygon strictly inside the range of (x, y) on a unit cube gives
        // walls open only at z = 0 and z = 1: every interior edge is shared
        // by exactly two triangles
        let f = xy_field(7);
        let m = extract_fiber_surface(&f, &square(0.3, 0.7));
        let mut edges: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &m.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for ((a, b), n) in edges {
            let on_cap = [a, b].iter().all(|&v| {
                let z = m.positions[v as usize][2];
                z == 0.0 || z == 1.0
            });
            assert!(n == 2 || (n == 1 && on_cap), "edge ({a},{b}) used {n} times");
        }
    }

    #[test]
    fn isosurface_of_linear_field_is_planar() {
        let f = xy_field(5);
        let m = extract_isosurface(&f, 0, 0.3);
        assert!(!m.is_empty());
        assert!(m.positions.iter().all(|p| (p[0] - 0.3).abs() < 1e-12));
    }

    #[test]
    fn fiber_of_xy_is_vertical_line() {
        let f = xy_field(5);
        let segs = extract_fiber(&f, [0.3, 0.6]);
        assert!(!segs.is_empty());
        for s in &segs {
            for p in s {
                assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.6).abs() < 1e-12);
            }
        }
        let len: f64 = segs
            .iter()
            .map(|[p, q]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
            .sum();
        assert!((len - 1.0).abs() < 1e-9, "fiber length {len}");
    }

    #[test]
    fn triangles_face_outward() {
        let f = xy_field(6);
        let m = extract_fiber_surface(&f, &square(0.3, 0.7));
        for t in &m.triangles {
            let [a, b, c] = t.map(|i| m.positions[i as usize]);
            let n = cross3(sub3(b, a), sub3(c, a));
            let centroid = [0, 1, 2].map(|k| (a[k] + b[k] + c[k]) / 3.0);
            let out = [centroid[0] - 0.5, centroid[1] - 0.5, 0.0];
            assert!(dot3(n, out) > 0.0);
        }
    }
}
