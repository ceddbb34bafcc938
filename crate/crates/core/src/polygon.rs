//! Polygon presentations of cone surfaces.
//!
//! A presentation is a simple counterclockwise polygon given by its edge
//! vectors, together with a perfect matching of its sides. Each matched
//! side pair is identified by the unique orientation-preserving isometry
//! that reverses boundary orientations, exactly as in
//! [`crate::surface::build_from_triangles`].

use crate::geom::{segments_cross, Vec2};
use crate::surface::{build_from_triangles, ConeSurface, Slot, SurfaceError, Triangle};
use crate::tol::{AREA_EPSILON, LENGTH_TOL_REL};
use serde::{Deserialize, Serialize};

/// A polygon presentation: edge vectors in counterclockwise boundary order
/// and a perfect matching of side indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonPresentation {
    pub edges: Vec<Vec2>,
    pub pairing: Vec<(usize, usize)>,
}

impl PolygonPresentation {
    pub fn new(edges: Vec<Vec2>, pairing: Vec<(usize, usize)>) -> Self {
        PolygonPresentation { edges, pairing }
    }

    /// Boundary vertices `P_k = Σ_{j<k} z_j`, starting at the origin.
    pub fn vertices(&self) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(self.edges.len());
        let mut acc = Vec2::ZERO;
        for z in &self.edges {
            out.push(acc);
            acc = acc.add(*z);
        }
        out
    }

    pub fn closure_defect(&self) -> f64 {
        self.edges
            .iter()
            .fold(Vec2::ZERO, |acc, z| acc.add(*z))
            .norm()
    }

    /// Validate closure, pair lengths, counterclockwise orientation, the
    /// matching, and simplicity of the boundary.
    pub fn validate(&self) -> Result<(), SurfaceError> {
        let n = self.edges.len();
        if n < 3 {
            return Err(SurfaceError::BadPairing);
        }
        let defect = self.closure_defect();
        if defect > 1e-9 {
            return Err(SurfaceError::NotClosed { defect });
        }
        let mut seen = vec![false; n];
        for &(i, j) in &self.pairing {
            if i >= n || j >= n || i == j || seen[i] || seen[j] {
                return Err(SurfaceError::BadPairing);
            }
            seen[i] = true;
            seen[j] = true;
            let li = self.edges[i].norm();
            let lj = self.edges[j].norm();
            let delta = (li - lj).abs();
            if delta > LENGTH_TOL_REL * li.max(lj) {
                return Err(SurfaceError::PairLengthMismatch { i, j, delta });
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(SurfaceError::BadPairing);
        }

        let verts = self.vertices();
        let area: f64 = (0..n)
            .map(|k| verts[k].cross(verts[(k + 1) % n]))
            .sum::<f64>()
            / 2.0;
        if area <= AREA_EPSILON {
            return Err(SurfaceError::NotCounterclockwise);
        }

        // Simplicity: no proper crossings between non-adjacent sides, no
        // zero-length sides, and no spike (a vertex where the boundary
        // exactly reverses direction).
        for k in 0..n {
            if self.edges[k].norm() < 1e-12 {
                return Err(SurfaceError::SelfIntersectingPolygon);
            }
            let next = (k + 1) % n;
            let u = self.edges[k];
            let v = self.edges[next];
            if u.cross(v).abs() < 1e-12 * u.norm() * v.norm() && u.dot(v) < 0.0 {
                return Err(SurfaceError::SelfIntersectingPolygon);
            }
        }
        // A simple boundary never revisits a vertex; proper-crossing tests
        // miss self-touching walks (two non-adjacent corners at the same
        // point), so check vertex distinctness separately.
        let scale = self.edges.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        for a in 0..n {
            for b in (a + 1)..n {
                if verts[a].sub(verts[b]).norm() < 1e-10 * scale {
                    return Err(SurfaceError::SelfIntersectingPolygon);
                }
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                if b == a + 1 || (a == 0 && b == n - 1) {
                    continue;
                }
                let (a0, a1) = (verts[a], verts[(a + 1) % n]);
                let (b0, b1) = (verts[b], verts[(b + 1) % n]);
                if segments_cross(a0, a1, b0, b1, 1e-12) {
                    return Err(SurfaceError::SelfIntersectingPolygon);
                }
            }
        }
        Ok(())
    }
}

/// A triangulation of a simple polygon by ear clipping: triangles as vertex
/// index triples, plus the location of each boundary side in the
/// triangulation.
#[derive(Debug, Clone)]
pub struct EarClipTriangulation {
    /// Counterclockwise triangles as indices into the polygon vertex list.
    pub triangles: Vec<[usize; 3]>,
    /// For boundary side `k` (from vertex `k` to `k+1`), the slot of the
    /// triangle edge realizing it.
    pub boundary_slot: Vec<Slot>,
    /// Interior diagonal gluings between adjacent triangles.
    pub diagonal_pairs: Vec<(Slot, Slot)>,
}

/// Whether `p` lies inside the counterclockwise triangle `abc` or on its
/// boundary (up to a scale-relative tolerance). Boundary points count: an
/// ear whose closing chord passes through another polygon vertex is not a
/// valid ear.
fn point_blocks_ear(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool {
    let scale = b.sub(a).norm().max(c.sub(b).norm()).max(a.sub(c).norm());
    let tol = 1e-12 * scale * scale;
    let d1 = b.sub(a).cross(p.sub(a));
    let d2 = c.sub(b).cross(p.sub(b));
    let d3 = a.sub(c).cross(p.sub(c));
    d1 > -tol && d2 > -tol && d3 > -tol
}

/// Ear-clip a simple counterclockwise polygon given by its vertices.
///
/// Returns `None` if clipping gets stuck, which cannot happen for valid
/// simple polygons with nondegenerate ears.
pub fn ear_clip(verts: &[Vec2]) -> Option<EarClipTriangulation> {
    let n = verts.len();
    let mut ring: Vec<usize> = (0..n).collect();
    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(n - 2);
    // For each undirected vertex-index pair, remember which triangle edge
    // realizes it, to wire diagonals and boundary sides afterwards.
    let mut edge_slots: std::collections::BTreeMap<(usize, usize), Vec<(Slot, bool)>> =
        std::collections::BTreeMap::new();

    while ring.len() > 3 {
        let m = ring.len();
        let mut clipped = false;
        for i in 0..m {
            let ia = ring[(i + m - 1) % m];
            let ib = ring[i];
            let ic = ring[(i + 1) % m];
            let (a, b, c) = (verts[ia], verts[ib], verts[ic]);
            let cross = b.sub(a).cross(c.sub(a));
            if cross <= 2.0 * AREA_EPSILON {
                continue;
            }
            let mut ok = true;
            for &other in &ring {
                if other == ia || other == ib || other == ic {
                    continue;
                }
                if point_blocks_ear(verts[other], a, b, c) {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            let t = triangles.len();
            triangles.push([ia, ib, ic]);
            for e in 0..3 {
                let (u, v) = match e {
                    0 => (ib, ic),
                    1 => (ic, ia),
                    _ => (ia, ib),
                };
                let key = (u.min(v), u.max(v));
                edge_slots
                    .entry(key)
                    .or_default()
                    .push((Slot::new(t, e), u < v));
            }
            ring.remove(i);
            clipped = true;
            break;
        }
        if !clipped {
            return None;
        }
    }
    let [ia, ib, ic] = [ring[0], ring[1], ring[2]];
    if verts[ib].sub(verts[ia]).cross(verts[ic].sub(verts[ia])) <= 2.0 * AREA_EPSILON {
        return None;
    }
    let t = triangles.len();
    triangles.push([ia, ib, ic]);
    for e in 0..3 {
        let (u, v) = match e {
            0 => (ib, ic),
            1 => (ic, ia),
            _ => (ia, ib),
        };
        let key = (u.min(v), u.max(v));
        edge_slots
            .entry(key)
            .or_default()
            .push((Slot::new(t, e), u < v));
    }

    let mut boundary_slot = vec![Slot::new(usize::MAX, 0); n];
    let mut diagonal_pairs = Vec::new();
    for ((u, v), slots) in edge_slots {
        match slots.len() {
            1 => {
                // Boundary side: from u to v or v to u along the polygon.
                let side = if (u + 1) % n == v { u } else { v };
                debug_assert!((side + 1) % n == if side == u { v } else { u });
                boundary_slot[side] = slots[0].0;
            }
            2 => diagonal_pairs.push((slots[0].0, slots[1].0)),
            _ => return None,
        }
    }
    if boundary_slot.iter().any(|s| s.tri == usize::MAX) {
        return None;
    }
    Some(EarClipTriangulation {
        triangles,
        boundary_slot,
        diagonal_pairs,
    })
}

/// Build a [`ConeSurface`] from a polygon presentation by ear clipping the
/// polygon and gluing boundary sides according to the pairing.
pub fn build_from_polygon(
    p: &PolygonPresentation,
    npc_required: bool,
) -> Result<ConeSurface, SurfaceError> {
    p.validate()?;
    let verts = p.vertices();
    let tri = ear_clip(&verts).ok_or(SurfaceError::SelfIntersectingPolygon)?;
    surface_from_triangulation(&verts, &tri, &p.pairing, npc_required)
}

/// Assemble a surface from an ear-clip triangulation of `verts` and a side
/// pairing. Exposed so that two combinatorially identical polygons can be
/// built over the *same* triangulation.
pub fn surface_from_triangulation(
    verts: &[Vec2],
    tri: &EarClipTriangulation,
    pairing: &[(usize, usize)],
    npc_required: bool,
) -> Result<ConeSurface, SurfaceError> {
    let triangles: Vec<Triangle> = tri
        .triangles
        .iter()
        .map(|&[a, b, c]| Triangle::new(verts[a], verts[b], verts[c]))
        .collect();
    let mut pairs = tri.diagonal_pairs.clone();
    for &(i, j) in pairing {
        pairs.push((tri.boundary_slot[i], tri.boundary_slot[j]));
    }
    build_from_triangles(triangles, pairs, npc_required)
}

/// Check that an ear-clip triangulation of one vertex list remains valid
/// (counterclockwise, diagonals interior) for another vertex list with the
/// same combinatorics.
pub fn triangulation_fits(verts: &[Vec2], tri: &EarClipTriangulation) -> bool {
    if verts.len() < 3 {
        return false;
    }
    for &[a, b, c] in &tri.triangles {
        if a >= verts.len() || b >= verts.len() || c >= verts.len() {
            return false;
        }
        let area = verts[b].sub(verts[a]).cross(verts[c].sub(verts[a])) / 2.0;
        if area <= AREA_EPSILON {
            return false;
        }
    }
    // Triangles must tile the polygon: total area matches the shoelace area.
    let n = verts.len();
    let poly_area: f64 = (0..n)
        .map(|k| verts[k].cross(verts[(k + 1) % n]))
        .sum::<f64>()
        / 2.0;
    let tri_area: f64 = tri
        .triangles
        .iter()
        .map(|&[a, b, c]| verts[b].sub(verts[a]).cross(verts[c].sub(verts[a])) / 2.0)
        .sum();
    (poly_area - tri_area).abs() <= 1e-9 * poly_area.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_torus_from_polygon() {
        // Unit square with opposite sides identified: a flat torus.
        let p = PolygonPresentation::new(
            vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
                Vec2::new(-1.0, 0.0),
                Vec2::new(0.0, -1.0),
            ],
            vec![(0, 2), (1, 3)],
        );
        let s = build_from_polygon(&p, true).unwrap();
        assert_eq!(s.genus(), 1);
        assert!(s.cone_points().is_empty());
    }

    #[test]
    fn open_polygon_is_rejected() {
        let p = PolygonPresentation::new(
            vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-1.0, -0.5)],
            vec![],
        );
        assert!(matches!(
            p.validate(),
            Err(SurfaceError::NotClosed { .. })
        ));
    }

    #[test]
    fn clockwise_polygon_is_rejected() {
        let p = PolygonPresentation::new(
            vec![
                Vec2::new(0.0, 1.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, -1.0),
                Vec2::new(-1.0, 0.0),
            ],
            vec![(0, 2), (1, 3)],
        );
        assert!(matches!(
            p.validate(),
            Err(SurfaceError::NotCounterclockwise)
        ));
    }

    #[test]
    fn pair_length_mismatch_is_rejected() {
        let p = PolygonPresentation::new(
            vec![
                Vec2::new(2.0, 0.0),
                Vec2::new(0.0, 1.0),
                Vec2::new(-2.0, 0.0),
                Vec2::new(0.0, -1.0),
            ],
            vec![(0, 1), (2, 3)],
        );
        assert!(matches!(
            p.validate(),
            Err(SurfaceError::PairLengthMismatch { .. })
        ));
    }

    #[test]
    fn ear_clip_covers_nonconvex_polygon() {
        // An L-shaped hexagon.
        let verts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        let tri = ear_clip(&verts).unwrap();
        assert_eq!(tri.triangles.len(), 4);
        assert_eq!(tri.diagonal_pairs.len(), 3);
        assert!(triangulation_fits(&verts, &tri));
    }
}
