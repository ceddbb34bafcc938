//! Euclidean cone surfaces presented as glued triangles.
//!
//! A surface is a finite list of counterclockwise Euclidean triangles, each
//! living in its own chart of the plane, together with a fixed-point-free
//! pairing of the `3F` edge slots. Each pairing carries the unique
//! orientation-preserving isometry that maps one slot's oriented edge onto
//! the other slot's *reversed* oriented edge, so the quotient is a closed
//! oriented surface with a Euclidean cone metric.
//!
//! Conventions used throughout the crate:
//! - edge `i` of a triangle is the edge opposite corner `i`, oriented from
//!   corner `(i+1)%3` to corner `(i+2)%3` (the boundary orientation);
//! - a gluing pair `(a, b)` identifies `start(a) ↦ end(b)` and
//!   `end(a) ↦ start(b)`.

use crate::geom::{signed_angle, unsigned_angle, Isometry, Vec2};
use crate::tol::{ANGLE_TOL, AREA_EPSILON, LENGTH_TOL_REL};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A Euclidean triangle chart. Corners must be in counterclockwise order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Triangle {
    pub corners: [Vec2; 3],
}

impl Triangle {
    pub fn new(a: Vec2, b: Vec2, c: Vec2) -> Self {
        Triangle { corners: [a, b, c] }
    }

    pub fn signed_area(&self) -> f64 {
        let [a, b, c] = self.corners;
        b.sub(a).cross(c.sub(a)) / 2.0
    }

    /// Interior angle at corner `i`, in `(0, π)` for nondegenerate triangles.
    pub fn corner_angle(&self, i: usize) -> f64 {
        let p = self.corners[i];
        let u = self.corners[(i + 1) % 3].sub(p);
        let v = self.corners[(i + 2) % 3].sub(p);
        unsigned_angle(u, v)
    }

    /// Start corner of edge `e` under the boundary orientation.
    pub fn edge_start(&self, e: usize) -> Vec2 {
        self.corners[(e + 1) % 3]
    }

    pub fn edge_end(&self, e: usize) -> Vec2 {
        self.corners[(e + 2) % 3]
    }

    pub fn edge_vector(&self, e: usize) -> Vec2 {
        self.edge_end(e).sub(self.edge_start(e))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_vector(e).norm()
    }

    /// Point at parameter `t ∈ [0,1]` along edge `e` (from start to end).
    pub fn on_edge(&self, e: usize, t: f64) -> Vec2 {
        self.edge_start(e).lerp(self.edge_end(e), t)
    }
}

/// One of the three oriented edge slots of a triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub tri: usize,
    pub edge: usize,
}

impl Slot {
    pub fn new(tri: usize, edge: usize) -> Self {
        Slot { tri, edge }
    }
}

/// A corner instance `(triangle, corner index)`.
pub type Corner = (usize, usize);

/// A vertex class of the glued surface: the cycle of corner instances
/// identified to a single point, listed in rotational (link) order, with
/// their interior angles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexClass {
    /// Corner instances in the order visited by walking around the vertex.
    pub corners: Vec<Corner>,
    /// Interior angle of each corner instance, same order as `corners`.
    pub angles: Vec<f64>,
    /// Partial sums of `angles`: `cumulative[k] = Σ_{l<k} angles[l]`.
    pub cumulative: Vec<f64>,
    /// The cone angle: total angle around the vertex.
    pub total_angle: f64,
}

impl VertexClass {
    /// A vertex is a cone point when its angle differs from `2π` by more
    /// than the angle tolerance; otherwise it is a regular point.
    pub fn is_cone_point(&self) -> bool {
        (self.total_angle - 2.0 * std::f64::consts::PI).abs() > ANGLE_TOL
    }
}

/// A cone point report: vertex class id, cone angle, incident corners.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConePoint {
    pub vertex_class_id: usize,
    pub cone_angle: f64,
    pub incident_corners: Vec<Corner>,
}

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("triangle {tri} is degenerate (signed area {area:e})")]
    DegenerateTriangle { tri: usize, area: f64 },
    #[error("slot ({tri},{edge}) is out of range")]
    SlotOutOfRange { tri: usize, edge: usize },
    #[error("edge slot ({tri},{edge}) is not covered by the gluing")]
    UnpairedEdge { tri: usize, edge: usize },
    #[error("edge slot ({tri},{edge}) appears in more than one gluing pair")]
    DuplicatePairing { tri: usize, edge: usize },
    #[error("edge slot ({tri},{edge}) is glued to itself")]
    SelfPairedSlot { tri: usize, edge: usize },
    #[error("glued edges of pair {pair} differ in length by {delta:e}")]
    LengthMismatch { pair: usize, delta: f64 },
    #[error("link of vertex class {class} is not a single circle")]
    NonSurfaceLink { class: usize },
    #[error("vertex class {class} has cone angle {angle} < 2π")]
    NotNpc { class: usize, angle: f64 },
    #[error("Gauss-Bonnet residual {residual:e} exceeds tolerance")]
    GaussBonnetViolation { residual: f64 },
    #[error("polygon boundary is self-intersecting")]
    SelfIntersectingPolygon,
    #[error("polygon does not close (defect {defect:e})")]
    NotClosed { defect: f64 },
    #[error("paired polygon sides {i} and {j} differ in length by {delta:e}")]
    PairLengthMismatch { i: usize, j: usize, delta: f64 },
    #[error("polygon boundary is not counterclockwise")]
    NotCounterclockwise,
    #[error("polygon side pairing is not a perfect matching")]
    BadPairing,
    #[error("genus must be at least 2")]
    InvalidGenus,
    #[error("the dual graph of the triangulation is disconnected")]
    DisconnectedDualGraph,
    #[error("no valid sample found within {attempts} attempts")]
    SamplingExhausted { attempts: usize },
}

/// A closed oriented surface with a Euclidean cone metric, presented by
/// glued triangles. Immutable after construction; all derived data is
/// computed and validated by [`build_from_triangles`].
#[derive(Debug, Clone)]
pub struct ConeSurface {
    triangles: Vec<Triangle>,
    pairs: Vec<(Slot, Slot)>,
    /// Per pair, the isometry from the first slot's chart to the second's.
    isometries: Vec<Isometry>,
    /// For each slot: (pair index, true if the slot is first in its pair).
    slot_pair: Vec<[(usize, bool); 3]>,
    vertex_classes: Vec<VertexClass>,
    /// Vertex class id of each corner instance.
    corner_class: Vec<[usize; 3]>,
    /// Position of each corner instance in its class's walk order.
    corner_walk_pos: Vec<[usize; 3]>,
    euler_characteristic: i64,
    genus: i64,
    npc: bool,
}

impl ConeSurface {
    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn triangle(&self, t: usize) -> &Triangle {
        &self.triangles[t]
    }

    pub fn pairs(&self) -> &[(Slot, Slot)] {
        &self.pairs
    }

    pub fn pair_of(&self, s: Slot) -> (usize, bool) {
        self.slot_pair[s.tri][s.edge]
    }

    pub fn partner(&self, s: Slot) -> Slot {
        let (p, first) = self.pair_of(s);
        if first {
            self.pairs[p].1
        } else {
            self.pairs[p].0
        }
    }

    /// Isometry from `s`'s chart to its partner's chart across the gluing.
    pub fn gluing_from(&self, s: Slot) -> Isometry {
        let (p, first) = self.pair_of(s);
        if first {
            self.isometries[p]
        } else {
            self.isometries[p].inverse()
        }
    }

    pub fn vertex_classes(&self) -> &[VertexClass] {
        &self.vertex_classes
    }

    pub fn class_of(&self, corner: Corner) -> usize {
        self.corner_class[corner.0][corner.1]
    }

    pub fn walk_pos(&self, corner: Corner) -> usize {
        self.corner_walk_pos[corner.0][corner.1]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.euler_characteristic
    }

    pub fn genus(&self) -> i64 {
        self.genus
    }

    /// Whether every vertex class has angle at least `2π` (non-positive
    /// curvature).
    pub fn is_npc(&self) -> bool {
        self.npc
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| t.signed_area()).sum()
    }

    /// Vertex classes whose angle differs from `2π`, i.e. genuine cone
    /// points.
    pub fn cone_points(&self) -> Vec<ConePoint> {
        self.vertex_classes
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_cone_point())
            .map(|(id, v)| ConePoint {
                vertex_class_id: id,
                cone_angle: v.total_angle,
                incident_corners: v.corners.clone(),
            })
            .collect()
    }

    /// The corner-walk step around a vertex: from corner `(t,c)`, cross the
    /// edge slot `(t, (c+2)%3)` (the edge for which `c` is the start corner)
    /// and land on the identified corner of the neighboring triangle.
    pub fn walk_corner(&self, corner: Corner) -> Corner {
        let (t, c) = corner;
        let s = Slot::new(t, (c + 2) % 3);
        let p = self.partner(s);
        (p.tri, (p.edge + 2) % 3)
    }

    /// Angular coordinate of a ray based at a vertex, measured in the global
    /// fan coordinate of the vertex class (total range `[0, cone angle)`).
    ///
    /// `corner` identifies the chart instance the ray lives in and `dir` is
    /// the ray direction from the vertex in that chart.
    pub fn fan_theta(&self, corner: Corner, dir: Vec2) -> f64 {
        let (t, c) = corner;
        let class = &self.vertex_classes[self.class_of(corner)];
        let k = self.walk_pos(corner);
        let tri = &self.triangles[t];
        let p = tri.corners[c];
        let r1 = tri.corners[(c + 1) % 3].sub(p);
        let beta = unsigned_angle(dir, r1).clamp(0.0, class.angles[k]);
        class.cumulative[k] + (class.angles[k] - beta)
    }

    /// The oriented list of fan slots a path crosses when detouring around a
    /// vertex from the chart instance of `in_corner` to the chart instance of
    /// `out_corner` (in the walk direction when `walk_side` is true, against
    /// it otherwise). Both corners must belong to the same vertex class.
    ///
    /// The walk counts chart instances rather than angles, so the resulting
    /// slot chain always connects the two charts even when an adjacent path
    /// segment runs exactly along a fan boundary ray.
    ///
    /// Each returned entry is the slot crossed, plus `0.0` or `1.0` telling
    /// which end of that slot the vertex sits at (parameters near that end
    /// stay near the vertex).
    pub fn fan_detour(
        &self,
        in_corner: Corner,
        out_corner: Corner,
        walk_side: bool,
    ) -> Vec<(Slot, f64)> {
        debug_assert_eq!(self.class_of(in_corner), self.class_of(out_corner));
        let class = &self.vertex_classes[self.class_of(in_corner)];
        let m = class.corners.len();
        let k_out = self.walk_pos(out_corner);
        let mut k = self.walk_pos(in_corner);
        let mut out = Vec::new();
        while k != k_out {
            let (t, c) = class.corners[k];
            if walk_side {
                // Crossing from instance k into instance k+1: exit through
                // the slot of instance k whose start corner is the vertex.
                out.push((Slot::new(t, (c + 2) % 3), 0.0));
                k = (k + 1) % m;
            } else {
                // Crossing from instance k into instance k-1: exit through
                // the slot of instance k whose end corner is the vertex.
                out.push((Slot::new(t, (c + 1) % 3), 1.0));
                k = (k + m - 1) % m;
            }
        }
        out
    }
}

fn union_find_root(parent: &mut Vec<usize>, mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union_find_join(parent: &mut Vec<usize>, a: usize, b: usize) {
    let ra = union_find_root(parent, a);
    let rb = union_find_root(parent, b);
    if ra != rb {
        parent[ra] = rb;
    }
}

/// Construct a [`ConeSurface`] from triangle charts and a slot pairing,
/// verifying every structural invariant: nondegenerate triangles, a perfect
/// fixed-point-free pairing, equal glued edge lengths, single-circle vertex
/// links, the Gauss-Bonnet identity, and (optionally) non-positive
/// curvature.
pub fn build_from_triangles(
    triangles: Vec<Triangle>,
    pairs: Vec<(Slot, Slot)>,
    npc_required: bool,
) -> Result<ConeSurface, SurfaceError> {
    let f = triangles.len();
    if f == 0 {
        return Err(SurfaceError::UnpairedEdge { tri: 0, edge: 0 });
    }
    for (t, tri) in triangles.iter().enumerate() {
        let area = tri.signed_area();
        if area <= AREA_EPSILON {
            return Err(SurfaceError::DegenerateTriangle { tri: t, area });
        }
    }

    // Pairing must be a fixed-point-free involution covering all 3F slots.
    let mut slot_pair = vec![[(usize::MAX, false); 3]; f];
    for (p, &(a, b)) in pairs.iter().enumerate() {
        for s in [a, b] {
            if s.tri >= f || s.edge >= 3 {
                return Err(SurfaceError::SlotOutOfRange {
                    tri: s.tri,
                    edge: s.edge,
                });
            }
        }
        if a == b {
            return Err(SurfaceError::SelfPairedSlot {
                tri: a.tri,
                edge: a.edge,
            });
        }
        for (s, first) in [(a, true), (b, false)] {
            if slot_pair[s.tri][s.edge].0 != usize::MAX {
                return Err(SurfaceError::DuplicatePairing {
                    tri: s.tri,
                    edge: s.edge,
                });
            }
            slot_pair[s.tri][s.edge] = (p, first);
        }
    }
    for t in 0..f {
        for e in 0..3 {
            if slot_pair[t][e].0 == usize::MAX {
                return Err(SurfaceError::UnpairedEdge { tri: t, edge: e });
            }
        }
    }

    // Derived identification isometries: rotate slot a's oriented edge onto
    // the reverse of slot b's, matching midpoints.
    let mut isometries = Vec::with_capacity(pairs.len());
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let ta = &triangles[a.tri];
        let tb = &triangles[b.tri];
        let la = ta.edge_length(a.edge);
        let lb = tb.edge_length(b.edge);
        let delta = (la - lb).abs();
        if delta > LENGTH_TOL_REL * la.max(lb) {
            return Err(SurfaceError::LengthMismatch { pair: p, delta });
        }
        let va = ta.edge_vector(a.edge);
        let vb_rev = tb.edge_start(b.edge).sub(tb.edge_end(b.edge));
        let theta = signed_angle(va, vb_rev);
        let mid_a = ta.on_edge(a.edge, 0.5);
        let mid_b = tb.on_edge(b.edge, 0.5);
        isometries.push(Isometry::rotation_then_match(theta, mid_a, mid_b));
    }

    // Partner lookup closure for the corner walk, before ConeSurface exists.
    let partner = |s: Slot| -> Slot {
        let (p, first) = slot_pair[s.tri][s.edge];
        if first {
            pairs[p].1
        } else {
            pairs[p].0
        }
    };
    let walk = |(t, c): Corner| -> Corner {
        let p = partner(Slot::new(t, (c + 2) % 3));
        (p.tri, (p.edge + 2) % 3)
    };

    // Vertex classes as orbits of the corner walk.
    let corner_id = |t: usize, c: usize| 3 * t + c;
    let mut corner_class = vec![[usize::MAX; 3]; f];
    let mut corner_walk_pos = vec![[usize::MAX; 3]; f];
    let mut vertex_classes: Vec<VertexClass> = Vec::new();
    for t0 in 0..f {
        for c0 in 0..3 {
            if corner_class[t0][c0] != usize::MAX {
                continue;
            }
            let id = vertex_classes.len();
            let mut corners = Vec::new();
            let mut cur = (t0, c0);
            loop {
                corner_class[cur.0][cur.1] = id;
                corner_walk_pos[cur.0][cur.1] = corners.len();
                corners.push(cur);
                cur = walk(cur);
                if cur == (t0, c0) {
                    break;
                }
                if corner_class[cur.0][cur.1] != usize::MAX {
                    // Walk re-entered a visited corner without closing up.
                    return Err(SurfaceError::NonSurfaceLink { class: id });
                }
            }
            let angles: Vec<f64> = corners
                .iter()
                .map(|&(t, c)| triangles[t].corner_angle(c))
                .collect();
            let mut cumulative = Vec::with_capacity(angles.len());
            let mut acc = 0.0;
            for a in &angles {
                cumulative.push(acc);
                acc += a;
            }
            vertex_classes.push(VertexClass {
                corners,
                angles,
                cumulative,
                total_angle: acc,
            });
        }
    }

    // Belt and braces: the corner identifications induced by the gluing must
    // produce exactly the walk orbits, or some vertex link is not a circle.
    let mut parent: Vec<usize> = (0..3 * f).collect();
    for &(a, b) in &pairs {
        union_find_join(
            &mut parent,
            corner_id(a.tri, (a.edge + 1) % 3),
            corner_id(b.tri, (b.edge + 2) % 3),
        );
        union_find_join(
            &mut parent,
            corner_id(a.tri, (a.edge + 2) % 3),
            corner_id(b.tri, (b.edge + 1) % 3),
        );
    }
    for t in 0..f {
        for c in 0..3 {
            for t2 in 0..f {
                for c2 in 0..3 {
                    let same_class = corner_class[t][c] == corner_class[t2][c2];
                    let same_root = union_find_root(&mut parent, corner_id(t, c))
                        == union_find_root(&mut parent, corner_id(t2, c2));
                    if same_class != same_root {
                        return Err(SurfaceError::NonSurfaceLink {
                            class: corner_class[t][c],
                        });
                    }
                }
            }
        }
    }

    let v = vertex_classes.len() as i64;
    let e = (3 * f / 2) as i64;
    let chi = v - e + f as i64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let deficit: f64 = vertex_classes
        .iter()
        .map(|vc| two_pi - vc.total_angle)
        .sum();
    let residual = (two_pi * chi as f64 - deficit).abs();
    if residual > 1e-9 {
        return Err(SurfaceError::GaussBonnetViolation { residual });
    }
    let genus = (2 - chi) / 2;

    let npc = vertex_classes
        .iter()
        .all(|vc| vc.total_angle >= two_pi - ANGLE_TOL);
    if npc_required && !npc {
        let (class, angle) = vertex_classes
            .iter()
            .enumerate()
            .map(|(i, vc)| (i, vc.total_angle))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        return Err(SurfaceError::NotNpc { class, angle });
    }

    Ok(ConeSurface {
        triangles,
        pairs,
        isometries,
        slot_pair,
        vertex_classes,
        corner_class,
        corner_walk_pos,
        euler_characteristic: chi,
        genus,
        npc,
    })
}

/// Absolute Gauss-Bonnet residual `|2πχ − Σ_x (2π − c(x))|`. Construction
/// rejects surfaces where this exceeds `1e−9`, so the exposed value is a
/// diagnostic.
pub fn gauss_bonnet_residual(s: &ConeSurface) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let deficit: f64 = s
        .vertex_classes
        .iter()
        .map(|vc| two_pi - vc.total_angle)
        .sum();
    (two_pi * s.euler_characteristic as f64 - deficit).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_torus() -> ConeSurface {
        // Two triangles on the unit square, opposite sides glued by
        // translations, diagonal glued to itself across the two triangles.
        let t0 = Triangle::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0));
        let t1 = Triangle::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0));
        let pairs = vec![
            // Diagonal: t0 edge 1 (C->A) with t1 edge 2 (A->C).
            (Slot::new(0, 1), Slot::new(1, 2)),
            // Bottom of t0 with top of t1 (translation by (0,1)).
            (Slot::new(0, 2), Slot::new(1, 0)),
            // Right of t0 with left of t1 (translation by (-1,0)).
            (Slot::new(0, 0), Slot::new(1, 1)),
        ];
        build_from_triangles(vec![t0, t1], pairs, true).unwrap()
    }

    #[test]
    fn torus_has_no_cone_points() {
        let s = unit_square_torus();
        assert_eq!(s.euler_characteristic(), 0);
        assert_eq!(s.genus(), 1);
        assert_eq!(s.vertex_classes().len(), 1);
        assert!(s.cone_points().is_empty());
        assert!(s.is_npc());
        assert!(gauss_bonnet_residual(&s) < 1e-9);
        assert!((s.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torus_gluing_isometries_are_translations() {
        let s = unit_square_torus();
        for p in 0..s.pairs().len() {
            let iso = s.isometries[p];
            assert!(iso.rotation_angle().abs() < 1e-12);
        }
    }

    #[test]
    fn walk_and_fan_are_consistent() {
        let s = unit_square_torus();
        let class = &s.vertex_classes()[0];
        assert_eq!(class.corners.len(), 6);
        assert!((class.total_angle - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        // Walking from any corner returns after exactly the class size.
        let mut cur = class.corners[0];
        for _ in 0..class.corners.len() {
            cur = s.walk_corner(cur);
        }
        assert_eq!(cur, class.corners[0]);
    }

    #[test]
    fn missing_pair_is_rejected() {
        let t0 = Triangle::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0));
        let t1 = Triangle::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0));
        let pairs = vec![(Slot::new(0, 1), Slot::new(1, 2))];
        let err = build_from_triangles(vec![t0, t1], pairs, false).unwrap_err();
        assert!(matches!(err, SurfaceError::UnpairedEdge { .. }));
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let t0 = Triangle::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0));
        let err = build_from_triangles(vec![t0], vec![], false).unwrap_err();
        assert!(matches!(err, SurfaceError::DegenerateTriangle { .. }));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let t0 = Triangle::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0));
        let t1 = Triangle::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 2.0), Vec2::new(0.0, 1.0));
        let pairs = vec![
            (Slot::new(0, 1), Slot::new(1, 2)),
            (Slot::new(0, 2), Slot::new(1, 0)),
            (Slot::new(0, 0), Slot::new(1, 1)),
        ];
        let err = build_from_triangles(vec![t0, t1], pairs, false).unwrap_err();
        assert!(matches!(err, SurfaceError::LengthMismatch { .. }));
    }

    #[test]
    fn fan_theta_spans_the_class_angle() {
        let s = unit_square_torus();
        let class = &s.vertex_classes()[0];
        // Rays along the two boundary edges of a corner hit the wedge ends.
        let (t, c) = class.corners[2];
        let tri = s.triangle(t);
        let p = tri.corners[c];
        let r1 = tri.corners[(c + 1) % 3].sub(p);
        let r2 = tri.corners[(c + 2) % 3].sub(p);
        let k = s.walk_pos((t, c));
        let th1 = s.fan_theta((t, c), r1);
        let th2 = s.fan_theta((t, c), r2);
        assert!((th1 - (class.cumulative[k] + class.angles[k])).abs() < 1e-12);
        assert!((th2 - class.cumulative[k]).abs() < 1e-12);
    }
}
