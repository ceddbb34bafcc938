//! Length-minimizing closed geodesics by iterated corridor shortening.
//!
//! A closed curve given as a dual word is tightened by alternating two
//! moves until a certificate of local geodesy holds: (1) replace the part of
//! the path between consecutive vertex passages by the shortest path in the
//! developed corridor of triangles it crosses (a funnel pass, which may
//! pinch the path onto new vertices), and (2) push the path off any vertex
//! where one side subtends less than `π` (which strictly shortens on a
//! non-positively curved surface). Lengths are non-increasing across sweeps,
//! and the final path carries an independently checked certificate: bends at
//! edge crossings below [`crate::tol::CERT_BEND_TOL`] and both angles at
//! every vertex passage at least `π -` [`crate::tol::CERT_SIDE_TOL`].

use crate::curve::{CurveError, DualWord};
use crate::geom::{line_intersection_params, signed_angle, Isometry, Vec2};
use crate::surface::{ConeSurface, Corner, Slot};
use crate::tol::{
    CERT_BEND_TOL, CERT_SIDE_TOL, MAX_SWEEPS, MONOTONE_SLACK, NULL_LENGTH, TIGHTEN_TOL,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TightenError {
    #[error("the curve is null-homotopic; it has no geodesic representative")]
    NullHomotopic,
    #[error("tightening did not converge within {sweeps} sweeps (best length {best_length})")]
    IterationLimit { sweeps: usize, best_length: f64 },
    #[error("input word is not a closed transverse curve on this surface: {0}")]
    PathNotOnSurface(#[from] CurveError),
    #[error("final path failed certification (max bend {max_bend:e}, min side {min_side:?})")]
    NotCertified {
        max_bend: f64,
        min_side: Option<f64>,
    },
}

/// One node of a piecewise-geodesic closed path: a transverse edge crossing
/// or a passage through a vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathNode {
    /// The path crosses `exit_slot`'s glued edge at parameter `t` along the
    /// slot's oriented edge, leaving `exit_slot.tri`.
    Edge { exit_slot: Slot, t: f64 },
    /// The path passes through a vertex, arriving in `in_corner`'s chart and
    /// leaving in `out_corner`'s chart.
    Vertex {
        class: usize,
        in_corner: Corner,
        out_corner: Corner,
    },
}

/// A closed path transverse to the triangulation, as a cyclic node sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRep {
    pub nodes: Vec<PathNode>,
}

impl PathRep {
    /// Triangle the path occupies right after node `j`.
    pub fn tri_after(&self, s: &ConeSurface, j: usize) -> usize {
        match &self.nodes[j] {
            PathNode::Edge { exit_slot, .. } => s.partner(*exit_slot).tri,
            PathNode::Vertex { out_corner, .. } => out_corner.0,
        }
    }

    /// Triangle the path occupies right before node `j`.
    pub fn tri_before(&self, j: usize) -> usize {
        match &self.nodes[j] {
            PathNode::Edge { exit_slot, .. } => exit_slot.tri,
            PathNode::Vertex { in_corner, .. } => in_corner.0,
        }
    }

    /// Node position in the chart of `tri_after(j)` (start of segment `j`).
    pub fn start_pos(&self, s: &ConeSurface, j: usize) -> Vec2 {
        match &self.nodes[j] {
            PathNode::Edge { exit_slot, t } => {
                let p = s.partner(*exit_slot);
                s.triangle(p.tri).on_edge(p.edge, 1.0 - *t)
            }
            PathNode::Vertex { out_corner, .. } => s.triangle(out_corner.0).corners[out_corner.1],
        }
    }

    /// Node position in the chart of `tri_before(j)` (end of segment `j-1`).
    pub fn end_pos(&self, s: &ConeSurface, j: usize) -> Vec2 {
        match &self.nodes[j] {
            PathNode::Edge { exit_slot, t } => s.triangle(exit_slot.tri).on_edge(exit_slot.edge, *t),
            PathNode::Vertex { in_corner, .. } => s.triangle(in_corner.0).corners[in_corner.1],
        }
    }

    /// Chart-consistency check: each node must live in the triangle entered
    /// by the previous one.
    pub fn validate(&self, s: &ConeSurface) -> Result<(), CurveError> {
        if self.nodes.is_empty() {
            return Err(CurveError::EmptyWord);
        }
        let n = self.nodes.len();
        for j in 0..n {
            if self.tri_before(j) != self.tri_after(s, (j + n - 1) % n) {
                return Err(CurveError::NotChainable(j));
            }
        }
        Ok(())
    }

    /// Total length: sum of straight segments between consecutive nodes,
    /// each measured in the chart of the triangle it lies in.
    pub fn length(&self, s: &ConeSurface) -> f64 {
        let n = self.nodes.len();
        (0..n)
            .map(|j| self.start_pos(s, j).dist(self.end_pos(s, (j + 1) % n)))
            .sum()
    }

    fn segment_dir(&self, s: &ConeSurface, j: usize) -> Vec2 {
        let n = self.nodes.len();
        self.end_pos(s, (j + 1) % n)
            .sub(self.start_pos(s, j))
            .normalize()
    }
}

/// Independent certificate of local geodesy for a closed path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicCertificate {
    /// Largest bend (radians) over all transverse edge crossings.
    pub max_bend: f64,
    /// Smallest angle subtended on either side at any vertex passage; `None`
    /// when the path avoids all vertices.
    pub min_side_angle: Option<f64>,
    pub certified: bool,
}

/// Recompute the geodesy certificate from the path alone.
pub fn certify_geodesic(s: &ConeSurface, path: &PathRep) -> GeodesicCertificate {
    let n = path.nodes.len();
    let mut max_bend: f64 = 0.0;
    let mut min_side: Option<f64> = None;
    for j in 0..n {
        let v_in = path.segment_dir(s, (j + n - 1) % n);
        let v_out = path.segment_dir(s, j);
        match &path.nodes[j] {
            PathNode::Edge { exit_slot, .. } => {
                let transported = s.gluing_from(*exit_slot).apply_dir(v_in);
                let bend = signed_angle(transported, v_out).abs();
                if !bend.is_finite() {
                    return GeodesicCertificate {
                        max_bend: f64::INFINITY,
                        min_side_angle: min_side,
                        certified: false,
                    };
                }
                max_bend = max_bend.max(bend);
            }
            PathNode::Vertex {
                class,
                in_corner,
                out_corner,
            } => {
                let total = s.vertex_classes()[*class].total_angle;
                let theta_in = s.fan_theta(*in_corner, v_in.scale(-1.0));
                let theta_out = s.fan_theta(*out_corner, v_out);
                let side_a = (theta_out - theta_in).rem_euclid(total);
                let side_b = total - side_a;
                let m = side_a.min(side_b);
                if !m.is_finite() {
                    return GeodesicCertificate {
                        max_bend,
                        min_side_angle: None,
                        certified: false,
                    };
                }
                min_side = Some(min_side.map_or(m, |x: f64| x.min(m)));
            }
        }
    }
    let certified =
        max_bend < CERT_BEND_TOL && min_side.map_or(true, |m| m > PI - CERT_SIDE_TOL);
    GeodesicCertificate {
        max_bend,
        min_side_angle: min_side,
        certified,
    }
}

/// A tightened closed geodesic with its certificate and the per-sweep
/// length trace (non-increasing up to roundoff).
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub path: PathRep,
    pub length: f64,
    pub certificate: GeodesicCertificate,
    pub sweep_lengths: Vec<f64>,
}

impl GeodesicPath {
    /// Convert back to a transverse dual word, pushing every vertex passage
    /// off to the side subtending the larger angle.
    pub fn to_dual_word(&self, s: &ConeSurface) -> DualWord {
        path_to_dual_word(s, &self.path)
    }
}

/// Transverse dual word homotopic to the path: vertex passages are replaced
/// by the fan crossings on their wider side.
pub fn path_to_dual_word(s: &ConeSurface, path: &PathRep) -> DualWord {
    let n = path.nodes.len();
    let mut steps = Vec::new();
    for j in 0..n {
        match &path.nodes[j] {
            PathNode::Edge { exit_slot, .. } => steps.push(*exit_slot),
            PathNode::Vertex {
                class,
                in_corner,
                out_corner,
            } => {
                let total = s.vertex_classes()[*class].total_angle;
                let v_in = path.segment_dir(s, (j + n - 1) % n);
                let v_out = path.segment_dir(s, j);
                let theta_in = s.fan_theta(*in_corner, v_in.scale(-1.0));
                let theta_out = s.fan_theta(*out_corner, v_out);
                let side_a = (theta_out - theta_in).rem_euclid(total);
                let side_b = total - side_a;
                let walk_side = side_a >= side_b;
                for (slot, _) in s.fan_detour(*in_corner, *out_corner, walk_side) {
                    steps.push(slot);
                }
            }
        }
    }
    DualWord::new(steps)
}

// ---------------------------------------------------------------------------
// Funnel machinery
// ---------------------------------------------------------------------------

fn orient(o: Vec2, a: Vec2, b: Vec2) -> i32 {
    let u = a.sub(o);
    let v = b.sub(o);
    let f = u.cross(v);
    let thresh = 1e-12 * u.norm() * v.norm();
    if f > thresh {
        1
    } else if f < -thresh {
        -1
    } else {
        0
    }
}

fn points_close(a: Vec2, b: Vec2) -> bool {
    a.dist(b) < 1e-9 * (1.0 + a.norm().max(b.norm()))
}

#[derive(Debug, Clone, Copy)]
struct Pinch {
    point: Vec2,
    portal: usize,
    left_side: bool,
}

/// Shortest path through a corridor of portals from `source` to `target`.
/// Portals are `(left, right)` endpoint pairs as seen along the direction of
/// travel. Returns the interior pinch points in order.
fn funnel(source: Vec2, portals: &[(Vec2, Vec2)], target: Vec2) -> Vec<Pinch> {
    let m = portals.len();
    let mut out: Vec<Pinch> = Vec::new();
    let mut apex = source;
    let mut start_i = 0usize;
    'outer: loop {
        let mut left = apex;
        let mut right = apex;
        let mut left_set = false;
        let mut right_set = false;
        let mut left_i = start_i;
        let mut right_i = start_i;
        let mut i = start_i;
        loop {
            let (pl, pr) = if i < m {
                portals[i]
            } else {
                (target, target)
            };
            // Right arm.
            if !points_close(pr, apex) {
                if !right_set {
                    if left_set && orient(apex, left, pr) > 0 {
                        out.push(Pinch {
                            point: left,
                            portal: left_i,
                            left_side: true,
                        });
                        apex = left;
                        start_i = left_i + 1;
                        continue 'outer;
                    }
                    right = pr;
                    right_i = i;
                    right_set = true;
                } else {
                    match orient(apex, right, pr) {
                        1 => {
                            if left_set && orient(apex, left, pr) > 0 {
                                out.push(Pinch {
                                    point: left,
                                    portal: left_i,
                                    left_side: true,
                                });
                                apex = left;
                                start_i = left_i + 1;
                                continue 'outer;
                            }
                            right = pr;
                            right_i = i;
                        }
                        0 => {
                            if pr.dist(apex) < right.dist(apex) {
                                right = pr;
                                right_i = i;
                            }
                        }
                        _ => {}
                    }
                }
            }
            // Left arm.
            if !points_close(pl, apex) {
                if !left_set {
                    if right_set && orient(apex, right, pl) < 0 {
                        out.push(Pinch {
                            point: right,
                            portal: right_i,
                            left_side: false,
                        });
                        apex = right;
                        start_i = right_i + 1;
                        continue 'outer;
                    }
                    left = pl;
                    left_i = i;
                    left_set = true;
                } else {
                    match orient(apex, left, pl) {
                        -1 => {
                            if right_set && orient(apex, right, pl) < 0 {
                                out.push(Pinch {
                                    point: right,
                                    portal: right_i,
                                    left_side: false,
                                });
                                apex = right;
                                start_i = right_i + 1;
                                continue 'outer;
                            }
                            left = pl;
                            left_i = i;
                        }
                        0 => {
                            if pl.dist(apex) < left.dist(apex) {
                                left = pl;
                                left_i = i;
                            }
                        }
                        _ => {}
                    }
                }
            }
            if i == m {
                break 'outer;
            }
            i += 1;
        }
    }
    out
}

struct PortalMeta {
    left: Vec2,
    right: Vec2,
    slot: Slot,
}

/// Which side of the portal a shared vertex point sits on, if either.
fn portal_side_matching(p: &PortalMeta, pt: Vec2) -> Option<bool> {
    if points_close(p.left, pt) {
        Some(true)
    } else if points_close(p.right, pt) {
        Some(false)
    } else {
        None
    }
}

fn corner_before(slot: Slot, left_side: bool) -> Corner {
    if left_side {
        (slot.tri, (slot.edge + 2) % 3)
    } else {
        (slot.tri, (slot.edge + 1) % 3)
    }
}

fn corner_after(s: &ConeSurface, slot: Slot, left_side: bool) -> Corner {
    let p = s.partner(slot);
    if left_side {
        (p.tri, (p.edge + 1) % 3)
    } else {
        (p.tri, (p.edge + 2) % 3)
    }
}

struct RunResult {
    nodes: Vec<PathNode>,
    /// Replacement out-corner for the opening anchor, when the new path
    /// leaves it through later fan triangles.
    source_out: Option<Corner>,
    /// Replacement in-corner for the closing anchor.
    target_in: Option<Corner>,
}

fn crossing_param(a: Vec2, b: Vec2, portal: &PortalMeta) -> f64 {
    // Slot edge parameter runs from the right endpoint to the left.
    let u = match line_intersection_params(portal.right, portal.left, a, b) {
        Some((u, _)) => u,
        None => {
            let mid = a.add(b).scale(0.5);
            let v = portal.left.sub(portal.right);
            mid.sub(portal.right).dot(v) / v.dot(v)
        }
    };
    u.clamp(1e-9, 1.0 - 1e-9)
}

/// Shorten one run between fixed endpoints. `source_is_vertex` /
/// `target_is_vertex` enable grazing-group absorption at the ends.
fn shorten_run(
    s: &ConeSurface,
    source_dev: Vec2,
    portals: &[PortalMeta],
    target_dev: Vec2,
    source_is_vertex: bool,
    target_is_vertex: bool,
) -> RunResult {
    let m = portals.len();
    let mut pinches = funnel(
        source_dev,
        &portals.iter().map(|p| (p.left, p.right)).collect::<Vec<_>>(),
        target_dev,
    );
    // A pinch at an endpoint's own developed position is not a new vertex
    // visit: the path merely grazes the anchor. Drop it and let end-group
    // absorption account for those portals.
    if source_is_vertex {
        while pinches
            .first()
            .map_or(false, |p| points_close(p.point, source_dev))
        {
            pinches.remove(0);
        }
    }
    if target_is_vertex {
        while pinches
            .last()
            .map_or(false, |p| points_close(p.point, target_dev))
        {
            pinches.pop();
        }
    }
    // Absorb leading portals grazing the source vertex.
    let first_pinch_portal = pinches.first().map_or(m, |p| p.portal);
    let mut g_source = 0usize;
    let mut source_out = None;
    if source_is_vertex {
        while g_source < first_pinch_portal {
            match portal_side_matching(&portals[g_source], source_dev) {
                Some(side) => {
                    source_out = Some(corner_after(s, portals[g_source].slot, side));
                    g_source += 1;
                }
                None => break,
            }
        }
    }
    // Absorb trailing portals grazing the target vertex.
    let last_pinch_portal_end = pinches.last().map_or(g_source, |p| p.portal + 1);
    let mut g_target = m;
    let mut target_in = None;
    if target_is_vertex {
        while g_target > last_pinch_portal_end.max(g_source) {
            match portal_side_matching(&portals[g_target - 1], target_dev) {
                Some(side) => {
                    target_in = Some(corner_before(portals[g_target - 1].slot, side));
                    g_target -= 1;
                }
                None => break,
            }
        }
    }
    // Walk the pinch boundaries and emit nodes.
    let mut nodes = Vec::new();
    let mut seg_start = source_dev;
    let mut next_portal = g_source;
    let mut k = 0usize;
    while k <= pinches.len() {
        let (seg_end, pinch) = if k < pinches.len() {
            (pinches[k].point, Some(pinches[k]))
        } else {
            (target_dev, None)
        };
        if let Some(p) = pinch {
            // Maximal contiguous group of portals incident to the pinch
            // vertex: the chord into the pinch may graze earlier portals
            // ending at the same vertex, and the chord out of it may graze
            // later ones. All of them belong to the vertex passage.
            let mut g_start = p.portal;
            while g_start > next_portal
                && portal_side_matching(&portals[g_start - 1], p.point).is_some()
            {
                g_start -= 1;
            }
            let limit = pinches.get(k + 1).map_or(g_target, |q| q.portal);
            let mut g_end = p.portal + 1;
            while g_end < limit && portal_side_matching(&portals[g_end], p.point).is_some() {
                g_end += 1;
            }
            for i in next_portal..g_start {
                let t = crossing_param(seg_start, seg_end, &portals[i]);
                nodes.push(PathNode::Edge {
                    exit_slot: portals[i].slot,
                    t,
                });
            }
            let in_side = if g_start == p.portal {
                p.left_side
            } else {
                portal_side_matching(&portals[g_start], p.point).unwrap_or(p.left_side)
            };
            let out_side = if g_end - 1 == p.portal {
                p.left_side
            } else {
                portal_side_matching(&portals[g_end - 1], p.point).unwrap_or(p.left_side)
            };
            let in_corner = corner_before(portals[g_start].slot, in_side);
            let out_corner = corner_after(s, portals[g_end - 1].slot, out_side);
            let class = s.class_of(in_corner);
            nodes.push(PathNode::Vertex {
                class,
                in_corner,
                out_corner,
            });
            next_portal = g_end;
            seg_start = p.point;
        } else {
            for i in next_portal..g_target {
                let t = crossing_param(seg_start, seg_end, &portals[i]);
                nodes.push(PathNode::Edge {
                    exit_slot: portals[i].slot,
                    t,
                });
            }
        }
        k += 1;
    }
    RunResult {
        nodes,
        source_out,
        target_in,
    }
}

// ---------------------------------------------------------------------------
// Sweep driver
// ---------------------------------------------------------------------------

fn develop_portals(s: &ConeSurface, path: &PathRep, node_ids: &[usize]) -> (Vec<PortalMeta>, Isometry) {
    let mut dev = Isometry::IDENTITY;
    let mut portals = Vec::with_capacity(node_ids.len());
    for &j in node_ids {
        let slot = match &path.nodes[j] {
            PathNode::Edge { exit_slot, .. } => *exit_slot,
            PathNode::Vertex { .. } => unreachable!("runs contain only edge crossings"),
        };
        let tri = s.triangle(slot.tri);
        portals.push(PortalMeta {
            left: dev.apply(tri.edge_end(slot.edge)),
            right: dev.apply(tri.edge_start(slot.edge)),
            slot,
        });
        dev = dev.compose(&s.gluing_from(slot).inverse()).renormalized();
    }
    (portals, dev)
}

/// One full shortening sweep; `cut` selects the pinned node when the path has
/// no vertex passages. Returns the new path.
fn sweep(s: &ConeSurface, path: &PathRep, cut: usize) -> PathRep {
    let n = path.nodes.len();
    let anchors: Vec<usize> = (0..n)
        .filter(|&j| matches!(path.nodes[j], PathNode::Vertex { .. }))
        .collect();
    let mut new_nodes = Vec::new();
    if anchors.is_empty() {
        let cut = cut % n;
        let ids: Vec<usize> = (1..n).map(|d| (cut + d) % n).collect();
        let (portals, dev) = develop_portals(s, path, &ids);
        let source = path.start_pos(s, cut);
        let target = dev.apply(path.end_pos(s, cut));
        let run = shorten_run(s, source, &portals, target, false, false);
        new_nodes.push(path.nodes[cut].clone());
        new_nodes.extend(run.nodes);
    } else {
        let k = anchors.len();
        let mut runs: Vec<RunResult> = Vec::with_capacity(k);
        for idx in 0..k {
            let a = anchors[idx];
            let b = anchors[(idx + 1) % k];
            let mut ids = Vec::new();
            let mut j = (a + 1) % n;
            while j != b {
                ids.push(j);
                j = (j + 1) % n;
            }
            let (portals, dev) = develop_portals(s, path, &ids);
            let source = path.start_pos(s, a);
            let target = dev.apply(path.end_pos(s, b));
            runs.push(shorten_run(s, source, &portals, target, true, true));
        }
        for idx in 0..k {
            let mut anchor = path.nodes[anchors[idx]].clone();
            if let PathNode::Vertex {
                ref mut in_corner,
                ref mut out_corner,
                ..
            } = anchor
            {
                if let Some(ic) = runs[(idx + k - 1) % k].target_in {
                    *in_corner = ic;
                }
                if let Some(oc) = runs[idx].source_out {
                    *out_corner = oc;
                }
            }
            new_nodes.push(anchor);
            new_nodes.append(&mut runs[idx].nodes);
        }
    }
    PathRep { nodes: new_nodes }
}

/// Edge crossings at parameters this close to an endpoint are vertex
/// passages in disguise and get converted to `Vertex` nodes.
const DEGENERATE_CROSSING_T: f64 = 1e-7;

fn normalize(s: &ConeSurface, path: &mut PathRep) {
    // Remove folds: two consecutive crossings of one edge pair bound a
    // sub-path inside a single triangle (a disk), so the path slides off
    // that triangle entirely. Removing the pair never lengthens the path
    // (triangle inequality in the developed chart) and keeps consecutive
    // developed portals distinct, which the funnel relies on.
    loop {
        let n = path.nodes.len();
        if n < 2 {
            return;
        }
        let mut removed = false;
        for j in 0..n {
            let k = (j + 1) % n;
            if let (
                PathNode::Edge { exit_slot: s1, .. },
                PathNode::Edge { exit_slot: s2, .. },
            ) = (&path.nodes[j], &path.nodes[k])
            {
                if *s2 == s.partner(*s1) {
                    let (a, b) = (j.max(k), j.min(k));
                    path.nodes.remove(a);
                    path.nodes.remove(b);
                    removed = true;
                    break;
                }
            }
        }
        if !removed {
            break;
        }
    }
    // An edge crossing pinned to an endpoint of its edge actually passes
    // through that vertex; represent it as such.
    for node in path.nodes.iter_mut() {
        let (slot, t) = match node {
            PathNode::Edge { exit_slot, t } => (*exit_slot, *t),
            PathNode::Vertex { .. } => continue,
        };
        let p = s.partner(slot);
        let (in_corner, out_corner) = if t >= 1.0 - DEGENERATE_CROSSING_T {
            (
                (slot.tri, (slot.edge + 2) % 3),
                (p.tri, (p.edge + 1) % 3),
            )
        } else if t <= DEGENERATE_CROSSING_T {
            (
                (slot.tri, (slot.edge + 1) % 3),
                (p.tri, (p.edge + 2) % 3),
            )
        } else {
            continue;
        };
        let class = s.class_of(in_corner);
        debug_assert_eq!(class, s.class_of(out_corner));
        *node = PathNode::Vertex {
            class,
            in_corner,
            out_corner,
        };
    }
    // Merge consecutive same-class vertex passages joined by a null segment.
    loop {
        let n = path.nodes.len();
        if n < 2 {
            return;
        }
        let mut merged = false;
        for j in 0..n {
            let k = (j + 1) % n;
            if let (
                PathNode::Vertex {
                    class: c1,
                    in_corner: in1,
                    ..
                },
                PathNode::Vertex {
                    class: c2,
                    out_corner: out2,
                    ..
                },
            ) = (&path.nodes[j], &path.nodes[k])
            {
                if c1 == c2 && path.start_pos(s, j).dist(path.end_pos(s, k)) < 1e-9 {
                    let merged_node = PathNode::Vertex {
                        class: *c1,
                        in_corner: *in1,
                        out_corner: *out2,
                    };
                    path.nodes[j] = merged_node;
                    path.nodes.remove(k);
                    merged = true;
                    break;
                }
            }
        }
        if !merged {
            break;
        }
    }
}

/// Push the path off every vertex whose smaller side is less than `π`.
/// Returns true when any push happened.
fn push_vertices(s: &ConeSurface, path: &mut PathRep) -> bool {
    let n = path.nodes.len();
    let mut replacements: Vec<(usize, Vec<PathNode>)> = Vec::new();
    for j in 0..n {
        let (class, in_corner, out_corner) = match &path.nodes[j] {
            PathNode::Vertex {
                class,
                in_corner,
                out_corner,
            } => (*class, *in_corner, *out_corner),
            _ => continue,
        };
        let total = s.vertex_classes()[class].total_angle;
        let v_in = path.segment_dir(s, (j + n - 1) % n);
        let v_out = path.segment_dir(s, j);
        if !v_in.x.is_finite() || !v_out.x.is_finite() {
            continue;
        }
        let theta_in = s.fan_theta(in_corner, v_in.scale(-1.0));
        let theta_out = s.fan_theta(out_corner, v_out);
        let side_a = (theta_out - theta_in).rem_euclid(total);
        let side_b = total - side_a;
        let (span, walk_side) = if side_a <= side_b {
            (side_a, true)
        } else {
            (side_b, false)
        };
        if span >= PI - 1e-12 {
            continue;
        }
        let detour = s.fan_detour(in_corner, out_corner, walk_side);
        let len_in = path
            .end_pos(s, j)
            .dist(path.start_pos(s, (j + n - 1) % n));
        let len_out = path.end_pos(s, (j + 1) % n).dist(path.start_pos(s, j));
        let mut r: f64 = 0.1 * len_in.min(len_out);
        for (slot, _) in &detour {
            r = r.min(0.25 * s.triangle(slot.tri).edge_length(slot.edge));
        }
        if !(r > 0.0) {
            continue;
        }
        let new: Vec<PathNode> = detour
            .iter()
            .map(|&(slot, vertex_end)| {
                let len = s.triangle(slot.tri).edge_length(slot.edge);
                let t = if vertex_end == 0.0 {
                    (r / len).clamp(1e-9, 1.0 - 1e-9)
                } else {
                    (1.0 - r / len).clamp(1e-9, 1.0 - 1e-9)
                };
                PathNode::Edge { exit_slot: slot, t }
            })
            .collect();
        replacements.push((j, new));
    }
    if replacements.is_empty() {
        return false;
    }
    for (j, new) in replacements.into_iter().rev() {
        path.nodes.splice(j..j + 1, new);
    }
    true
}

/// Cyclically cancel immediate backtracks in a dual word; empty means the
/// word was null-homotopic.
pub fn reduce_word(s: &ConeSurface, w: &DualWord) -> Vec<Slot> {
    let mut stack: Vec<Slot> = Vec::new();
    for &step in &w.steps {
        if stack.last().map_or(false, |&top| s.partner(top) == step) {
            stack.pop();
        } else {
            stack.push(step);
        }
    }
    while stack.len() >= 2 && *stack.last().unwrap() == s.partner(stack[0]) {
        stack.pop();
        stack.remove(0);
    }
    stack
}

/// Tighten with explicit convergence tolerance and sweep cap.
pub fn tighten_with(
    s: &ConeSurface,
    word: &DualWord,
    tol: f64,
    max_sweeps: usize,
) -> Result<GeodesicPath, TightenError> {
    word.validate(s)?;
    let reduced = reduce_word(s, word);
    if reduced.is_empty() {
        return Err(TightenError::NullHomotopic);
    }
    let mut path = PathRep {
        nodes: reduced
            .into_iter()
            .map(|slot| PathNode::Edge { exit_slot: slot, t: 0.5 })
            .collect(),
    };
    let mut sweep_lengths = vec![path.length(s)];
    let mut prev_len = sweep_lengths[0];
    for sweep_no in 0..max_sweeps {
        path = sweep(s, &path, sweep_no);
        normalize(s, &mut path);
        debug_assert!(
            path.validate(s).is_ok(),
            "sweep produced an unchainable path: {:?}",
            path.validate(s)
        );
        if path.nodes.is_empty()
            || (path.nodes.len() == 1
                && matches!(path.nodes[0], PathNode::Vertex { .. })
                && path.start_pos(s, 0).dist(path.end_pos(s, 0)) < NULL_LENGTH)
        {
            return Err(TightenError::NullHomotopic);
        }
        let len = path.length(s);
        sweep_lengths.push(len);
        if len < NULL_LENGTH {
            return Err(TightenError::NullHomotopic);
        }
        debug_assert!(
            len <= prev_len * (1.0 + MONOTONE_SLACK) + MONOTONE_SLACK,
            "sweep lengthened the path: {prev_len} -> {len}"
        );
        let cert = certify_geodesic(s, &path);
        if cert.certified && prev_len - len < tol * len.max(1.0) {
            return Ok(GeodesicPath {
                length: len,
                certificate: cert,
                sweep_lengths,
                path,
            });
        }
        if push_vertices(s, &mut path) {
            // A detour can fold straight back through the crossing that
            // follows it; unfold before the next sweep develops portals.
            normalize(s, &mut path);
        }
        debug_assert!(
            path.validate(s).is_ok(),
            "vertex push produced an unchainable path: {:?}",
            path.validate(s)
        );
        prev_len = len;
    }
    Err(TightenError::IterationLimit {
        sweeps: max_sweeps,
        best_length: prev_len,
    })
}

/// Tighten a closed curve to its geodesic representative with default
/// tolerances.
pub fn tighten(s: &ConeSurface, word: &DualWord) -> Result<GeodesicPath, TightenError> {
    tighten_with(s, word, TIGHTEN_TOL, MAX_SWEEPS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{flat_torus, genus2_octagon, quarter_turn_octagon};

    fn essential_word(s: &ConeSurface) -> DualWord {
        crate::curve::word_crossing_pair_once(s, 0)
    }

    #[test]
    fn torus_diagonal_class_tightens_to_flat_length() {
        let s = flat_torus(2.0, 1.0);
        // Once around horizontally and once vertically: the (1,1) class.
        let w = DualWord::new(vec![Slot::new(0, 0), Slot::new(1, 0)]);
        w.validate(&s).unwrap();
        let g = tighten(&s, &w).unwrap();
        assert!(g.certificate.certified);
        assert!((g.length - (5.0f64).sqrt()).abs() < 1e-9, "len={}", g.length);
        assert!(g.certificate.min_side_angle.is_none());
        for w in g.sweep_lengths.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn torus_horizontal_class_tightens_to_width() {
        let s = flat_torus(1.5, 1.0);
        let w = DualWord::new(vec![Slot::new(0, 0), Slot::new(1, 2)]);
        let g = tighten(&s, &w).unwrap();
        assert!(g.certificate.certified);
        assert!((g.length - 1.5).abs() < 1e-9);
    }

    #[test]
    fn out_and_back_word_is_null_homotopic() {
        let s = genus2_octagon();
        let out = Slot::new(0, 0);
        let w = DualWord::new(vec![out, s.partner(out)]);
        match tighten(&s, &w) {
            Err(TightenError::NullHomotopic) => {}
            other => panic!("expected NullHomotopic, got {other:?}"),
        }
    }

    #[test]
    fn essential_octagon_word_tightens_with_certificate() {
        let s = genus2_octagon();
        let w = essential_word(&s);
        w.validate(&s).unwrap();
        let basis = crate::homology::HomologyBasis::new(&s);
        assert!(crate::homology::homology_class(&s, &basis, &w)
            .iter()
            .any(|&c| c != 0));
        let g = tighten(&s, &w).unwrap();
        assert!(g.certificate.certified, "cert: {:?}", g.certificate);
        assert!(g.length > 0.1);
        for pair in g.sweep_lengths.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn quarter_turn_octagon_word_tightens() {
        let s = quarter_turn_octagon();
        let w = essential_word(&s);
        let basis = crate::homology::HomologyBasis::new(&s);
        // The essential word may be null-homologous here; accept either a
        // certified geodesic or a detected null class.
        match tighten(&s, &w) {
            Ok(g) => assert!(g.certificate.certified),
            Err(TightenError::NullHomotopic) => {
                assert!(crate::homology::homology_class(&s, &basis, &w)
                    .iter()
                    .all(|&c| c == 0));
            }
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn tightening_is_invariant_under_homotopy_moves() {
        use rand::SeedableRng;
        let s = genus2_octagon();
        let w = essential_word(&s);
        let base = tighten(&s, &w).unwrap().length;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
        for _ in 0..6 {
            let moved = crate::curve::random_homotopic_word(&s, &w, 12, &mut rng);
            let len = tighten(&s, &moved).unwrap().length;
            assert!(
                (len - base).abs() < 1e-8,
                "homotopic words tightened to different lengths: {base} vs {len}"
            );
        }
    }

    #[test]
    fn tightening_is_idempotent_through_dual_words() {
        let s = genus2_octagon();
        let w = essential_word(&s);
        let g1 = tighten(&s, &w).unwrap();
        let w2 = g1.to_dual_word(&s);
        w2.validate(&s).unwrap();
        let g2 = tighten(&s, &w2).unwrap();
        assert!(
            (g1.length - g2.length).abs() < 1e-10,
            "{} vs {}",
            g1.length,
            g2.length
        );
    }
}
