//! Maximal flat cylinders around closed geodesics.
//!
//! A certified closed geodesic that avoids every vertex lies in a family of
//! parallel closed geodesics of equal length. Flowing the curve to either
//! side sweeps an embedded annulus until the moving boundary runs into a cone
//! point, or until the annulus wraps around and meets itself. The flow is
//! event-driven: developing one full circuit of the current boundary copy
//! into the plane places every nearby vertex copy at a definite perpendicular
//! distance, and the closest one on the flow side is the next obstruction.
//! Regular vertices (angle exactly `2π`) do not stop the flow — the boundary
//! copy is re-anchored just past them and the scan continues.

use crate::geom::Vec2;
use crate::surface::ConeSurface;
use crate::tighten::{certify_geodesic, GeodesicCertificate, GeodesicPath, PathNode, PathRep};
use crate::trace::{straight_path, TraceError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CylinderError {
    #[error("path is not a certified geodesic (max bend {max_bend:.3e})")]
    NotCertified { max_bend: f64 },
    #[error("path has no segment long enough to anchor a trace")]
    DegeneratePath,
    #[error("side flow stalled at offset {offset:.6e}")]
    FlowStalled { offset: f64 },
}

/// A maximal embedded flat cylinder: the core circumference, the total
/// transverse height, and whether the flow closed up around the surface
/// instead of stopping at cone points on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatCylinder {
    pub circumference: f64,
    pub height: f64,
    pub full_wrap: bool,
}

/// A closed geodesic re-anchored as a point, direction and triangle chart;
/// tracing `circumference` from here must come back to the start.
#[derive(Debug, Clone, Copy)]
struct Tracer {
    tri: usize,
    point: Vec2,
    dir: Vec2,
}

const CLOSURE_TOL: f64 = 1e-7;
const EVENT_TOL: f64 = 1e-9;
const MAX_FLOW_STAGES: usize = 10_000;
const MAX_STEP_RETRIES: usize = 80;

/// Pick the longest straight segment of `path` and return its midpoint,
/// direction, and chart.
fn anchor_of(s: &ConeSurface, path: &PathRep) -> Result<Tracer, CylinderError> {
    let n = path.nodes.len();
    let mut best: Option<(f64, Tracer)> = None;
    for j in 0..n {
        let a = path.start_pos(s, j);
        let b = path.end_pos(s, (j + 1) % n);
        let len = a.dist(b);
        if best.map_or(true, |(bl, _)| len > bl) {
            best = Some((
                len,
                Tracer {
                    tri: path.tri_after(s, j),
                    point: a.lerp(b, 0.5),
                    dir: b.sub(a).normalize(),
                },
            ));
        }
    }
    match best {
        Some((len, t)) if len > 1e-9 => Ok(t),
        _ => Err(CylinderError::DegeneratePath),
    }
}

/// Develop one circuit of the tracer and return every passed triangle
/// corner as `(signed perpendicular distance, vertex class)`; the sign is
/// positive on the side of `normal`.
fn corner_events(
    s: &ConeSurface,
    tracer: &Tracer,
    circumference: f64,
    normal: Vec2,
) -> Result<Vec<(f64, usize)>, TraceError> {
    let r = straight_path(s, tracer.tri, tracer.point, tracer.dir, circumference)?;
    let mut events = Vec::new();
    let mut dev = crate::geom::Isometry::IDENTITY;
    let mut tri = tracer.tri;
    let emit = |dev: &crate::geom::Isometry, tri: usize, out: &mut Vec<(f64, usize)>| {
        for c in 0..3 {
            let p = dev.apply(s.triangle(tri).corners[c]);
            let d = p.sub(tracer.point).dot(normal);
            out.push((d, s.class_of((tri, c))));
        }
    };
    emit(&dev, tri, &mut events);
    for step in &r.steps {
        let g = s.gluing_from(step.slot);
        dev = dev.compose(&g.inverse()).renormalized();
        tri = s.partner(step.slot).tri;
        emit(&dev, tri, &mut events);
    }
    Ok(events)
}

/// Check that tracing one circuit from `t` comes back to `t`.
fn closes_up(s: &ConeSurface, t: &Tracer, circumference: f64) -> bool {
    match straight_path(s, t.tri, t.point, t.dir, circumference) {
        Ok(r) => {
            r.end_tri == t.tri
                && r.end_point.dist(t.point) < CLOSURE_TOL
                && r.end_dir.dot(t.dir) > 1.0 - CLOSURE_TOL
        }
        Err(_) => false,
    }
}

/// Slide the tracer along its own geodesic by `dist` to escape a
/// vertex-grazing perpendicular.
fn slide(s: &ConeSurface, t: &Tracer, dist: f64) -> Option<Tracer> {
    let r = straight_path(s, t.tri, t.point, t.dir, dist).ok()?;
    Some(Tracer {
        tri: r.end_tri,
        point: r.end_point,
        dir: r.end_dir,
    })
}

struct SideFlow {
    height: f64,
    capped: bool,
}

/// Flow parallel copies to one side (`side = ±1`) until a cone point or the
/// area budget stops them. Returns the transverse distance travelled.
fn flow_side(
    s: &ConeSurface,
    core: &Tracer,
    circumference: f64,
    side: f64,
    cap: f64,
) -> Result<SideFlow, CylinderError> {
    let mut tracer = *core;
    let mut offset = 0.0f64;
    for _ in 0..MAX_FLOW_STAGES {
        let normal = tracer.dir.perp().scale(side);
        let events = corner_events(s, &tracer, circumference, normal)
            .map_err(|_| CylinderError::FlowStalled { offset })?;
        let d1 = events
            .iter()
            .filter(|(d, _)| *d > 1e-12)
            .map(|(d, _)| *d)
            .fold(f64::INFINITY, f64::min);
        if !d1.is_finite() {
            return Err(CylinderError::FlowStalled { offset });
        }
        if offset + d1 >= cap - EVENT_TOL {
            return Ok(SideFlow {
                height: cap,
                capped: true,
            });
        }
        let cone_event = events
            .iter()
            .any(|(d, class)| (*d - d1).abs() < EVENT_TOL && s.vertex_classes()[*class].is_cone_point());
        if cone_event {
            return Ok(SideFlow {
                height: offset + d1,
                capped: false,
            });
        }
        // Regular vertex: re-anchor just past the event and keep scanning.
        let mut delta = (d1.min(cap - offset - d1)) * 0.25;
        let mut advanced = false;
        'retry: for attempt in 0..MAX_STEP_RETRIES {
            if delta < 1e-13 {
                break;
            }
            // A perpendicular geodesic stays perpendicular to the parallel
            // family, so its arc length equals transverse distance. Shoot to
            // the target offset, sliding the launch point when the ray grazes
            // the event vertex.
            let launch = if attempt % 4 == 0 {
                tracer
            } else {
                let frac = [0.13, 0.37, 0.61][attempt % 4 - 1];
                match slide(s, &tracer, frac * circumference) {
                    Some(t) => t,
                    None => continue 'retry,
                }
            };
            let normal = launch.dir.perp().scale(side);
            let shot = match straight_path(s, launch.tri, launch.point, normal, d1 + delta) {
                Ok(r) => r,
                Err(_) => {
                    if attempt % 4 == 3 {
                        delta *= 0.25;
                    }
                    continue 'retry;
                }
            };
            // Rotate the transported normal back into the travel direction.
            let dir = shot.end_dir.perp().scale(-side);
            let candidate = Tracer {
                tri: shot.end_tri,
                point: shot.end_point,
                dir,
            };
            if !closes_up(s, &candidate, circumference) {
                delta *= 0.25;
                continue 'retry;
            }
            // The event vertex must be the nearest corner behind the new
            // copy; anything closer means the step skipped an event.
            let back_normal = candidate.dir.perp().scale(-side);
            let back = match corner_events(s, &candidate, circumference, back_normal) {
                Ok(ev) => ev
                    .iter()
                    .filter(|(d, _)| *d > 1e-12)
                    .map(|(d, _)| *d)
                    .fold(f64::INFINITY, f64::min),
                Err(_) => {
                    delta *= 0.25;
                    continue 'retry;
                }
            };
            if !back.is_finite() || (back - delta).abs() > 1e-8 {
                delta *= 0.25;
                continue 'retry;
            }
            tracer = candidate;
            offset += d1 + delta;
            advanced = true;
            break;
        }
        if !advanced {
            return Err(CylinderError::FlowStalled { offset });
        }
    }
    Err(CylinderError::FlowStalled { offset })
}

/// Two straight segments of the path crossing inside a shared triangle mean
/// the curve is not simple, so no embedded cylinder contains it.
fn is_simple(s: &ConeSurface, path: &PathRep) -> bool {
    let n = path.nodes.len();
    let segs: Vec<(usize, Vec2, Vec2)> = (0..n)
        .map(|j| {
            (
                path.tri_after(s, j),
                path.start_pos(s, j),
                path.end_pos(s, (j + 1) % n),
            )
        })
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if segs[i].0 != segs[j].0 {
                continue;
            }
            if crate::geom::segments_cross(segs[i].1, segs[i].2, segs[j].1, segs[j].2, 1e-12) {
                return false;
            }
        }
    }
    true
}

/// Find the maximal embedded flat cylinder foliated by parallel copies of a
/// certified closed geodesic. Returns `None` when the path passes through a
/// vertex (parallel copies cannot slide past it) or is not simple (no
/// embedded annulus contains it).
pub fn detect_flat_cylinder(
    s: &ConeSurface,
    p: &GeodesicPath,
) -> Result<Option<FlatCylinder>, CylinderError> {
    let cert: GeodesicCertificate = certify_geodesic(s, &p.path);
    if !cert.certified {
        return Err(CylinderError::NotCertified {
            max_bend: cert.max_bend,
        });
    }
    if p.path
        .nodes
        .iter()
        .any(|n| matches!(n, PathNode::Vertex { .. }))
    {
        return Ok(None);
    }
    if !is_simple(s, &p.path) {
        return Ok(None);
    }
    let core = anchor_of(s, &p.path)?;
    let circumference = p.path.length(s);
    if !closes_up(s, &core, circumference) {
        return Err(CylinderError::NotCertified { max_bend: 0.0 });
    }
    let cap = s.area() / circumference;
    let up = flow_side(s, &core, circumference, 1.0, cap)?;
    let down = flow_side(s, &core, circumference, -1.0, cap)?;
    let total = up.height + down.height;
    let full_wrap = up.capped || down.capped || total >= cap - EVENT_TOL;
    Ok(Some(FlatCylinder {
        circumference,
        height: if full_wrap { cap } else { total },
        full_wrap,
    }))
}

/// Trace the parallel copy of a certified vertex-free geodesic at signed
/// transverse offset `offset` (positive to the left of travel) and return it
/// as a certified path of its own.
pub fn parallel_copy(
    s: &ConeSurface,
    p: &GeodesicPath,
    offset: f64,
) -> Result<GeodesicPath, CylinderError> {
    let core = anchor_of(s, &p.path)?;
    let circumference = p.path.length(s);
    let side = offset.signum();
    let mut tracer = core;
    if offset.abs() > 1e-12 {
        let mut shot = None;
        for frac in [0.0, 0.13, 0.37, 0.61] {
            let launch = if frac == 0.0 {
                core
            } else {
                match slide(s, &core, frac * circumference) {
                    Some(t) => t,
                    None => continue,
                }
            };
            let normal = launch.dir.perp().scale(side);
            if let Ok(r) = straight_path(s, launch.tri, launch.point, normal, offset.abs()) {
                shot = Some(r);
                break;
            }
        }
        let shot = shot.ok_or(CylinderError::FlowStalled { offset: 0.0 })?;
        tracer = Tracer {
            tri: shot.end_tri,
            point: shot.end_point,
            dir: shot.end_dir.perp().scale(-side),
        };
    }
    let r = straight_path(s, tracer.tri, tracer.point, tracer.dir, circumference)
        .map_err(|_| CylinderError::FlowStalled { offset })?;
    if r.end_tri != tracer.tri || r.end_point.dist(tracer.point) > CLOSURE_TOL {
        return Err(CylinderError::FlowStalled { offset });
    }
    let nodes: Vec<PathNode> = r
        .steps
        .iter()
        .map(|st| PathNode::Edge {
            exit_slot: st.slot,
            t: st.param,
        })
        .collect();
    let path = PathRep { nodes };
    let length = path.length(s);
    let certificate = certify_geodesic(s, &path);
    Ok(GeodesicPath {
        path,
        length,
        certificate,
        sweep_lengths: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::DualWord;
    use crate::shapes::{flat_torus, genus2_octagon};
    use crate::tighten::tighten;

    fn traced_word(s: &ConeSurface, tri: usize, point: Vec2, dir: Vec2, len: f64) -> DualWord {
        let r = straight_path(s, tri, point, dir, len).unwrap();
        DualWord::new(r.dual_word())
    }

    #[test]
    fn horizontal_geodesic_on_torus_wraps_fully() {
        let s = flat_torus(1.0, 1.5);
        let w = traced_word(&s, 0, Vec2::new(0.3, 0.4), Vec2::new(1.0, 0.0), 1.0);
        let g = tighten(&s, &w).unwrap();
        assert!((g.length - 1.0).abs() < 1e-9);
        let cyl = detect_flat_cylinder(&s, &g).unwrap().unwrap();
        assert!((cyl.circumference - 1.0).abs() < 1e-9);
        assert!((cyl.height - 1.5).abs() < 1e-9);
        assert!(cyl.full_wrap);
    }

    #[test]
    fn diagonal_geodesic_on_square_torus_wraps_fully() {
        let s = flat_torus(1.0, 1.0);
        let w = traced_word(
            &s,
            0,
            Vec2::new(0.31, 0.17),
            Vec2::new(1.0, 1.0),
            std::f64::consts::SQRT_2,
        );
        let g = tighten(&s, &w).unwrap();
        let cyl = detect_flat_cylinder(&s, &g).unwrap().unwrap();
        assert!((cyl.circumference - std::f64::consts::SQRT_2).abs() < 1e-9);
        // Area = circumference × height for a full wrap.
        assert!((cyl.circumference * cyl.height - s.area()).abs() < 1e-9);
        assert!(cyl.full_wrap);
    }

    #[test]
    fn geodesic_through_cone_point_has_no_cylinder() {
        let s = genus2_octagon();
        // An essential class on the octagon tightens through the 6π cone point.
        let w = crate::curve::word_crossing_pair_once(&s, 0);
        let g = tighten(&s, &w).unwrap();
        assert!(g
            .path
            .nodes
            .iter()
            .any(|n| matches!(n, PathNode::Vertex { .. })));
        assert_eq!(detect_flat_cylinder(&s, &g).unwrap(), None);
    }

    #[test]
    fn parallel_copies_inside_cylinder_certify() {
        let s = flat_torus(1.0, 2.0);
        let w = traced_word(&s, 0, Vec2::new(0.3, 0.4), Vec2::new(1.0, 0.0), 1.0);
        let g = tighten(&s, &w).unwrap();
        let cyl = detect_flat_cylinder(&s, &g).unwrap().unwrap();
        for frac in [-0.35, -0.1, 0.2, 0.4] {
            let copy = parallel_copy(&s, &g, frac * cyl.height).unwrap();
            assert!(copy.certificate.certified);
            assert!((copy.length - cyl.circumference).abs() < 1e-9);
        }
    }

    #[test]
    fn bent_path_is_rejected() {
        let s = flat_torus(1.0, 1.0);
        let w = traced_word(&s, 0, Vec2::new(0.6, 0.2), Vec2::new(1.0, 0.0), 1.0);
        let g = tighten(&s, &w).unwrap();
        let mut bent = g.clone();
        if let PathNode::Edge { t, .. } = &mut bent.path.nodes[0] {
            *t = (*t + 0.3).min(0.9);
        }
        let err = detect_flat_cylinder(&s, &bent).unwrap_err();
        assert!(matches!(err, CylinderError::NotCertified { .. }));
    }
}
