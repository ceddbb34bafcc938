//! Straight-line tracing through the triangle charts.
//!
//! A trace starts strictly inside a triangle and walks in a fixed direction,
//! crossing gluings until the requested arclength is used up. Because every
//! gluing is an isometry, the traced path is a geodesic as long as it stays
//! away from the vertices; traces that run into a vertex are rejected so the
//! caller can perturb and retry.

use crate::geom::{line_intersection_params, Isometry, Vec2};
use crate::surface::{ConeSurface, Slot};
use crate::tol::{MAX_TRACE_STEPS, VERTEX_PARAM_TOL};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace start point is not inside triangle {tri}")]
    NotInTriangle { tri: usize },
    #[error("trace direction has zero length")]
    ZeroDirection,
    #[error("trace exits triangle {tri} within {param:.3e} of a corner of edge {edge}")]
    NearVertex { tri: usize, edge: usize, param: f64 },
    #[error("trace exceeded {0} edge crossings")]
    TooManySteps(usize),
}

/// One edge crossing of a straight trace: the slot (in the chart being left)
/// and the parameter along that slot's oriented edge, in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub slot: Slot,
    pub param: f64,
}

/// The result of a straight trace.
#[derive(Debug, Clone)]
pub struct TraceResult {
    /// Edge crossings in order; `steps[i].slot` lives in the chart entered by
    /// crossing `steps[i-1]` (or the start chart for `i = 0`).
    pub steps: Vec<TraceStep>,
    /// Triangle whose chart contains the endpoint.
    pub end_tri: usize,
    /// Endpoint in the end chart.
    pub end_point: Vec2,
    /// Unit direction at the endpoint, in the end chart.
    pub end_dir: Vec2,
    /// Isometry taking end-chart coordinates into the start chart's developed
    /// plane; it maps `end_point` to `start + length · dir`.
    pub chart_to_start: Isometry,
}

impl TraceResult {
    /// The crossed slots as a dual-graph word.
    pub fn dual_word(&self) -> Vec<Slot> {
        self.steps.iter().map(|s| s.slot).collect()
    }
}

fn barycentric_inside(tri: &crate::surface::Triangle, p: Vec2, tol: f64) -> bool {
    (0..3).all(|e| {
        let a = tri.edge_start(e);
        let v = tri.edge_vector(e);
        p.sub(a).cross(v) < tol
    })
}

/// Trace a straight geodesic of the given `length` from `point` (strictly
/// inside triangle `tri`) in direction `dir`.
pub fn straight_path(
    s: &ConeSurface,
    tri: usize,
    point: Vec2,
    dir: Vec2,
    length: f64,
) -> Result<TraceResult, TraceError> {
    let n = dir.norm();
    if n < 1e-300 {
        return Err(TraceError::ZeroDirection);
    }
    let scale = s.triangles()[tri].edge_length(0);
    if !barycentric_inside(&s.triangles()[tri], point, 1e-9 * scale * scale) {
        return Err(TraceError::NotInTriangle { tri });
    }
    let mut dir = dir.scale(1.0 / n);
    let mut t = tri;
    let mut p = point;
    let mut remaining = length;
    let mut dev = Isometry::IDENTITY;
    let mut steps = Vec::new();
    loop {
        if steps.len() > MAX_TRACE_STEPS {
            return Err(TraceError::TooManySteps(MAX_TRACE_STEPS));
        }
        let triangle = &s.triangles()[t];
        // Find the first edge hit by the forward ray.
        let far = p.add(dir.scale(remaining.max(1.0)));
        let mut best: Option<(f64, usize, f64)> = None;
        for e in 0..3 {
            let a = triangle.edge_start(e);
            let b = triangle.edge_end(e);
            if let Some((sray, u)) = line_intersection_params(p, far, a, b) {
                let sray = sray * p.dist(far);
                if sray > 1e-12 && (-1e-9..=1.0 + 1e-9).contains(&u) {
                    if best.map_or(true, |(bs, _, _)| sray < bs) {
                        best = Some((sray, e, u));
                    }
                }
            }
        }
        let (dist, e, u) = match best {
            Some(b) => b,
            // Numerically possible only when the point sits exactly on an
            // edge pointing outward; treat as a vertex-grazing failure.
            None => {
                return Err(TraceError::NearVertex {
                    tri: t,
                    edge: 0,
                    param: 0.0,
                })
            }
        };
        if dist >= remaining {
            let end_point = p.add(dir.scale(remaining));
            return Ok(TraceResult {
                steps,
                end_tri: t,
                end_point,
                end_dir: dir,
                chart_to_start: dev.renormalized(),
            });
        }
        if u < VERTEX_PARAM_TOL || u > 1.0 - VERTEX_PARAM_TOL {
            return Err(TraceError::NearVertex {
                tri: t,
                edge: e,
                param: u,
            });
        }
        let slot = Slot::new(t, e);
        steps.push(TraceStep { slot, param: u });
        let g = s.gluing_from(slot);
        let partner = s.partner(slot);
        // Land exactly on the partner edge: the gluing reverses edge
        // orientation, so parameter u on this edge is 1-u on the partner.
        let ptri = &s.triangles()[partner.tri];
        p = ptri.on_edge(partner.edge, 1.0 - u);
        dir = g.apply_dir(dir).normalize();
        dev = dev.compose(&g.inverse()).renormalized();
        t = partner.tri;
        remaining -= dist;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{flat_torus, genus2_octagon};

    #[test]
    fn horizontal_trace_on_torus_closes_up() {
        let s = flat_torus(1.0, 1.0);
        let start = Vec2::new(0.6, 0.2);
        let r = straight_path(&s, 0, start, Vec2::new(1.0, 0.0), 2.0).unwrap();
        assert_eq!(r.end_tri, 0);
        assert!(r.end_point.dist(start) < 1e-12);
        // Two wraps: the developed endpoint sits two units to the right.
        let developed = r.chart_to_start.apply(r.end_point);
        assert!(developed.dist(Vec2::new(2.6, 0.2)) < 1e-12);
        assert_eq!(r.steps.len(), 4);
    }

    #[test]
    fn developed_endpoint_matches_straight_line() {
        let s = genus2_octagon();
        let tri0 = &s.triangles()[0];
        let centroid = tri0
            .corners
            .iter()
            .fold(Vec2::ZERO, |acc, v| acc.add(*v))
            .scale(1.0 / 3.0);
        let dir = Vec2::new(0.3, 1.0).normalize();
        let len = 1.7;
        let r = straight_path(&s, 0, centroid, dir, len).unwrap();
        let developed = r.chart_to_start.apply(r.end_point);
        assert!(developed.dist(centroid.add(dir.scale(len))) < 1e-9);
        let dev_dir = r.chart_to_start.apply_dir(r.end_dir);
        assert!(dev_dir.dist(dir) < 1e-9);
    }

    #[test]
    fn steps_chain_through_partner_triangles() {
        let s = genus2_octagon();
        let tri0 = &s.triangles()[0];
        let centroid = tri0
            .corners
            .iter()
            .fold(Vec2::ZERO, |acc, v| acc.add(*v))
            .scale(1.0 / 3.0);
        let r = straight_path(&s, 0, centroid, Vec2::new(1.0, 0.17), 2.3).unwrap();
        let mut cur = 0usize;
        for step in &r.steps {
            assert_eq!(step.slot.tri, cur);
            cur = s.partner(step.slot).tri;
        }
        assert_eq!(cur, r.end_tri);
    }

    #[test]
    fn aiming_at_a_vertex_is_rejected() {
        let s = flat_torus(1.0, 1.0);
        let start = Vec2::new(0.5, 0.25);
        let dir = Vec2::new(0.5, 0.75);
        let err = straight_path(&s, 0, start, dir, 2.0).unwrap_err();
        assert!(matches!(err, TraceError::NearVertex { .. }));
    }

    #[test]
    fn start_outside_triangle_is_rejected() {
        let s = flat_torus(1.0, 1.0);
        let err = straight_path(&s, 0, Vec2::new(0.2, 0.9), Vec2::new(1.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(err, TraceError::NotInTriangle { tri: 0 }));
    }
}
