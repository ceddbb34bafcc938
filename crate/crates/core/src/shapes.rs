//! Standard example surfaces used by tests, benchmarks, and the CLI.

use crate::geom::Vec2;
use crate::polygon::{build_from_polygon, PolygonPresentation};
use crate::surface::{build_from_triangles, ConeSurface, Slot, Triangle};

/// Flat torus from a `width × height` rectangle with opposite sides
/// identified by translations. One regular vertex class, no cone points.
pub fn flat_torus(width: f64, height: f64) -> ConeSurface {
    let t0 = Triangle::new(
        Vec2::new(0.0, 0.0),
        Vec2::new(width, 0.0),
        Vec2::new(width, height),
    );
    let t1 = Triangle::new(
        Vec2::new(0.0, 0.0),
        Vec2::new(width, height),
        Vec2::new(0.0, height),
    );
    let pairs = vec![
        (Slot::new(0, 1), Slot::new(1, 2)),
        (Slot::new(0, 2), Slot::new(1, 0)),
        (Slot::new(0, 0), Slot::new(1, 1)),
    ];
    build_from_triangles(vec![t0, t1], pairs, true).expect("flat torus is valid")
}

/// The regular octagon with opposite sides identified by translations: a
/// genus-2 surface with trivial holonomy and a single cone point of angle
/// `6π`.
pub fn genus2_octagon_presentation() -> PolygonPresentation {
    let mut edges = Vec::with_capacity(8);
    for k in 0..8 {
        let a0 = std::f64::consts::PI / 8.0 + k as f64 * std::f64::consts::FRAC_PI_4;
        let a1 = a0 + std::f64::consts::FRAC_PI_4;
        edges.push(Vec2::new(a1.cos() - a0.cos(), a1.sin() - a0.sin()));
    }
    PolygonPresentation::new(edges, vec![(0, 4), (1, 5), (2, 6), (3, 7)])
}

pub fn genus2_octagon() -> ConeSurface {
    build_from_polygon(&genus2_octagon_presentation(), true).expect("octagon is valid")
}

/// The regular octagon with side `k` identified to side `k+2` by a quarter
/// turn: a genus-2 surface whose holonomy is the cyclic group of order 4.
pub fn quarter_turn_octagon_presentation() -> PolygonPresentation {
    let base = genus2_octagon_presentation();
    PolygonPresentation::new(base.edges, vec![(0, 2), (1, 3), (4, 6), (5, 7)])
}

pub fn quarter_turn_octagon() -> ConeSurface {
    build_from_polygon(&quarter_turn_octagon_presentation(), true)
        .expect("quarter-turn octagon is valid")
}

/// The double of an equilateral triangle: a sphere with three cone points
/// of angle `2π/3`. Positively curved, so not NPC.
pub fn doubled_triangle() -> ConeSurface {
    let s = 3.0_f64.sqrt() / 2.0;
    let t0 = Triangle::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.5, s));
    let t1 = Triangle::new(Vec2::new(1.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(0.5, -s));
    let pairs = vec![
        (Slot::new(0, 2), Slot::new(1, 2)),
        (Slot::new(0, 0), Slot::new(1, 1)),
        (Slot::new(0, 1), Slot::new(1, 0)),
    ];
    build_from_triangles(vec![t0, t1], pairs, false).expect("doubled triangle is valid")
}
