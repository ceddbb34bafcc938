//! Centralized numeric tolerances.
//!
//! Every module compares against these constants instead of inventing local
//! epsilons, so the accuracy contract of the whole crate is visible in one
//! place.

/// Absolute tolerance for angle comparisons, in radians.
///
/// Used when classifying holonomy rotations, snapping gluing maps, and
/// checking cone-angle sums.
pub const ANGLE_TOL: f64 = 1e-9;

/// Relative tolerance for length comparisons.
pub const LENGTH_TOL_REL: f64 = 1e-12;

/// Triangles with area below this threshold are rejected as degenerate.
pub const AREA_EPSILON: f64 = 1e-12;

/// Maximum bend (deviation from `π`) allowed at an interior edge point of a
/// certified geodesic, in radians.
pub const CERT_BEND_TOL: f64 = 1e-8;

/// A certified geodesic must subtend at least `π - CERT_SIDE_TOL` on both
/// sides of every cone point it passes through.
pub const CERT_SIDE_TOL: f64 = 1e-8;

/// Convergence threshold for the tightening iteration: a sweep that shortens
/// the path by less than this (relative to its length) counts as converged.
pub const TIGHTEN_TOL: f64 = 1e-10;

/// Hard cap on tightening sweeps; hitting it is reported as non-convergence
/// rather than looping forever.
pub const MAX_SWEEPS: usize = 100_000;

/// Paths shorter than `10 * TIGHTEN_TOL` after tightening are classified as
/// null-homotopic rather than reported as degenerate geodesics.
pub const NULL_LENGTH: f64 = 10.0 * TIGHTEN_TOL;

/// Relative slack granted when asserting that a tightening sweep never
/// lengthens the path (each sweep replaces the path inside a corridor that
/// contains the old path, so up to roundoff it is monotone).
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Tolerance used when checking that two floating point numbers that should
/// be equal by construction (same summation order) actually are.
pub const EXACT_EQ: f64 = 0.0;

/// Largest denominator the rational-angle recognizer will accept.
pub const MAX_DENOMINATOR: u64 = 1000;

/// A straight trace that exits an edge closer than this (in edge parameter)
/// to one of its endpoints is rejected as passing through a vertex.
pub const VERTEX_PARAM_TOL: f64 = 1e-9;

/// Hard cap on the number of edge crossings in a single straight trace.
pub const MAX_TRACE_STEPS: usize = 1_000_000;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_are_ordered_sensibly() {
        assert!(LENGTH_TOL_REL < ANGLE_TOL);
        assert!(ANGLE_TOL < CERT_BEND_TOL);
        assert!(TIGHTEN_TOL < CERT_BEND_TOL);
        assert!(NULL_LENGTH > TIGHTEN_TOL);
    }
}
