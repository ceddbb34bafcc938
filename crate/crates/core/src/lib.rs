//! Computational engine for non-positively curved Euclidean cone metrics on
//! closed oriented surfaces: surface construction from glued triangles or
//! polygon presentations, holonomy classification, certified geodesic
//! tightening, flat-cylinder detection, intersection-number extraction from
//! thin-cylinder metrics, rational-angle approximation of polygon
//! presentations, and equal-length curve families.

pub mod curve;
pub mod cylinder;
pub mod families;
pub mod geom;
pub mod holonomy;
pub mod homology;
pub mod polygon;
pub mod rationalize;
pub mod sample;
pub mod shapes;
pub mod surface;
pub mod tighten;
pub mod tol;
pub mod trace;

pub use curve::{word_crossing_pair_once, CurveError, DualWord};
pub use cylinder::{detect_flat_cylinder, parallel_copy, CylinderError, FlatCylinder};
pub use families::{
    build_cylinder_family, extract_intersection_number, extract_intersection_number_with,
    oracle_intersection, vertical_segment_bound, CylinderFamily, FamilyError,
    DEFAULT_EPSILON_SCHEDULE,
};
pub use geom::{Fraction, Isometry, Vec2};
pub use holonomy::{flat_dimension, holonomy_class, holonomy_class_with_cap, HolonomyClass, HolonomyReport};
pub use homology::{curve_chain, homology_class, HomologyBasis};
pub use polygon::{build_from_polygon, PolygonPresentation};
pub use rationalize::{
    bilipschitz_between, bilipschitz_bound, rationalize_polygon, rationalize_polygon_with,
    sample_decagon_presentation, sample_near_grid_decagon, RationalizationResult,
    RationalizeError,
};
pub use sample::{sample_flat_metric, sample_flat_metric_default, SampleError};
pub use surface::{
    build_from_triangles, gauss_bonnet_residual, ConePoint, ConeSurface, Corner, Slot,
    SurfaceError, Triangle, VertexClass,
};
pub use tighten::{
    certify_geodesic, path_to_dual_word, tighten, tighten_with, GeodesicCertificate,
    GeodesicPath, PathNode, PathRep, TightenError,
};
