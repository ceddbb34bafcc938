//! Holonomy of the developing map and the rotation-group classification.
//!
//! Developing the triangle charts along a spanning tree of the dual graph
//! turns every non-tree gluing into a deck transformation of the developed
//! picture; the rotation parts of these transformations generate the
//! holonomy group. For a cone metric on an oriented surface this group is
//! either trivial, a finite cyclic rotation group, or contains an
//! irrational rotation.

use crate::geom::{simplest_rational_in, wrap_angle_signed, Isometry};
use crate::surface::{ConeSurface, Slot, SurfaceError};
use crate::tol::{ANGLE_TOL, MAX_DENOMINATOR};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Classification of the holonomy rotation group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HolonomyClass {
    /// All generators are translations: a translation surface.
    Trivial,
    /// The rotation parts generate the cyclic group of order `q ≥ 2`.
    Cyclic { q: u64 },
    /// Some generator's rotation angle is not recognized as a rational
    /// multiple of `2π` within the denominator cap.
    Irrational,
}

impl HolonomyClass {
    /// The order of the rotation group, when finite.
    pub fn order(&self) -> Option<u64> {
        match self {
            HolonomyClass::Trivial => Some(1),
            HolonomyClass::Cyclic { q } => Some(*q),
            HolonomyClass::Irrational => None,
        }
    }
}

/// Holonomy analysis report: the classification plus the rotation angles of
/// the non-tree generators (radians, in `(−π, π]`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub class: HolonomyClass,
    pub generator_angles: Vec<f64>,
}

/// Per-triangle developing isometries along a breadth-first spanning tree
/// of the dual graph, rooted at triangle 0 with the identity.
///
/// Returns the developing maps and the list of non-tree gluing pair ids.
pub fn develop_along_tree(
    s: &ConeSurface,
    order_seed: Option<u64>,
) -> Result<(Vec<Isometry>, Vec<usize>), SurfaceError> {
    let f = s.triangles().len();
    let mut dev: Vec<Option<Isometry>> = vec![None; f];
    let mut in_tree = vec![false; s.pairs().len()];
    dev[0] = Some(Isometry::IDENTITY);
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(0usize);
    let mut rng = order_seed.map(ChaCha20Rng::seed_from_u64);
    while let Some(t) = queue.pop_front() {
        let d_t = dev[t].unwrap();
        let mut edges: Vec<usize> = (0..3).collect();
        if let Some(rng) = rng.as_mut() {
            edges.shuffle(rng);
        }
        for e in edges {
            let slot = Slot::new(t, e);
            let partner = s.partner(slot);
            if dev[partner.tri].is_some() {
                continue;
            }
            let (pair, _) = s.pair_of(slot);
            in_tree[pair] = true;
            // gluing_from maps this chart to the partner chart, so the
            // partner develops through its inverse.
            dev[partner.tri] = Some(d_t.compose(&s.gluing_from(slot).inverse()).renormalized());
            queue.push_back(partner.tri);
        }
    }
    if dev.iter().any(|d| d.is_none()) {
        return Err(SurfaceError::DisconnectedDualGraph);
    }
    let dev: Vec<Isometry> = dev.into_iter().map(|d| d.unwrap()).collect();
    let non_tree = (0..s.pairs().len()).filter(|&p| !in_tree[p]).collect();
    Ok((dev, non_tree))
}

fn classify(generator_angles: &[f64], denominator_cap: u64) -> HolonomyClass {
    let two_pi = 2.0 * std::f64::consts::PI;
    let tol = ANGLE_TOL / two_pi;
    let mut q: u64 = 1;
    for &theta in generator_angles {
        let x = theta / two_pi;
        match simplest_rational_in(x - tol, x + tol, denominator_cap) {
            Some(fr) => {
                let den = fr.den as u64;
                q = num_lcm(q, den);
            }
            None => return HolonomyClass::Irrational,
        }
    }
    if q == 1 {
        HolonomyClass::Trivial
    } else {
        HolonomyClass::Cyclic { q }
    }
}

fn num_lcm(a: u64, b: u64) -> u64 {
    let g = crate::geom::gcd_u64(a, b);
    a / g * b
}

/// Classify the holonomy rotation group of a cone surface.
///
/// Rotation angles of the developed generators are matched to rational
/// multiples of `2π` with denominators up to `denominator_cap`; the group
/// order is the least common multiple of the matched denominators.
pub fn holonomy_class_with_cap(
    s: &ConeSurface,
    denominator_cap: u64,
    order_seed: Option<u64>,
) -> Result<HolonomyReport, SurfaceError> {
    let (dev, non_tree) = develop_along_tree(s, order_seed)?;
    let mut angles = Vec::with_capacity(non_tree.len());
    for p in non_tree {
        let (a, b) = s.pairs()[p];
        // The deck transformation comparing the two developments across the
        // non-tree gluing g: chart(a) → chart(b).
        let g = s.gluing_from(a);
        let h = dev[a.tri].compose(&g.inverse()).compose(&dev[b.tri].inverse());
        angles.push(wrap_angle_signed(h.rotation_angle()));
    }
    let class = classify(&angles, denominator_cap);
    Ok(HolonomyReport {
        class,
        generator_angles: angles,
    })
}

/// Classify holonomy with the default denominator cap.
pub fn holonomy_class(s: &ConeSurface) -> Result<HolonomyReport, SurfaceError> {
    holonomy_class_with_cap(s, MAX_DENOMINATOR, None)
}

/// Real dimension of the space of unit-area NPC cone metrics on a genus-`g`
/// surface with holonomy contained in the rotation group of order `q`:
/// `2(2q−1)(g−1) + 6g − 7`.
pub fn flat_dimension(genus: i64, q: i64) -> Result<i64, SurfaceError> {
    if genus < 2 || q < 1 {
        return Err(SurfaceError::InvalidGenus);
    }
    Ok(2 * (2 * q - 1) * (genus - 1) + 6 * genus - 7)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{doubled_triangle, flat_torus, genus2_octagon, quarter_turn_octagon};

    #[test]
    fn torus_holonomy_is_trivial() {
        let r = holonomy_class(&flat_torus(1.0, 1.0)).unwrap();
        assert_eq!(r.class, HolonomyClass::Trivial);
    }

    #[test]
    fn octagon_holonomy_is_trivial() {
        let r = holonomy_class(&genus2_octagon()).unwrap();
        assert_eq!(r.class, HolonomyClass::Trivial);
        for a in &r.generator_angles {
            assert!(a.abs() < 1e-9);
        }
    }

    #[test]
    fn quarter_turn_octagon_holonomy_is_cyclic_4() {
        let r = holonomy_class(&quarter_turn_octagon()).unwrap();
        assert_eq!(r.class, HolonomyClass::Cyclic { q: 4 });
    }

    #[test]
    fn doubled_triangle_holonomy_is_cyclic_3() {
        let r = holonomy_class(&doubled_triangle()).unwrap();
        assert_eq!(r.class, HolonomyClass::Cyclic { q: 3 });
    }

    #[test]
    fn holonomy_is_independent_of_the_spanning_tree() {
        for surface in [genus2_octagon(), quarter_turn_octagon()] {
            let base = holonomy_class(&surface).unwrap().class;
            for seed in 0..5 {
                let r = holonomy_class_with_cap(&surface, MAX_DENOMINATOR, Some(seed)).unwrap();
                assert_eq!(r.class, base);
            }
        }
    }

    #[test]
    fn dimension_formula_matches_known_values() {
        assert_eq!(flat_dimension(2, 1).unwrap(), 7);
        assert_eq!(flat_dimension(2, 2).unwrap(), 11);
        assert_eq!(flat_dimension(3, 1).unwrap(), 15);
        assert!(matches!(
            flat_dimension(1, 1),
            Err(SurfaceError::InvalidGenus)
        ));
    }

    #[test]
    fn dimension_is_strictly_increasing_in_q() {
        for g in 2..6 {
            for q in 1..40 {
                assert!(flat_dimension(g, q + 1).unwrap() > flat_dimension(g, q).unwrap());
            }
        }
    }
}
