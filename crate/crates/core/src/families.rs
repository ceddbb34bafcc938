//! Thin-strip surfaces whose geodesic lengths encode intersection numbers.
//!
//! For each genus `g ≥ 2` and strip height `ε ∈ (0, 1)`, a closed surface is
//! assembled from a unit-width rectangle of `2g−1` horizontal strips: gluing
//! the rectangle's top to its bottom rolls it into a flat cylinder, and
//! gluing the left side of strip `k` to the right side of strip `2g−2−k`
//! closes it up with a single cone point of angle `(4g−2)π` and trivial
//! holonomy. Crossing the rolled-up cylinder from side to side then costs
//! horizontal distance exactly `1`, while every other excursion costs a
//! bounded multiple of `ε` — so the geometric intersection number of any
//! closed curve with the cylinder's core circle is recovered by rounding the
//! curve's geodesic length once `ε` is small enough.

use crate::curve::{CurveError, DualWord};
use crate::geom::Vec2;
use crate::surface::{build_from_triangles, ConeSurface, Slot, Triangle};
use crate::tighten::{tighten, TightenError};
use thiserror::Error;

/// Epsilon schedule used when none is supplied: one coarse and one fine
/// height, fine last, so the cross-check spans a decade.
pub const DEFAULT_EPSILON_SCHEDULE: [f64; 2] = [1e-2, 1e-3];

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("genus must be at least 2, got {0}")]
    InvalidGenus(i64),
    #[error("strip height must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error(
        "length sandwich failed at eps = {epsilon}: expected {count} <= {length} <= {count} + {vertical_bound} * eps"
    )]
    SandwichViolated {
        epsilon: f64,
        length: f64,
        count: i64,
        vertical_bound: i64,
    },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Tighten(#[from] TightenError),
    #[error(transparent)]
    Surface(#[from] crate::surface::SurfaceError),
}

/// A strip surface together with its two distinguished circles.
///
/// Triangles come in bottom/top pairs per strip: strip `k` (counted from the
/// bottom) is split by its up-diagonal into triangle `2k` (below, corners at
/// `(0,kε)`, `(1,kε)`, `(1,(k+1)ε)`) and triangle `2k+1` (above, corners at
/// `(0,kε)`, `(1,(k+1)ε)`, `(0,(k+1)ε)`). All gluings are translations.
#[derive(Debug, Clone)]
pub struct CylinderFamily {
    pub genus: i64,
    pub epsilon: f64,
    pub surface: ConeSurface,
    /// Horizontal circle through the middle strip: a closed geodesic of
    /// length exactly `1`, the core of a maximal flat cylinder of height `ε`.
    pub core: DualWord,
    /// Vertical circle through the whole strip stack: the core circle of the
    /// rolled-up cylinder, a closed geodesic of length `(2g−1)ε` and the
    /// reference curve for intersection numbers.
    pub meridian: DualWord,
}

/// Number of strips for genus `g`.
fn strip_count(g: i64) -> usize {
    (2 * g - 1) as usize
}

/// Build the genus-`g` strip surface with per-strip height `ε` together with
/// its core and meridian words. Deterministic layout; all gluings are
/// translations, so the holonomy is always trivial.
pub fn build_cylinder_family(g: i64, epsilon: f64) -> Result<CylinderFamily, FamilyError> {
    if g < 2 {
        return Err(FamilyError::InvalidGenus(g));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(FamilyError::InvalidEpsilon(epsilon));
    }
    let n = strip_count(g);
    let mut triangles = Vec::with_capacity(2 * n);
    for k in 0..n {
        let y0 = k as f64 * epsilon;
        let y1 = (k + 1) as f64 * epsilon;
        let a = Vec2::new(0.0, y0);
        let b = Vec2::new(1.0, y0);
        let c = Vec2::new(1.0, y1);
        let d = Vec2::new(0.0, y1);
        triangles.push(Triangle::new(a, b, c));
        triangles.push(Triangle::new(a, c, d));
    }
    let lower = |k: usize| 2 * k;
    let upper = |k: usize| 2 * k + 1;
    let mut pairs = Vec::with_capacity(3 * n);
    for k in 0..n {
        // Strip diagonal: below-triangle edge 1 against above-triangle edge 2.
        pairs.push((Slot::new(lower(k), 1), Slot::new(upper(k), 2)));
        // Strip top against the next strip's bottom; the last strip wraps
        // around to the first, rolling the rectangle into a cylinder.
        pairs.push((Slot::new(upper(k), 0), Slot::new(lower((k + 1) % n), 2)));
        // Left side of strip k against the right side of strip n−1−k.
        pairs.push((Slot::new(upper(k), 1), Slot::new(lower(n - 1 - k), 0)));
    }
    let surface = build_from_triangles(triangles, pairs, true)?;
    let mid = (g - 1) as usize;
    let core = DualWord::new(vec![Slot::new(upper(mid), 2), Slot::new(lower(mid), 0)]);
    let mut meridian_steps = Vec::with_capacity(2 * n);
    for k in 0..n {
        meridian_steps.push(Slot::new(lower(k), 1));
        meridian_steps.push(Slot::new(upper(k), 0));
    }
    let meridian = DualWord::new(meridian_steps);
    debug_assert_eq!(surface.genus(), g);
    Ok(CylinderFamily {
        genus: g,
        epsilon,
        surface,
        core,
        meridian,
    })
}

/// Sign of a step through the side seam: `+1` exiting rightward through a
/// below-triangle edge 0 (the `x = 1` side), `−1` exiting leftward through an
/// above-triangle edge 1 (the `x = 0` side), `0` otherwise.
fn seam_sign(slot: Slot) -> i64 {
    if slot.edge == 0 && slot.tri % 2 == 0 {
        1
    } else if slot.edge == 1 && slot.tri % 2 == 1 {
        -1
    } else {
        0
    }
}

/// Sign of a step through the top↔bottom wrap: `+1` exiting upward through
/// the top strip's upper edge, `−1` exiting downward through the bottom
/// strip's lower edge, `0` otherwise.
fn wrap_sign(n: usize, slot: Slot) -> i64 {
    if slot == Slot::new(2 * n - 1, 0) {
        1
    } else if slot == Slot::new(0, 2) {
        -1
    } else {
        0
    }
}

/// Independent intersection count with the meridian class: record the signed
/// sequence of side-seam crossings around the word, cancel adjacent opposite
/// crossings until none remain (each such pair bounds an arc that retracts
/// into the cut-open cylinder's boundary, so the cancellation is a free
/// homotopy), and return the count of what survives. The reduced sequence is
/// necessarily all of one sign, so the result equals the net algebraic
/// crossing number — the homological lower bound — which makes the reduced
/// count the geometric intersection number.
pub fn oracle_intersection(g: i64, word: &DualWord) -> Result<i64, FamilyError> {
    let fam = build_cylinder_family(g, 0.25)?;
    word.validate(&fam.surface)?;
    let mut signs: Vec<i64> = word
        .steps
        .iter()
        .map(|s| seam_sign(*s))
        .filter(|s| *s != 0)
        .collect();
    loop {
        let m = signs.len();
        if m < 2 {
            break;
        }
        let mut cancelled = None;
        for j in 0..m {
            if signs[j] + signs[(j + 1) % m] == 0 {
                cancelled = Some(j);
                break;
            }
        }
        match cancelled {
            Some(j) if j + 1 < m => {
                signs.drain(j..=j + 1);
            }
            Some(_) => {
                signs.pop();
                signs.remove(0);
            }
            None => break,
        }
    }
    debug_assert!(signs.windows(2).all(|w| w[0] == w[1]));
    Ok(signs.len() as i64)
}

/// Upper bound on the vertical travel (in units of `ε`) of a staircase
/// representative of `word`: cut the cyclic word at its side-seam crossings;
/// an arc whose net top↔bottom wrap count is `w` can be drawn with vertical
/// travel at most `(|w| + 1)(2g−1)` strip heights (wrap `|w|` times, plus
/// less than one full stack to reach the landing strip). A word that never
/// crosses the seam is a single arc. Only an upper bound is needed: the
/// extraction sandwich uses it to cap how far the geodesic length can sit
/// above the crossing count.
pub fn vertical_segment_bound(g: i64, word: &DualWord) -> i64 {
    let n = strip_count(g);
    let stack = n as i64;
    let seam_positions: Vec<usize> = (0..word.steps.len())
        .filter(|&j| seam_sign(word.steps[j]) != 0)
        .collect();
    if seam_positions.is_empty() {
        let w: i64 = word.steps.iter().map(|s| wrap_sign(n, *s)).sum();
        return (w.abs() + 1) * stack;
    }
    let m = seam_positions.len();
    let len = word.steps.len();
    let mut total = 0i64;
    for a in 0..m {
        let from = seam_positions[a];
        let to = seam_positions[(a + 1) % m];
        let mut w = 0i64;
        let mut j = (from + 1) % len;
        while j != to {
            w += wrap_sign(n, word.steps[j]);
            j = (j + 1) % len;
        }
        total += (w.abs() + 1) * stack;
    }
    total
}

/// Geodesic length of `word` on the genus-`g` strip surface of height `ε`.
/// A null-homotopic word has no geodesic; its length is `0` by convention.
fn class_length(g: i64, epsilon: f64, word: &DualWord) -> Result<f64, FamilyError> {
    let fam = build_cylinder_family(g, epsilon)?;
    word.validate(&fam.surface)?;
    match tighten(&fam.surface, word) {
        Ok(p) => Ok(p.length),
        Err(TightenError::NullHomotopic) => Ok(0.0),
        Err(e) => Err(e.into()),
    }
}

/// Recover the geometric intersection number of `word` with the meridian
/// class from geodesic lengths along an `ε`-schedule.
///
/// For every `ε` the geodesic length satisfies `i ≤ L(ε) ≤ i + n_γ·ε`, where
/// `i` is the intersection number and `n_γ` the staircase bound from
/// [`vertical_segment_bound`]: each essential side-to-side crossing costs
/// horizontal distance exactly `1`, and a representative exists that adds
/// only vertical travel. The returned value is `⌊L(ε_min) + 1e−9⌋`, checked
/// against the sandwich at every scheduled `ε`; a failure — including a
/// schedule too coarse to separate consecutive integers, i.e.
/// `n_γ·ε_min ≥ 1` — reports [`FamilyError::SandwichViolated`].
pub fn extract_intersection_number_with(
    g: i64,
    word: &DualWord,
    schedule: &[f64],
) -> Result<i64, FamilyError> {
    if schedule.is_empty() {
        return Err(FamilyError::InvalidEpsilon(f64::NAN));
    }
    for &e in schedule {
        if !(e > 0.0 && e < 1.0) {
            return Err(FamilyError::InvalidEpsilon(e));
        }
    }
    let n_bound = vertical_segment_bound(g, word);
    let eps_min = schedule.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut lengths = Vec::with_capacity(schedule.len());
    for &e in schedule {
        lengths.push((e, class_length(g, e, word)?));
    }
    let l_min = lengths
        .iter()
        .find(|(e, _)| *e == eps_min)
        .map(|(_, l)| *l)
        .expect("schedule minimum is in the schedule");
    let count = (l_min + 1e-9).floor() as i64;
    if n_bound as f64 * eps_min + 2e-9 >= 1.0 {
        return Err(FamilyError::SandwichViolated {
            epsilon: eps_min,
            length: l_min,
            count,
            vertical_bound: n_bound,
        });
    }
    for &(e, l) in &lengths {
        let lower_ok = count as f64 <= l + 1e-9;
        let upper_ok = l <= count as f64 + n_bound as f64 * e + 1e-9;
        if !lower_ok || !upper_ok {
            return Err(FamilyError::SandwichViolated {
                epsilon: e,
                length: l,
                count,
                vertical_bound: n_bound,
            });
        }
    }
    Ok(count)
}

/// [`extract_intersection_number_with`] on the default schedule
/// [`DEFAULT_EPSILON_SCHEDULE`].
pub fn extract_intersection_number(g: i64, word: &DualWord) -> Result<i64, FamilyError> {
    extract_intersection_number_with(g, word, &DEFAULT_EPSILON_SCHEDULE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::{holonomy_class, HolonomyClass};
    use crate::surface::gauss_bonnet_residual;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::f64::consts::PI;

    #[test]
    fn genus_two_family_has_the_advertised_shape() {
        let fam = build_cylinder_family(2, 0.01).unwrap();
        let s = &fam.surface;
        assert_eq!(s.genus(), 2);
        assert_eq!(s.triangles().len(), 6);
        assert!((s.area() - 3.0 * 0.01).abs() < 1e-12);
        assert!(gauss_bonnet_residual(s) < 1e-9);
        let cones = s.cone_points();
        assert_eq!(cones.len(), 1);
        assert!((cones[0].cone_angle - 6.0 * PI).abs() < 1e-9);
        let rep = holonomy_class(s).unwrap();
        assert_eq!(rep.class, HolonomyClass::Trivial);
    }

    #[test]
    fn genus_three_family_uses_five_strips() {
        let fam = build_cylinder_family(3, 0.1).unwrap();
        let s = &fam.surface;
        assert_eq!(s.genus(), 3);
        assert_eq!(s.triangles().len(), 10);
        let cones = s.cone_points();
        assert_eq!(cones.len(), 1);
        assert!((cones[0].cone_angle - 10.0 * PI).abs() < 1e-9);
        assert_eq!(holonomy_class(s).unwrap().class, HolonomyClass::Trivial);
    }

    #[test]
    fn heights_scale_affinely_with_identical_combinatorics() {
        let a = build_cylinder_family(2, 0.5).unwrap();
        let b = build_cylinder_family(2, 0.25).unwrap();
        assert_eq!(a.surface.pairs(), b.surface.pairs());
        assert_eq!(a.core, b.core);
        assert_eq!(a.meridian, b.meridian);
        for (ta, tb) in a.surface.triangles().iter().zip(b.surface.triangles()) {
            for i in 0..3 {
                assert!((ta.corners[i].x - tb.corners[i].x).abs() < 1e-15);
                assert!((ta.corners[i].y - 2.0 * tb.corners[i].y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn core_is_a_unit_length_geodesic() {
        for (g, eps) in [(2, 1e-2), (2, 1e-3), (3, 1e-2)] {
            let fam = build_cylinder_family(g, eps).unwrap();
            fam.core.validate(&fam.surface).unwrap();
            let p = tighten(&fam.surface, &fam.core).unwrap();
            assert!(p.certificate.certified);
            assert!((p.length - 1.0).abs() < 1e-9, "g={g} eps={eps} len={}", p.length);
        }
    }

    #[test]
    fn meridian_is_a_geodesic_of_stack_height() {
        for (g, eps) in [(2, 1e-2), (3, 1e-3)] {
            let fam = build_cylinder_family(g, eps).unwrap();
            fam.meridian.validate(&fam.surface).unwrap();
            let p = tighten(&fam.surface, &fam.meridian).unwrap();
            assert!(p.certificate.certified);
            let expect = (2 * g - 1) as f64 * eps;
            assert!((p.length - expect).abs() < 1e-9, "g={g} len={}", p.length);
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(matches!(
            build_cylinder_family(1, 0.1),
            Err(FamilyError::InvalidGenus(1))
        ));
        assert!(matches!(
            build_cylinder_family(2, 0.0),
            Err(FamilyError::InvalidEpsilon(_))
        ));
        assert!(matches!(
            build_cylinder_family(2, 1.0),
            Err(FamilyError::InvalidEpsilon(_))
        ));
    }

    #[test]
    fn meridian_has_intersection_zero() {
        let fam = build_cylinder_family(2, 0.25).unwrap();
        assert_eq!(oracle_intersection(2, &fam.meridian).unwrap(), 0);
        assert_eq!(extract_intersection_number(2, &fam.meridian).unwrap(), 0);
    }

    #[test]
    fn core_crosses_the_cylinder_once() {
        let fam = build_cylinder_family(2, 1e-2).unwrap();
        assert_eq!(oracle_intersection(2, &fam.core).unwrap(), 1);
        assert_eq!(extract_intersection_number(2, &fam.core).unwrap(), 1);
        let l = tighten(&fam.surface, &fam.core).unwrap().length;
        assert!(l >= 1.0 - 1e-9 && l <= 1.0 + 1e-2 + 1e-9);
    }

    #[test]
    fn immediate_seam_backtrack_cancels() {
        let fam = build_cylinder_family(2, 0.25).unwrap();
        let n = strip_count(2);
        let k = 0usize;
        let word = DualWord::new(vec![
            Slot::new(2 * k + 1, 1),
            Slot::new(2 * (n - 1 - k), 0),
        ]);
        word.validate(&fam.surface).unwrap();
        assert_eq!(oracle_intersection(2, &word).unwrap(), 0);
        assert_eq!(extract_intersection_number(2, &word).unwrap(), 0);
    }

    #[test]
    fn repeated_core_crossings_accumulate() {
        let fam = build_cylinder_family(2, 1e-2).unwrap();
        let mut steps = Vec::new();
        for _ in 0..3 {
            steps.extend(fam.core.steps.iter().copied());
        }
        let word = DualWord::new(steps);
        word.validate(&fam.surface).unwrap();
        assert_eq!(oracle_intersection(2, &word).unwrap(), 3);
        assert_eq!(extract_intersection_number(2, &word).unwrap(), 3);
    }

    /// Random closed word: a non-backtracking random walk in the dual graph,
    /// closed up by a shortest dual path back to the start triangle.
    fn random_closed_word(s: &ConeSurface, len: usize, rng: &mut ChaCha20Rng) -> DualWord {
        let nt = s.triangles().len();
        let start = rng.gen_range(0..nt);
        let mut steps: Vec<Slot> = Vec::new();
        let mut here = start;
        for _ in 0..len {
            let mut choices: Vec<Slot> = (0..3).map(|e| Slot::new(here, e)).collect();
            if let Some(last) = steps.last() {
                let back = s.partner(*last);
                choices.retain(|c| *c != back);
            }
            let slot = choices[rng.gen_range(0..choices.len())];
            steps.push(slot);
            here = s.partner(slot).tri;
        }
        // Shortest dual path back to the start triangle.
        let mut prev: Vec<Option<Slot>> = vec![None; nt];
        let mut seen = vec![false; nt];
        let mut queue = std::collections::VecDeque::new();
        seen[here] = true;
        queue.push_back(here);
        while let Some(t) = queue.pop_front() {
            for e in 0..3 {
                let slot = Slot::new(t, e);
                let p = s.partner(slot);
                if !seen[p.tri] {
                    seen[p.tri] = true;
                    prev[p.tri] = Some(slot);
                    queue.push_back(p.tri);
                }
            }
        }
        let mut ret = Vec::new();
        let mut cur = start;
        while cur != here {
            let slot = prev[cur].expect("dual graph is connected");
            ret.push(slot);
            cur = slot.tri;
        }
        ret.reverse();
        steps.extend(ret);
        DualWord::new(steps)
    }

    #[test]
    fn random_curves_agree_with_the_oracle() {
        for g in [2i64, 3] {
            let fam = build_cylinder_family(g, 0.25).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(7 + g as u64);
            for trial in 0..8 {
                let word = random_closed_word(&fam.surface, 6 + (trial % 5), &mut rng);
                word.validate(&fam.surface).unwrap();
                let want = oracle_intersection(g, &word).unwrap();
                let got = extract_intersection_number(g, &word).unwrap();
                assert_eq!(got, want, "g={g} trial={trial} word={:?}", word.steps);
            }
        }
    }

    #[test]
    fn core_cylinder_has_height_epsilon() {
        for (g, eps) in [(2i64, 1e-2), (2, 1e-3), (3, 1e-2)] {
            let fam = build_cylinder_family(g, eps).unwrap();
            let p = tighten(&fam.surface, &fam.core).unwrap();
            let cyl = crate::cylinder::detect_flat_cylinder(&fam.surface, &p)
                .unwrap()
                .expect("core is the middle of an embedded strip cylinder");
            assert!((cyl.circumference - 1.0).abs() < 1e-9, "g={g} eps={eps}");
            assert!((cyl.height - eps).abs() < 1e-9, "g={g} eps={eps} h={}", cyl.height);
            assert!(!cyl.full_wrap);
        }
    }

    #[test]
    fn unresolvable_schedule_is_reported() {
        let fam = build_cylinder_family(2, 1e-2).unwrap();
        let err = extract_intersection_number_with(2, &fam.core, &[0.9]).unwrap_err();
        assert!(matches!(err, FamilyError::SandwichViolated { .. }));
    }
}
