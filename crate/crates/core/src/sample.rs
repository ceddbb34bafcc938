//! Random NPC cone surfaces with prescribed finite holonomy.
//!
//! `sample_flat_metric(g, q, seed)` draws a closed oriented genus-`g`
//! surface whose holonomy group is cyclic of an order dividing `q`, using
//! three regimes:
//!
//! * `q = 1`: a random orientation-preserving linear map (determinant in
//!   `[0.5, 2]`, condition number at most `10`) applied to a translation
//!   base — the genus-2 octagon, or the strip surface for higher genus.
//!   Linear conjugation preserves translation gluings exactly.
//! * `q = 2`: the same linear-map treatment applied to a slit-torus base
//!   with genuine half-turn gluings (see [`half_turn_base`] below); `−I` is
//!   central, so the image stays in the half-turn class.
//! * `q ≥ 3`: a `4g`-gon with the opposite-side pairing, whose second
//!   members are rotated copies `z_{i+2g} = −R_{2πk_i/q} z_i` with random
//!   `k_i`; the closing pair absorbs the leftover gap by solving
//!   `(I − R) z = τ` (the linear form of the perpendicular-bisector fix),
//!   and non-simple draws are rejected.  The opposite pairing pins the
//!   genus combinatorially no matter the rotations, and the single vertex
//!   orbit of a simple `4g`-gon has angle `(4g−2)π ≥ 2π`, so the result is
//!   automatically NPC.
//!
//! Outputs are deterministic in the seed.

use crate::families::{build_cylinder_family, FamilyError};
use crate::geom::Vec2;
use crate::polygon::{build_from_polygon, PolygonPresentation};
use crate::shapes::genus2_octagon_presentation;
use crate::surface::{build_from_triangles, ConeSurface, Slot, SurfaceError, Triangle};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("genus must be at least 2, got {0}")]
    InvalidGenus(i64),
    #[error("holonomy order must be positive, got {0}")]
    InvalidOrder(u64),
    #[error("no valid sample after {0} attempts")]
    SamplingExhausted(usize),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// A random orientation-preserving linear map with determinant in
/// `[0.5, 2]` and condition number in `[1, 10]`, via a rotation–stretch–
/// rotation factorization.
fn random_linear_map(rng: &mut ChaCha20Rng) -> [[f64; 2]; 2] {
    let alpha: f64 = rng.gen_range(0.0..2.0 * PI);
    let beta: f64 = rng.gen_range(0.0..2.0 * PI);
    let det: f64 = rng.gen_range(0.5..2.0);
    let cond: f64 = rng.gen_range(1.0..10.0);
    let s = det.sqrt();
    let r = cond.sqrt();
    let (s1, s2) = (s * r.sqrt(), s / r.sqrt());
    let (ca, sa) = (alpha.cos(), alpha.sin());
    let (cb, sb) = (beta.cos(), beta.sin());
    // R(alpha) · diag(s1, s2) · R(beta)
    [
        [
            ca * s1 * cb - sa * s2 * sb,
            -ca * s1 * sb - sa * s2 * cb,
        ],
        [
            sa * s1 * cb + ca * s2 * sb,
            -sa * s1 * sb + ca * s2 * cb,
        ],
    ]
}

fn apply(m: &[[f64; 2]; 2], v: Vec2) -> Vec2 {
    Vec2::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
}

/// Regime (a): linear image of a translation base surface.
fn sample_translation_surface(
    g: i64,
    rng: &mut ChaCha20Rng,
) -> Result<ConeSurface, SampleError> {
    let m = random_linear_map(rng);
    if g == 2 {
        let base = genus2_octagon_presentation();
        let p = PolygonPresentation {
            edges: base.edges.iter().map(|&z| apply(&m, z)).collect(),
            pairing: base.pairing,
        };
        Ok(build_from_polygon(&p, true)?)
    } else {
        let eps: f64 = rng.gen_range(0.2..0.8);
        let fam = build_cylinder_family(g, eps)?;
        let triangles: Vec<Triangle> = fam
            .surface
            .triangles()
            .iter()
            .map(|t| Triangle::new(apply(&m, t.corners[0]), apply(&m, t.corners[1]), apply(&m, t.corners[2])))
            .collect();
        Ok(build_from_triangles(
            triangles,
            fam.surface.pairs().to_vec(),
            true,
        )?)
    }
}

/// A genus-`g` surface with holonomy exactly `{±1}`: a flat square torus
/// whose bottom line carries `g−1` pairs of equal-length slits, each pair
/// glued bottom-to-bottom and top-to-top with a reversal.
///
/// Gluing two same-side segments is orientation-compatible precisely when
/// the identification reverses the segment, which is a `π`-rotation — this
/// is what makes the holonomy genuinely nontrivial.  (A single polygon
/// cannot do this: with all gluings `±1`, closure forces the second half of
/// the boundary walk to replay the first half's partial sums, pinching the
/// polygon.)  Each swapped pair creates two cone points of angle `4π` and
/// drops the Euler characteristic by 2, so `g−1` swaps on the torus give
/// genus `g`, always NPC.
fn half_turn_base(g: i64, rng: &mut ChaCha20Rng) -> Result<ConeSurface, SampleError> {
    let swaps = (g - 1) as usize;
    let nb = 2 * swaps;
    let bw = 1.0 / nb as f64;
    // One slit per block, swap partners in consecutive blocks; widths equal
    // within a swap pair, with margins so every column keeps positive width.
    let widths: Vec<f64> = (0..swaps)
        .map(|_| bw * rng.gen_range(0.25..0.55))
        .collect();
    let mut slits: Vec<(f64, f64, usize)> = Vec::new(); // (start, end, swap id)
    for j in 0..nb {
        let w = widths[j / 2];
        let off = rng.gen_range(0.1 * bw..(bw - w - 0.1 * bw));
        let start = j as f64 * bw + off;
        slits.push((start, start + w, j / 2));
    }
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for &(s, e, _) in &slits {
        cuts.push(s);
        cuts.push(e);
    }
    cuts.sort_by(f64::total_cmp);
    let m = cuts.len() - 1; // columns
    let lower = |c: usize| 2 * c;
    let upper = |c: usize| 2 * c + 1;
    let mut triangles = Vec::with_capacity(2 * m);
    for c in 0..m {
        let (x0, x1) = (cuts[c], cuts[c + 1]);
        let a = Vec2::new(x0, 0.0);
        let b = Vec2::new(x1, 0.0);
        let t = Vec2::new(x1, 1.0);
        let d = Vec2::new(x0, 1.0);
        triangles.push(Triangle::new(a, b, t));
        triangles.push(Triangle::new(a, t, d));
    }
    let mut pairs = Vec::with_capacity(3 * m);
    for c in 0..m {
        // Column diagonal.
        pairs.push((Slot::new(lower(c), 2), Slot::new(upper(c), 0)));
        // Vertical seam to the next column, wrapping left-right.
        pairs.push((
            Slot::new(lower(c), 1),
            Slot::new(upper((c + 1) % m), 2),
        ));
    }
    // Bottom/top gluings: translation for ordinary columns, swapped and
    // reversed for slit columns.
    let col_of = |s: f64| -> usize {
        cuts.iter().position(|&x| (x - s).abs() < 1e-12).expect("cut") // start cut index = column index
    };
    let mut slit_cols: Vec<Vec<usize>> = vec![Vec::new(); swaps];
    let mut is_slit = vec![false; m];
    for &(s, _, id) in &slits {
        let c = col_of(s);
        slit_cols[id].push(c);
        is_slit[c] = true;
    }
    for (c, &slit) in is_slit.iter().enumerate() {
        if !slit {
            pairs.push((Slot::new(lower(c), 0), Slot::new(upper(c), 1)));
        }
    }
    for cols in &slit_cols {
        let [ca, cb] = [cols[0], cols[1]];
        pairs.push((Slot::new(lower(ca), 0), Slot::new(lower(cb), 0)));
        pairs.push((Slot::new(upper(ca), 1), Slot::new(upper(cb), 1)));
    }
    Ok(build_from_triangles(triangles, pairs, true)?)
}

/// Regime (b): one attempt at a rotation-paired `4g`-gon.
fn try_rotation_polygon(
    g: i64,
    q: u64,
    rng: &mut ChaCha20Rng,
) -> Option<PolygonPresentation> {
    let n = (2 * g) as usize; // pairs
    let mut edges = vec![Vec2::new(0.0, 0.0); 2 * n];
    let mut ks = vec![0u64; n];
    // The closing pair always carries the elementary rotation, both to make
    // the closing solve invertible and so the sampled holonomy generically
    // realizes the full order q.
    ks[0] = 1;
    for k in ks.iter_mut().skip(1) {
        *k = rng.gen_range(0..q);
    }
    for i in 1..n {
        let theta = PI * (i as f64 + 0.5) / n as f64 + rng.gen_range(-0.2..0.2);
        let len: f64 = rng.gen_range(0.7..1.3);
        let z = Vec2::new(len * theta.cos(), len * theta.sin());
        edges[i] = z;
        edges[i + n] = z.rotate(2.0 * PI * ks[i] as f64 / q as f64).scale(-1.0);
    }
    // Close with pair 0: solve (I − R) z = τ for the remaining gap τ.
    let tau = edges
        .iter()
        .fold(Vec2::new(0.0, 0.0), |acc, &z| acc.add(z))
        .scale(-1.0);
    let phi = 2.0 * PI * ks[0] as f64 / q as f64;
    let (c, s) = (phi.cos(), phi.sin());
    let det = 2.0 * (1.0 - c);
    let z0 = Vec2::new(
        ((1.0 - c) * tau.x - s * tau.y) / det,
        (s * tau.x + (1.0 - c) * tau.y) / det,
    );
    if !z0.x.is_finite() || !z0.y.is_finite() {
        return None;
    }
    let norm = z0.norm();
    if !(1e-3..=1e3).contains(&norm) {
        return None;
    }
    edges[0] = z0;
    edges[n] = z0.rotate(phi).scale(-1.0);
    let pairing = (0..n).map(|i| (i, i + n)).collect();
    let p = PolygonPresentation { edges, pairing };
    p.validate().ok().map(|_| p)
}

/// Draw a genus-`g` NPC cone surface whose holonomy group is cyclic of an
/// order dividing `q`, deterministically in `seed`.
pub fn sample_flat_metric(
    g: i64,
    q: u64,
    seed: u64,
    max_attempts: usize,
) -> Result<ConeSurface, SampleError> {
    if g < 2 {
        return Err(SampleError::InvalidGenus(g));
    }
    if q == 0 {
        return Err(SampleError::InvalidOrder(q));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    if q == 1 {
        return sample_translation_surface(g, &mut rng);
    }
    if q == 2 {
        // −I is central, so a linear map conjugates half-turn gluings to
        // half-turn gluings exactly: linear images of the slit torus stay in
        // the half-turn class.
        let m = random_linear_map(&mut rng);
        let base = half_turn_base(g, &mut rng)?;
        let triangles: Vec<Triangle> = base
            .triangles()
            .iter()
            .map(|t| {
                Triangle::new(
                    apply(&m, t.corners[0]),
                    apply(&m, t.corners[1]),
                    apply(&m, t.corners[2]),
                )
            })
            .collect();
        return Ok(build_from_triangles(
            triangles,
            base.pairs().to_vec(),
            true,
        )?);
    }
    for _ in 0..max_attempts {
        if let Some(p) = try_rotation_polygon(g, q, &mut rng) {
            match build_from_polygon(&p, true) {
                Ok(s) => return Ok(s),
                Err(_) => continue,
            }
        }
    }
    Err(SampleError::SamplingExhausted(max_attempts))
}

/// [`sample_flat_metric`] with the default retry budget of 1000 attempts.
pub fn sample_flat_metric_default(g: i64, q: u64, seed: u64) -> Result<ConeSurface, SampleError> {
    sample_flat_metric(g, q, seed, 1000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::{holonomy_class, HolonomyClass};
    use crate::surface::gauss_bonnet_residual;

    #[test]
    fn translation_samples_are_translation_surfaces() {
        let s = sample_flat_metric_default(2, 1, 7).unwrap();
        assert_eq!(s.genus(), 2);
        assert!(s.is_npc());
        assert!(gauss_bonnet_residual(&s) < 1e-9);
        assert_eq!(holonomy_class(&s).unwrap().class, HolonomyClass::Trivial);
        let t = sample_flat_metric_default(3, 1, 11).unwrap();
        assert_eq!(t.genus(), 3);
        assert_eq!(holonomy_class(&t).unwrap().class, HolonomyClass::Trivial);
    }

    #[test]
    fn rotation_samples_divide_requested_order() {
        for (g, q, seed) in [(2i64, 4u64, 3u64), (2, 2, 5), (2, 6, 9), (3, 3, 2)] {
            let s = sample_flat_metric_default(g, q, seed)
                .unwrap_or_else(|e| panic!("g={g} q={q} seed={seed}: {e}"));
            assert_eq!(s.genus(), g);
            assert!(s.is_npc());
            assert!(gauss_bonnet_residual(&s) < 1e-9);
            let order = holonomy_class(&s)
                .unwrap()
                .class
                .order()
                .expect("sampled rotations are exact fractions of a turn");
            assert!(
                q % order == 0,
                "g={g} q={q} seed={seed}: holonomy order {order}"
            );
        }
    }

    #[test]
    fn half_turn_order_is_actually_realized() {
        let mut seen_two = false;
        for seed in 0..20 {
            let s = sample_flat_metric_default(2, 2, seed).unwrap();
            if holonomy_class(&s).unwrap().class == (HolonomyClass::Cyclic { q: 2 }) {
                seen_two = true;
                break;
            }
        }
        assert!(seen_two, "no half-turn holonomy among 20 seeds");
    }

    #[test]
    fn sampling_is_deterministic_in_seed() {
        let a = sample_flat_metric_default(2, 4, 42).unwrap();
        let b = sample_flat_metric_default(2, 4, 42).unwrap();
        assert_eq!(a.triangles().len(), b.triangles().len());
        for (ta, tb) in a.triangles().iter().zip(b.triangles()) {
            for i in 0..3 {
                assert_eq!(ta.corners[i].x, tb.corners[i].x);
                assert_eq!(ta.corners[i].y, tb.corners[i].y);
            }
        }
        let c = sample_flat_metric_default(2, 4, 43).unwrap();
        let differs = a
            .triangles()
            .iter()
            .zip(c.triangles())
            .any(|(x, y)| (0..3).any(|i| x.corners[i].x != y.corners[i].x));
        assert!(differs, "different seeds should give different surfaces");
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(matches!(
            sample_flat_metric(1, 1, 0, 10),
            Err(SampleError::InvalidGenus(1))
        ));
        assert!(matches!(
            sample_flat_metric(2, 0, 0, 10),
            Err(SampleError::InvalidOrder(0))
        ));
        assert!(matches!(
            sample_flat_metric(2, 4, 0, 0),
            Err(SampleError::SamplingExhausted(0))
        ));
    }
}
