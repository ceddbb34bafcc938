//! Planar geometry primitives: vectors, orientation-preserving isometries,
//! angle arithmetic, and the rational-angle recognizer.
//!
//! Everything downstream (charts, developing maps, holonomy, tightening)
//! is built from the types in this module.

use serde::{Deserialize, Serialize};

/// A point or vector in the Euclidean plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// Z-component of the cross product; positive when `o` lies
    /// counterclockwise of `self`.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, o: Vec2) -> f64 {
        self.sub(o).norm()
    }

    /// Angle of the vector measured counterclockwise from the positive x-axis,
    /// in `(-π, π]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn normalize(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counterclockwise rotation by `theta`.
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self.add(o.sub(self).scale(t))
    }
}

/// Unsigned angle between two nonzero vectors, in `[0, π]`.
pub fn unsigned_angle(a: Vec2, b: Vec2) -> f64 {
    a.cross(b).atan2(a.dot(b)).abs()
}

/// Signed angle rotating `a` onto `b` counterclockwise, in `(-π, π]`.
pub fn signed_angle(a: Vec2, b: Vec2) -> f64 {
    a.cross(b).atan2(a.dot(b))
}

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta % two_pi;
    if t < 0.0 {
        t += two_pi;
    }
    // `-1e-30 % two_pi` can round back up to `two_pi` exactly.
    if t >= two_pi {
        t -= two_pi;
    }
    t
}

/// Reduce an angle to `(-π, π]`.
pub fn wrap_angle_signed(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let t = wrap_angle(theta);
    if t > pi {
        t - 2.0 * pi
    } else {
        t
    }
}

/// An orientation-preserving isometry of the plane, `z ↦ R(θ)·z + t`,
/// stored as the rotation's cosine/sine and the translation part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub cos: f64,
    pub sin: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        cos: 1.0,
        sin: 0.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Isometry {
            cos: c,
            sin: s,
            tx: 0.0,
            ty: 0.0,
        }
    }

    pub fn translation(t: Vec2) -> Self {
        Isometry {
            cos: 1.0,
            sin: 0.0,
            tx: t.x,
            ty: t.y,
        }
    }

    /// The isometry rotating by `theta` about the origin and then translating
    /// so that `from` maps to `to`.
    pub fn rotation_then_match(theta: f64, from: Vec2, to: Vec2) -> Self {
        let (s, c) = theta.sin_cos();
        let rf = Vec2::new(c * from.x - s * from.y, s * from.x + c * from.y);
        Isometry {
            cos: c,
            sin: s,
            tx: to.x - rf.x,
            ty: to.y - rf.y,
        }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            self.cos * p.x - self.sin * p.y + self.tx,
            self.sin * p.x + self.cos * p.y + self.ty,
        )
    }

    /// Apply only the rotation part (for direction vectors).
    pub fn apply_dir(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.cos * v.x - self.sin * v.y,
            self.sin * v.x + self.cos * v.y,
        )
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            cos: self.cos * other.cos - self.sin * other.sin,
            sin: self.sin * other.cos + self.cos * other.sin,
            tx: self.cos * other.tx - self.sin * other.ty + self.tx,
            ty: self.sin * other.tx + self.cos * other.ty + self.ty,
        }
    }

    pub fn inverse(&self) -> Isometry {
        // Inverse rotation is the transpose; translation is -Rᵀt.
        Isometry {
            cos: self.cos,
            sin: -self.sin,
            tx: -(self.cos * self.tx + self.sin * self.ty),
            ty: -(-self.sin * self.tx + self.cos * self.ty),
        }
    }

    /// Rotation angle in `(-π, π]`.
    pub fn rotation_angle(&self) -> f64 {
        self.sin.atan2(self.cos)
    }

    /// Renormalize the rotation part to unit determinant. Long chains of
    /// compositions drift at the 1e-16 level per step; developing maps can
    /// chain thousands of steps.
    pub fn renormalized(&self) -> Isometry {
        let n = self.cos.hypot(self.sin);
        Isometry {
            cos: self.cos / n,
            sin: self.sin / n,
            tx: self.tx,
            ty: self.ty,
        }
    }
}

/// Intersection of segments `a0→a1` and `b0→b1`.
///
/// Returns `(s, t)` with the intersection point at `a0 + s·(a1-a0)` and
/// `b0 + t·(b1-b0)`, or `None` when the segments are parallel to within
/// machine precision. Callers decide which parameter ranges they accept.
pub fn line_intersection_params(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> Option<(f64, f64)> {
    let da = a1.sub(a0);
    let db = b1.sub(b0);
    let denom = da.cross(db);
    if denom.abs() < 1e-300 {
        return None;
    }
    let diff = b0.sub(a0);
    let s = diff.cross(db) / denom;
    let t = diff.cross(da) / denom;
    Some((s, t))
}

/// Do the *open* segments properly cross? Endpoint touches within `tol`
/// (measured in parameter space) do not count.
pub fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2, tol: f64) -> bool {
    match line_intersection_params(a0, a1, b0, b1) {
        Some((s, t)) => s > tol && s < 1.0 - tol && t > tol && t < 1.0 - tol,
        None => false,
    }
}

/// Singular values of the 2×2 matrix with columns `u`, `v`, largest first.
///
/// Closed form via the identities `σ²max + σ²min = E + G` and
/// `σmax·σmin = |det|` where `E = |u|²`, `G = |v|²`.
pub fn singular_values(u: Vec2, v: Vec2) -> (f64, f64) {
    let e = u.norm_sq();
    let g = v.norm_sq();
    let f = u.dot(v);
    let trace = e + g;
    let disc = ((e - g) * (e - g) + 4.0 * f * f).max(0.0).sqrt();
    let s_max = ((trace + disc) / 2.0).max(0.0).sqrt();
    let s_min = ((trace - disc) / 2.0).max(0.0).sqrt();
    (s_max, s_min)
}

/// A reduced fraction `num/den` with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: i64,
    pub den: i64,
}

impl Fraction {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "fraction with zero denominator");
        let g = gcd_u64(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let sign = if den < 0 { -1 } else { 1 };
        Fraction {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    if a == 0 {
        1
    } else {
        a
    }
}

pub fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    if a == 0 {
        1
    } else {
        a
    }
}

/// `lcm` over `u128` with overflow checking.
pub fn checked_lcm_u128(a: u128, b: u128) -> Option<u128> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / gcd_u128(a, b)).checked_mul(b)
}

/// The fraction with smallest denominator in the closed interval `[lo, hi]`,
/// provided that denominator does not exceed `max_den`.
///
/// Walks the Stern–Brocot tree: at each node the mediant either lies in the
/// interval (done — it is the simplest fraction there) or the whole interval
/// lies on one side. Integers are checked first since they have denominator 1.
pub fn simplest_rational_in(lo: f64, hi: f64, max_den: u64) -> Option<Fraction> {
    if !(lo <= hi) {
        return None;
    }
    // Any integer in range wins outright; prefer the one smallest in
    // magnitude so that e.g. [-0.3, 0.4] yields 0.
    let lo_c = lo.ceil();
    if lo_c <= hi {
        let int = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo_c };
        return Some(Fraction::new(int as i64, 1));
    }
    // Reduce to a positive interval; [lo, hi] with hi < ceil(lo) lies
    // strictly between consecutive integers.
    let base = lo.floor();
    let f = simplest_in_unit(lo - base, hi - base, max_den, 0)?;
    let num = f.num.checked_add((base as i64).checked_mul(f.den)?)?;
    Some(Fraction::new(num, f.den))
}

/// Simplest fraction in `(lo, hi) ⊂ (0, 1)` (inclusive bounds), by the
/// recursive mediant construction on `[0/1, 1/1]`.
fn simplest_in_unit(lo: f64, hi: f64, max_den: u64, depth: u32) -> Option<Fraction> {
    // Continued-fraction style recursion: the simplest p/q in (lo,hi) with
    // 0 < lo <= hi < 1 has p/q = 1/(simplest in (1/hi, 1/lo)) reversed.
    if depth > 64 {
        return None;
    }
    debug_assert!(lo > 0.0 && hi < 1.0);
    let inv_hi = 1.0 / hi;
    let inv_lo = 1.0 / lo;
    // Simplest rational in [1/hi, 1/lo]: integer part first.
    let c = inv_hi.ceil();
    let inner = if c <= inv_lo {
        Fraction::new(c as i64, 1)
    } else {
        let base = inv_hi.floor();
        let f = simplest_in_unit(inv_hi - base, inv_lo - base, max_den, depth + 1)?;
        let num = f.num.checked_add((base as i64).checked_mul(f.den)?)?;
        Fraction::new(num, f.den)
    };
    // Reciprocal: den/num.
    if inner.num == 0 {
        return None;
    }
    let out = Fraction::new(inner.den, inner.num);
    if out.den.unsigned_abs() > max_den {
        None
    } else {
        Some(out)
    }
}

/// Recognize `x` as a fraction with denominator at most `max_den`, allowing
/// an absolute error of `tol`. Returns the smallest-denominator candidate.
pub fn approx_rational(x: f64, tol: f64, max_den: u64) -> Option<Fraction> {
    let f = simplest_rational_in(x - tol, x + tol, max_den)?;
    if (f.value() - x).abs() <= tol {
        Some(f)
    } else {
        None
    }
}
