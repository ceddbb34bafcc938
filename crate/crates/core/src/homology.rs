//! Integral first homology of a cone surface and homology classes of curves.
//!
//! The triangulation gives a chain complex `ℤ^F → ℤ^E → ℤ^V` over the glued
//! edge pairs; Smith normal form with tracked unimodular transforms computes
//! `H₁ = ker ∂₁ / im ∂₂ ≅ ℤ^{2g}` and expresses any 1-cycle in a fixed basis.
//! Curves given as dual words are pushed to the 1-skeleton by sliding each
//! edge crossing to the tail vertex of the crossed edge.

use crate::curve::DualWord;
use crate::surface::ConeSurface;

/// Dense integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<i128>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            a: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = 1;
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> i128 {
        self.a[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut i128 {
        &mut self.a[i * self.cols + j]
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let v = self.at(i, k);
                if v == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    *out.at_mut(i, j) += v * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[i128]) -> Vec<i128> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.a.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.a.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    /// row[dst] += f * row[src]
    fn add_row(&mut self, src: usize, dst: usize, f: i128) {
        for c in 0..self.cols {
            let v = self.at(src, c);
            *self.at_mut(dst, c) += f * v;
        }
    }

    /// col[dst] += f * col[src]
    fn add_col(&mut self, src: usize, dst: usize, f: i128) {
        for r in 0..self.rows {
            let v = self.at(r, src);
            *self.at_mut(r, dst) += f * v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for c in 0..self.cols {
            *self.at_mut(i, c) = -self.at(i, c);
        }
    }
}

/// Smith normal form `p · a · q = d` with unimodular `p`, `q` and the
/// tracked inverses.
pub(crate) struct Snf {
    pub d: Mat,
    pub p: Mat,
    #[allow(dead_code)] // exercised by the transform identity tests
    pub q: Mat,
    pub q_inv: Mat,
    pub rank: usize,
}

pub(crate) fn smith_normal_form(a: &Mat) -> Snf {
    let mut d = a.clone();
    let (m, n) = (d.rows, d.cols);
    let mut p = Mat::identity(m);
    let mut q = Mat::identity(n);
    let mut q_inv = Mat::identity(n);
    let mut k = 0;
    while k < m.min(n) {
        // Pivot: smallest nonzero magnitude in the trailing block.
        let mut pivot: Option<(usize, usize)> = None;
        for i in k..m {
            for j in k..n {
                let v = d.at(i, j).unsigned_abs();
                if v != 0 && pivot.map_or(true, |(pi, pj)| v < d.at(pi, pj).unsigned_abs()) {
                    pivot = Some((i, j));
                }
            }
        }
        let (pi, pj) = match pivot {
            Some(x) => x,
            None => break,
        };
        d.swap_rows(k, pi);
        p.swap_rows(k, pi);
        d.swap_cols(k, pj);
        q.swap_cols(k, pj);
        q_inv.swap_rows(k, pj);
        'eliminate: loop {
            for i in k + 1..m {
                let f = d.at(i, k).div_euclid(d.at(k, k));
                if f != 0 {
                    d.add_row(k, i, -f);
                    p.add_row(k, i, -f);
                }
                if d.at(i, k) != 0 {
                    // Remainder is strictly smaller; promote it to pivot.
                    d.swap_rows(k, i);
                    p.swap_rows(k, i);
                    continue 'eliminate;
                }
            }
            for j in k + 1..n {
                let f = d.at(k, j).div_euclid(d.at(k, k));
                if f != 0 {
                    d.add_col(k, j, -f);
                    q.add_col(k, j, -f);
                    q_inv.add_row(j, k, f);
                }
                if d.at(k, j) != 0 {
                    d.swap_cols(k, j);
                    q.swap_cols(k, j);
                    q_inv.swap_rows(k, j);
                    continue 'eliminate;
                }
            }
            // Divisibility: every later entry must be a multiple of the pivot.
            for i in k + 1..m {
                for j in k + 1..n {
                    if d.at(i, j) % d.at(k, k) != 0 {
                        d.add_row(i, k, 1);
                        p.add_row(i, k, 1);
                        continue 'eliminate;
                    }
                }
            }
            break;
        }
        if d.at(k, k) < 0 {
            d.negate_row(k);
            p.negate_row(k);
        }
        k += 1;
    }
    Snf {
        d,
        p,
        q,
        q_inv,
        rank: k,
    }
}

/// `∂₁ : ℤ^E → ℤ^V` over glued edge pairs, each oriented by its first slot.
pub fn boundary_one(s: &ConeSurface) -> Vec<Vec<i128>> {
    let v = s.vertex_classes().len();
    let e = s.pairs().len();
    let mut m = vec![vec![0i128; e]; v];
    for (pi, &(a, _)) in s.pairs().iter().enumerate() {
        let head = s.class_of((a.tri, (a.edge + 2) % 3));
        let tail = s.class_of((a.tri, (a.edge + 1) % 3));
        m[head][pi] += 1;
        m[tail][pi] -= 1;
    }
    m
}

/// `∂₂ : ℤ^F → ℤ^E`; each triangle's boundary traverses its slots in the
/// counterclockwise orientation.
pub fn boundary_two(s: &ConeSurface) -> Vec<Vec<i128>> {
    let e = s.pairs().len();
    let f = s.triangles().len();
    let mut m = vec![vec![0i128; f]; e];
    for t in 0..f {
        for edge in 0..3 {
            let (pi, first) = s.pair_of(crate::surface::Slot::new(t, edge));
            m[pi][t] += if first { 1 } else { -1 };
        }
    }
    m
}

fn to_mat(rows: &[Vec<i128>]) -> Mat {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    let mut m = Mat::zeros(r, c);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            *m.at_mut(i, j) = v;
        }
    }
    m
}

/// A fixed integral basis of `H₁ ≅ ℤ^{2g}` for one surface.
pub struct HomologyBasis {
    cycle_coords: Mat,
    class_transform: Mat,
    free_start: usize,
    rank: usize,
}

impl HomologyBasis {
    /// Compute the basis. Panics if the complex has torsion or the rank does
    /// not match `2g` — both indicate a corrupted surface, not user error.
    pub fn new(s: &ConeSurface) -> HomologyBasis {
        let d1 = to_mat(&boundary_one(s));
        let d2 = to_mat(&boundary_two(s));
        let e = s.pairs().len();
        let snf1 = smith_normal_form(&d1);
        let r1 = snf1.rank;
        // Rows r1.. of q₁⁻¹ are the cycle coordinates of ℤ^E.
        let mut cycle_coords = Mat::zeros(e - r1, e);
        for i in r1..e {
            for j in 0..e {
                *cycle_coords.at_mut(i - r1, j) = snf1.q_inv.at(i, j);
            }
        }
        let m = cycle_coords.mul(&d2);
        let snf2 = smith_normal_form(&m);
        let r2 = snf2.rank;
        for i in 0..r2 {
            assert_eq!(snf2.d.at(i, i).abs(), 1, "torsion in surface homology");
        }
        let rank = (e - r1) - r2;
        assert_eq!(
            rank as i64,
            2 * s.genus(),
            "homology rank disagrees with genus"
        );
        HomologyBasis {
            cycle_coords,
            class_transform: snf2.p,
            free_start: r2,
            rank,
        }
    }

    /// Rank of `H₁` (always `2g`).
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Homology class of a 1-cycle given by pair coefficients.
    pub fn class_of_cycle(&self, z: &[i128]) -> Vec<i128> {
        let u = self.cycle_coords.mul_vec(z);
        let w = self.class_transform.mul_vec(&u);
        w[self.free_start..].to_vec()
    }
}

/// Push a dual word to the 1-skeleton and return its 1-chain over the glued
/// edge pairs. The result is always a cycle.
pub fn curve_chain(s: &ConeSurface, w: &DualWord) -> Vec<i128> {
    let mut z = vec![0i128; s.pairs().len()];
    let n = w.steps.len();
    for j in 0..n {
        let step = w.steps[j];
        let next = w.steps[(j + 1) % n];
        let tri = s.partner(step).tri;
        // Entry corner: the tail vertex of the crossed pair, seen in `tri`.
        let (_, step_first) = s.pair_of(step);
        let u = if step_first {
            // Crossed the first slot; we are in the second slot's chart, where
            // the pair's tail is the end of the oriented edge.
            (s.partner(step).edge + 2) % 3
        } else {
            (s.partner(step).edge + 1) % 3
        };
        // Exit corner: the tail vertex of the next crossed pair, seen in `tri`.
        let (_, next_first) = s.pair_of(next);
        let v = if next_first {
            (next.edge + 1) % 3
        } else {
            (next.edge + 2) % 3
        };
        if u == v {
            continue;
        }
        let k = 3 - u - v;
        let along = v == (k + 2) % 3;
        let (pi, first) = s.pair_of(crate::surface::Slot::new(tri, k));
        let sign = if along == first { 1 } else { -1 };
        z[pi] += sign;
    }
    z
}

/// Homology class of a curve in the fixed basis.
pub fn homology_class(s: &ConeSurface, basis: &HomologyBasis, w: &DualWord) -> Vec<i128> {
    basis.class_of_cycle(&curve_chain(s, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::random_homotopic_word;
    use crate::shapes::{doubled_triangle, flat_torus, genus2_octagon};
    use crate::surface::Slot;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn snf_diagonalizes_with_unimodular_transforms() {
        let m = to_mat(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]]);
        let snf = smith_normal_form(&m);
        let lhs = snf.p.mul(&m).mul(&snf.q);
        assert_eq!(lhs, snf.d);
        assert_eq!(snf.q.mul(&snf.q_inv), Mat::identity(3));
        // Divisibility chain along the diagonal.
        for i in 1..snf.rank {
            assert_eq!(snf.d.at(i, i) % snf.d.at(i - 1, i - 1), 0);
        }
    }

    #[test]
    fn boundary_of_boundary_vanishes() {
        for s in [flat_torus(1.0, 1.0), genus2_octagon(), doubled_triangle()] {
            let d1 = to_mat(&boundary_one(&s));
            let d2 = to_mat(&boundary_two(&s));
            let z = d1.mul(&d2);
            assert!(z.a.iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn homology_rank_matches_genus() {
        assert_eq!(HomologyBasis::new(&flat_torus(1.0, 1.0)).rank(), 2);
        assert_eq!(HomologyBasis::new(&genus2_octagon()).rank(), 4);
        assert_eq!(HomologyBasis::new(&doubled_triangle()).rank(), 0);
    }

    #[test]
    fn torus_meridian_and_longitude_form_a_basis() {
        let s = flat_torus(1.0, 1.0);
        let basis = HomologyBasis::new(&s);
        let horizontal = DualWord::new(vec![Slot::new(0, 0), Slot::new(1, 2)]);
        let vertical = DualWord::new(vec![Slot::new(0, 1), Slot::new(1, 0)]);
        horizontal.validate(&s).unwrap();
        vertical.validate(&s).unwrap();
        let h = homology_class(&s, &basis, &horizontal);
        let v = homology_class(&s, &basis, &vertical);
        let det = h[0] * v[1] - h[1] * v[0];
        assert_eq!(det.abs(), 1, "h={h:?} v={v:?}");
    }

    #[test]
    fn backtrack_word_is_null_homologous() {
        let s = genus2_octagon();
        let basis = HomologyBasis::new(&s);
        let out = Slot::new(0, 0);
        let w = DualWord::new(vec![out, s.partner(out)]);
        w.validate(&s).unwrap();
        assert!(homology_class(&s, &basis, &w).iter().all(|&c| c == 0));
    }

    #[test]
    fn homology_class_is_homotopy_invariant() {
        let s = genus2_octagon();
        let basis = HomologyBasis::new(&s);
        let tri0 = &s.triangles()[0];
        let c = tri0
            .corners
            .iter()
            .fold(crate::geom::Vec2::ZERO, |a, v| a.add(*v))
            .scale(1.0 / 3.0);
        let r = crate::trace::straight_path(&s, 0, c, crate::geom::Vec2::new(1.0, 0.23), 3.0)
            .unwrap();
        let mut steps = r.dual_word();
        let back: Vec<Slot> = steps.iter().rev().map(|&sl| s.partner(sl)).collect();
        steps.extend(back);
        let w = DualWord::new(steps);
        w.validate(&s).unwrap();
        let base = homology_class(&s, &basis, &w);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..8 {
            let moved = random_homotopic_word(&s, &w, 15, &mut rng);
            assert_eq!(homology_class(&s, &basis, &moved), base);
        }
    }
}
