//! Ellipsoid-guided convex decomposition around a seed segment.
//!
//! Obstacles are closed boxes. A fixed ellipsoid is placed on the seed
//! (semi-axis half the segment length along it, the growth step laterally).
//! Boxes are visited in order of their ellipsoid-metric distance; a box not
//! already excluded by an existing face contributes the tangent plane of the
//! scaled ellipsoid at its nearest point. Boxes that reach into the base
//! ellipsoid instead get the plane through the closest pair between the seed
//! segment and the box.

use nalgebra::{Matrix2, Matrix3, Vector2};

use super::CellFailure;
use crate::world::{Aabb, Halfspace, Polytope};
use crate::Vec3;

/// Clearance kept between a clipped seed and any obstacle box.
const SEED_CLEARANCE: f64 = 1e-4;
/// Inward offset of each cut so the excluded box is strictly outside.
const CUT_GAP: f64 = 1e-6;
/// A face must beat the box by this much to count as excluding it.
const EXCLUDE_MARGIN: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub start: Vec3,
    pub end: Vec3,
}

/// Shrinks `[start, end]` to the collision-free piece around its midpoint.
pub fn clip_seed(start: Vec3, end: Vec3, boxes: &[Aabb], bounds: &Aabb) -> Result<Seed, CellFailure> {
    let mid = (start + end) * 0.5;
    let shrunk_lo = bounds.min().add_scalar(SEED_CLEARANCE);
    let shrunk_hi = bounds.max().add_scalar(-SEED_CLEARANCE);
    if (0..3).any(|i| mid[i] < shrunk_lo[i] || mid[i] > shrunk_hi[i]) {
        return Err(CellFailure::SeedOutOfBounds);
    }
    let dir = end - start;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // Keep inside the bounds.
    for i in 0..3 {
        if dir[i].abs() > 0.0 {
            let ta = (shrunk_lo[i] - start[i]) / dir[i];
            let tb = (shrunk_hi[i] - start[i]) / dir[i];
            let (t_in, t_out) = if ta < tb { (ta, tb) } else { (tb, ta) };
            lo = lo.max(t_in);
            hi = hi.min(t_out);
        }
    }
    for b in boxes {
        let (bmin, bmax) = (b.min().add_scalar(-SEED_CLEARANCE), b.max().add_scalar(SEED_CLEARANCE));
        if (0..3).all(|i| mid[i] >= bmin[i] && mid[i] <= bmax[i]) {
            return Err(CellFailure::SeedInCollision);
        }
        let (mut t_in, mut t_out) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut miss = false;
        for i in 0..3 {
            if dir[i].abs() < 1e-15 {
                if start[i] < bmin[i] || start[i] > bmax[i] {
                    miss = true;
                    break;
                }
            } else {
                let ta = (bmin[i] - start[i]) / dir[i];
                let tb = (bmax[i] - start[i]) / dir[i];
                let (a, c) = if ta < tb { (ta, tb) } else { (tb, ta) };
                t_in = t_in.max(a);
                t_out = t_out.min(c);
            }
        }
        if miss || t_in > t_out {
            continue;
        }
        if t_out < 0.5 {
            lo = lo.max(t_out);
        } else if t_in > 0.5 {
            hi = hi.min(t_in);
        }
    }
    if !(lo < 0.5 && hi > 0.5) {
        return Err(CellFailure::SeedInCollision);
    }
    Ok(Seed { start: start + dir * lo, end: start + dir * hi })
}

/// Shape matrix `M` of the seed ellipsoid `(x−c)ᵀM(x−c) <= 1`.
#[derive(Debug, Clone, Copy)]
pub struct Ellipsoid {
    pub center: Vec3,
    pub m: Matrix3<f64>,
}

impl Ellipsoid {
    pub fn on_seed(seed: &Seed, lateral: f64) -> Self {
        let center = (seed.start + seed.end) * 0.5;
        let axis = seed.end - seed.start;
        let len = axis.norm();
        let a = (0.5 * len).max(1e-6);
        let b = lateral.max(1e-6);
        let u = if len > 0.0 { axis / len } else { Vec3::x() };
        let m = Matrix3::identity() / (b * b) + (u * u.transpose()) * (1.0 / (a * a) - 1.0 / (b * b));
        Ellipsoid { center, m }
    }

    pub fn metric(&self, x: &Vec3) -> f64 {
        let d = x - self.center;
        d.dot(&(self.m * d))
    }

    /// Point of the box minimizing the ellipsoid metric, and that metric value.
    pub fn nearest_in_box(&self, b: &Aabb) -> (Vec3, f64) {
        let (lo, hi) = (b.min(), b.max());
        let c = self.center;
        let m = &self.m;
        let mut best = (b.project(&c), f64::INFINITY);
        for code in 0..27usize {
            let pattern = [code % 3, (code / 3) % 3, code / 9];
            let mut x = c;
            let free: Vec<usize> = (0..3).filter(|&i| pattern[i] == 0).collect();
            for i in 0..3 {
                match pattern[i] {
                    1 => x[i] = lo[i],
                    2 => x[i] = hi[i],
                    _ => {}
                }
            }
            // Stationarity on the free coordinates: M_FF (x_F − c_F) = −M_FX (x_X − c_X).
            let rhs = |i: usize, x: &Vec3| -> f64 {
                -(0..3).filter(|j| pattern[*j] != 0).map(|j| m[(i, j)] * (x[j] - c[j])).sum::<f64>()
            };
            match free.len() {
                3 => {}
                2 => {
                    let (i, j) = (free[0], free[1]);
                    let mm = Matrix2::new(m[(i, i)], m[(i, j)], m[(j, i)], m[(j, j)]);
                    let r = Vector2::new(rhs(i, &x), rhs(j, &x));
                    match mm.lu().solve(&r) {
                        Some(s) => {
                            x[i] = c[i] + s[0];
                            x[j] = c[j] + s[1];
                        }
                        None => continue,
                    }
                }
                1 => {
                    let i = free[0];
                    x[i] = c[i] + rhs(i, &x) / m[(i, i)];
                }
                _ => {}
            }
            let slack = 1e-12 * (1.0 + b.half_extents().amax());
            if (0..3).any(|i| x[i] < lo[i] - slack || x[i] > hi[i] + slack) {
                continue;
            }
            let x = b.project(&x);
            let q = self.metric(&x);
            if q < best.1 {
                best = (x, q);
            }
        }
        best
    }
}

/// Closest pair between a segment and a box: (segment point, box point).
pub fn segment_box_closest(seed: &Seed, b: &Aabb) -> (Vec3, Vec3) {
    let f = |t: f64| {
        let p = seed.start + (seed.end - seed.start) * t;
        (p - b.project(&p)).norm_squared()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut t = 0.5 * (lo + hi);
    for cand in [0.0, 1.0] {
        if f(cand) < f(t) {
            t = cand;
        }
    }
    let p = seed.start + (seed.end - seed.start) * t;
    (p, b.project(&p))
}

/// Extends `poly` with cuts excluding every box in `boxes`, keeping `seed` inside.
/// `cuts` counts cuts already present (bound faces excluded).
pub fn extend_polytope(
    poly: &mut Polytope,
    cuts: &mut usize,
    seed: &Seed,
    boxes: &[Aabb],
    lateral: f64,
    max_cuts: usize,
) -> Result<(), CellFailure> {
    let ell = Ellipsoid::on_seed(seed, lateral);
    let mut order: Vec<(f64, usize, Vec3)> = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let (x, q) = ell.nearest_in_box(b);
            (q, i, x)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (q, i, x) in order {
        let b = &boxes[i];
        if poly.separated_by_face(b, EXCLUDE_MARGIN) {
            continue;
        }
        let mut cut = None;
        if q > 1.0 + 1e-9 {
            let n = ell.m * (x - ell.center);
            let norm = n.norm();
            if norm > 0.0 {
                let n = n / norm;
                let h = Halfspace { normal: n, offset: n.dot(&x) - CUT_GAP };
                if h.signed_distance(&seed.start) <= 0.0 && h.signed_distance(&seed.end) <= 0.0 {
                    cut = Some(h);
                }
            }
        }
        if cut.is_none() {
            let (p, y) = segment_box_closest(seed, b);
            let d = y - p;
            let dist = d.norm();
            if dist <= CUT_GAP {
                return Err(CellFailure::NoSeparatingPlane);
            }
            let n = d / dist;
            let h = Halfspace { normal: n, offset: n.dot(&y) - CUT_GAP };
            if h.signed_distance(&seed.start) > 0.0 || h.signed_distance(&seed.end) > 0.0 {
                return Err(CellFailure::NoSeparatingPlane);
            }
            cut = Some(h);
        }
        let h = cut.expect("set above");
        if h.min_over_box(b) <= h.offset {
            return Err(CellFailure::NoSeparatingPlane);
        }
        *cuts += 1;
        if *cuts > max_cuts {
            return Err(CellFailure::TooManyHalfspaces);
        }
        poly.push(h).map_err(|_| CellFailure::NoSeparatingPlane)?;
    }
    Ok(())
}

/// One-shot decomposition: bounds faces plus cuts for every box.
pub fn decompose(
    boxes: &[Aabb],
    seg_start: Vec3,
    seg_end: Vec3,
    bounds: &Aabb,
    lateral: f64,
    max_cuts: usize,
) -> Result<Polytope, CellFailure> {
    let seed = clip_seed(seg_start, seg_end, boxes, bounds)?;
    let mut poly = Polytope::from_aabb(bounds);
    let mut cuts = 0;
    let relevant: Vec<Aabb> = boxes.iter().filter(|b| b.intersects(bounds)).copied().collect();
    extend_polytope(&mut poly, &mut cuts, &seed, &relevant, lateral, max_cuts)?;
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(c: Vec3, h: f64) -> Aabb {
        Aabb::new(c, Vec3::repeat(h)).unwrap()
    }

    #[test]
    fn nearest_matches_dense_search() {
        let seed = Seed { start: Vec3::new(-1.0, 0.0, 0.0), end: Vec3::new(1.0, 0.3, 0.0) };
        let e = Ellipsoid::on_seed(&seed, 0.4);
        let b = Aabb::new(Vec3::new(0.7, 1.2, 0.3), Vec3::new(0.3, 0.2, 0.5)).unwrap();
        let (_, q) = e.nearest_in_box(&b);
        let mut best = f64::INFINITY;
        let n = 40;
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    let t = Vec3::new(i as f64, j as f64, k as f64) / n as f64;
                    let p = b.min() + (b.max() - b.min()).component_mul(&t);
                    best = best.min(e.metric(&p));
                }
            }
        }
        assert!(q <= best + 1e-12 && q > best - 0.05 * best);
    }

    #[test]
    fn free_space_gives_bounds() {
        let bounds = cube(Vec3::zeros(), 2.0);
        let p = decompose(&[], Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), &bounds, 0.5, 32).unwrap();
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn obstacle_beside_segment_is_excluded() {
        let bounds = cube(Vec3::zeros(), 2.0);
        let ob = cube(Vec3::new(0.2, 0.6, 0.0), 0.15);
        let (s, e) = (Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0));
        let p = decompose(&[ob], s, e, &bounds, 0.5, 32).unwrap();
        assert!(p.contains(&s) && p.contains(&e) && p.contains(&((s + e) * 0.5)));
        assert!(crate::world::polytope_disjoint_from_aabb(&p, &ob));
    }

    #[test]
    fn midpoint_in_obstacle_fails() {
        let bounds = cube(Vec3::zeros(), 2.0);
        let ob = cube(Vec3::zeros(), 0.1);
        let r = decompose(&[ob], Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), &bounds, 0.5, 32);
        assert_eq!(r, Err(CellFailure::SeedInCollision));
    }

    #[test]
    fn endpoint_obstacle_clips_seed() {
        let bounds = cube(Vec3::zeros(), 2.0);
        let ob = cube(Vec3::new(1.0, 0.0, 0.0), 0.2);
        let (s, e) = (Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0));
        let p = decompose(&[ob], s, e, &bounds, 0.5, 32).unwrap();
        assert!(p.contains(&s) && p.contains(&Vec3::zeros()) && !p.contains(&e));
        assert!(crate::world::polytope_disjoint_from_aabb(&p, &ob));
    }
}
