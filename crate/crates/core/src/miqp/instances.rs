//! Seeded random MIQP instances for solver comparisons and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BoundaryState, MiqpError, MiqpProblem};
use crate::bezier::DynamicLimits;
use crate::replan::baseline_dt;
use crate::stsfc::{CellFailure, Stsfc};
use crate::world::{Aabb, Halfspace, Polytope};
use crate::Vec3;

/// Random corridor problem with `n` pieces and `p` segments.
///
/// The segments form a perturbed polyline from a moving start to a rest goal
/// 2.5–5 m away. Each cell is the segment's box grown by a margin that
/// shrinks with the layer, cut by up to three random planes that keep the
/// segment inside; about one cell in twelve is marked failed.
pub fn random_instance(seed: u64, n: usize, p: usize) -> Result<MiqpProblem, MiqpError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = DynamicLimits { v_max: 3.0, a_max: 8.0, j_max: 40.0 };
    let unit = |rng: &mut ChaCha8Rng| {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.4..0.4));
        if v.norm() < 1e-3 { Vec3::x() } else { v.normalize() }
    };
    let start = Vec3::zeros();
    let goal = unit(&mut rng) * rng.random_range(2.5..5.0);
    let init = BoundaryState {
        position: start,
        velocity: unit(&mut rng) * rng.random_range(0.0..1.0),
        acceleration: unit(&mut rng) * rng.random_range(0.0..2.0),
    };
    let fin = BoundaryState::at_rest(goal);
    let mut way = vec![start];
    for k in 1..p {
        let base = start + (goal - start) * (k as f64 / p as f64);
        way.push(base + unit(&mut rng) * rng.random_range(0.0..1.0));
    }
    way.push(goal);
    let dt = baseline_dt(&init, &fin, &limits, n) * rng.random_range(2.5..3.5);
    let mut cells = Vec::with_capacity(n);
    for layer in 0..n {
        let mut row = Vec::with_capacity(p);
        for seg in 0..p {
            let (a, b) = (way[seg], way[seg + 1]);
            if rng.random_bool(1.0 / 12.0) {
                row.push(Err(CellFailure::SeedInCollision));
                continue;
            }
            let margin = (rng.random_range(0.3..1.0) - 0.05 * layer as f64).max(0.1);
            let bx = Aabb::from_min_max(a.inf(&b).add_scalar(-margin), a.sup(&b).add_scalar(margin))
                .expect("positive margin");
            let mut poly = Polytope::from_aabb(&bx);
            for _ in 0..rng.random_range(0..4) {
                let nrm = unit(&mut rng);
                let off = nrm.dot(&a).max(nrm.dot(&b)) + rng.random_range(0.05..0.6);
                poly.push(Halfspace { normal: nrm, offset: off }).expect("unit normal");
            }
            row.push(Ok(poly));
        }
        cells.push(row);
    }
    let corridor = Stsfc::new(cells, dt, 0.0).expect("rectangular by construction");
    MiqpProblem::new(corridor, init, fin, limits)
}

/// The acceptance-suite mix: N cycles through 4, 5, 6 and P through 1, 2, 3.
pub fn suite(count: usize, base_seed: u64) -> Vec<(u64, usize, usize)> {
    (0..count).map(|i| (base_seed + i as u64, 4 + i % 3, 1 + (i / 3) % 3)).collect()
}
