use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stplan::heatmap::{combined_heat, dynamic_heat, static_heat, HeatParams, ObstaclePrediction, StaticHeat};
use stplan::world::{Cell, VoxelGrid};
use stplan::Vec3;

/// Scans every voxel of the grid for sources, with no neighborhood window.
fn static_oracle(g: &VoxelGrid, p: &HeatParams, q: &Vec3) -> f64 {
    let mut best: f64 = 0.0;
    for l in 0..g.num_cells() {
        let v = g.from_linear(l);
        if g.get(v) != Cell::Occupied {
            continue;
        }
        let exposed = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
            .iter()
            .any(|d| g.offset(v, *d).is_some_and(|n| g.get(n) == Cell::Free));
        if !exposed {
            continue;
        }
        let d = (q - g.center(v)).norm();
        if d <= p.r_s {
            best = best.max(p.alpha_s * (1.0 - d / p.r_s).powf(p.p_s));
        }
    }
    best.min(p.h_max)
}

fn random_grid(rng: &mut ChaCha8Rng) -> VoxelGrid {
    let d = [rng.random_range(3..9), rng.random_range(3..9), rng.random_range(1..5)];
    let mut g = VoxelGrid::new(Vec3::zeros(), 0.25, d, Cell::Free).unwrap();
    for l in 0..g.num_cells() {
        let r: f64 = rng.random();
        g.set_linear(l, if r < 0.3 { Cell::Occupied } else if r < 0.4 { Cell::Unknown } else { Cell::Free });
    }
    g
}

#[test]
fn static_heat_matches_full_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..60 {
        let g = random_grid(&mut rng);
        let p = HeatParams { r_s: rng.random_range(0.1..1.0), p_s: rng.random_range(1.0..4.0), ..HeatParams::default() };
        let cached = StaticHeat::new(&g, p);
        let hi = g.bounds().max();
        for _ in 0..50 {
            let q = Vec3::from_fn(|i, _| rng.random_range(0.0..hi[i] - 1e-9));
            let want = static_oracle(&g, &p, &q);
            assert!((cached.query(&q).unwrap() - want).abs() <= 1e-12);
            assert!((static_heat(&g, &p, &q).unwrap() - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn static_heat_rejects_outside_queries() {
    let g = VoxelGrid::new(Vec3::zeros(), 1.0, [2, 2, 2], Cell::Free).unwrap();
    assert!(static_heat(&g, &HeatParams::default(), &Vec3::new(-0.5, 0.5, 0.5)).is_err());
}

#[test]
fn buried_voxels_emit_no_heat() {
    // A solid 5x5x5 block: only its shell is exposed, so the center voxel is
    // farther than R_s from every source and stays cold.
    let mut g = VoxelGrid::new(Vec3::zeros(), 1.0, [7, 7, 7], Cell::Free).unwrap();
    for x in 1..6 {
        for y in 1..6 {
            for z in 1..6 {
                g.set([x, y, z], Cell::Occupied).unwrap();
            }
        }
    }
    let p = HeatParams { r_s: 1.5, ..HeatParams::default() };
    assert_eq!(static_heat(&g, &p, &g.center([3, 3, 3])).unwrap(), 0.0);
    assert_eq!(static_heat(&g, &p, &g.center([1, 3, 3])).unwrap(), p.alpha_s);
}

fn tube_oracle(pred: &ObstaclePrediction, p: &HeatParams, q: &Vec3) -> f64 {
    let r0 = pred.half_extents.amax() + p.r_margin;
    let rd = r0 + p.v_obs_max * p.t_h;
    let d0 = (q - pred.current_center).norm();
    let base = if d0 <= rd { p.alpha_d0 * (1.0 - d0 / rd).powf(p.p_d) } else { 0.0 };
    let tube = pred
        .samples()
        .iter()
        .map(|(t, c)| {
            let r = r0 + p.gamma_k * t;
            (-t / (p.tau_ratio * p.t_h)).exp() * (1.0 - (q - c).norm() / r).max(0.0).powf(p.q_d)
        })
        .fold(0.0, f64::max);
    base + p.alpha_d1 * tube
}

fn random_prediction(rng: &mut ChaCha8Rng, p: &HeatParams) -> ObstaclePrediction {
    let c = Vec3::from_fn(|_, _| rng.random_range(-3.0..3.0));
    let v = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let samples = (0..p.m_tube).map(|j| {
        let t = p.t_h * j as f64 / (p.m_tube - 1) as f64;
        (t, c + v * t)
    });
    ObstaclePrediction::new(c, Vec3::from_fn(|_, _| rng.random_range(0.1..0.6)), samples.collect()).unwrap()
}

#[test]
fn dynamic_heat_is_max_over_obstacles_of_base_plus_tube() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let p = HeatParams::default();
    for _ in 0..300 {
        let preds: Vec<_> = (0..rng.random_range(1..4)).map(|_| random_prediction(&mut rng, &p)).collect();
        let q = Vec3::from_fn(|_, _| rng.random_range(-4.0..4.0));
        let want = preds.iter().map(|k| tube_oracle(k, &p, &q)).fold(0.0, f64::max);
        assert!((dynamic_heat(&preds, &p, &q) - want).abs() <= 1e-12);
    }
}

#[test]
fn dynamic_heat_at_current_center_and_one_time_constant() {
    let p = HeatParams::default();
    let c = Vec3::new(1.0, 2.0, 3.0);
    let still = ObstaclePrediction::new(c, Vec3::repeat(0.3), vec![(0.0, c)]).unwrap();
    assert!((dynamic_heat(&[still], &p, &c) - 3.0).abs() <= 1e-12);
    let tau = p.tau_ratio * p.t_h;
    let far = Vec3::new(100.0, 0.0, 0.0);
    let late = ObstaclePrediction::new(c, Vec3::repeat(0.3), vec![(tau, far)]).unwrap();
    assert!((dynamic_heat(&[late], &p, &far) - p.alpha_d1 * (-1.0f64).exp()).abs() <= 1e-12);
    assert_eq!(dynamic_heat(&[], &p, &c), 0.0);
}

proptest! {
    #[test]
    fn combined_heat_is_capped_max(s in 0.0f64..100.0, d in 0.0f64..100.0, h in 0.1f64..80.0) {
        let c = combined_heat(s, d, h);
        prop_assert!(c >= 0.0 && c <= h);
        prop_assert_eq!(c, s.max(d).min(h));
    }

    #[test]
    fn single_source_heat_decreases_along_rays(dir in prop::array::uniform3(-1.0f64..1.0), steps in 2usize..30) {
        prop_assume!(Vec3::from(dir).norm() > 1e-3);
        let mut g = VoxelGrid::new(Vec3::zeros(), 0.5, [9, 9, 9], Cell::Free).unwrap();
        g.set([4, 4, 4], Cell::Occupied).unwrap();
        let p = HeatParams { r_s: 1.8, ..HeatParams::default() };
        let c = g.center([4, 4, 4]);
        let u = Vec3::from(dir).normalize();
        let mut prev = f64::INFINITY;
        for k in 0..=steps {
            let q = c + u * (2.0 * k as f64 / steps as f64);
            let h = static_heat(&g, &p, &q).unwrap();
            prop_assert!(h <= prev + 1e-15);
            prev = h;
        }
    }

    #[test]
    fn coincident_sources_do_not_add(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = HeatParams::default();
        let k = random_prediction(&mut rng, &p);
        let q = Vec3::from_fn(|_, _| rng.random_range(-4.0..4.0));
        let one = dynamic_heat(std::slice::from_ref(&k), &p, &q);
        prop_assert_eq!(one, dynamic_heat(&[k.clone(), k], &p, &q));
    }
}
