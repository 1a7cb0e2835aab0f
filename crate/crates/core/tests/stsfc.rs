use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stplan::stsfc::{generate, layer_radius, reachable_radius, CorridorParams, SfcMode};
use stplan::world::{minkowski_inflate, Aabb, Cell, VoxelGrid};
use stplan::Vec3;

struct Scene {
    grid: VoxelGrid,
    tracks: Vec<Aabb>,
    path: Vec<Vec3>,
}

/// Random pillars and unknown patches off a straight free lane along x, with
/// moving boxes placed beside the lane.
fn scene(rng: &mut ChaCha8Rng) -> Scene {
    let mut grid = VoxelGrid::new(Vec3::zeros(), 0.25, [40, 24, 12], Cell::Free).unwrap();
    let lane = |y: usize, z: usize| (10..14).contains(&y) && (4..8).contains(&z);
    for _ in 0..rng.random_range(3..9) {
        let (x, y) = (rng.random_range(0..40), rng.random_range(0..24));
        let kind = if rng.random_bool(0.7) { Cell::Occupied } else { Cell::Unknown };
        for z in 0..12 {
            if !lane(y, z) {
                grid.set([x, y, z], kind).unwrap();
            }
        }
    }
    let tracks = (0..rng.random_range(0..3))
        .map(|_| {
            let c = Vec3::new(rng.random_range(1.0..9.0), if rng.random_bool(0.5) { 1.0 } else { 5.0 }, 1.5);
            Aabb::new(c, Vec3::repeat(rng.random_range(0.1..0.3))).unwrap()
        })
        .collect();
    let path = (0..4).map(|i| Vec3::new(0.5 + 3.0 * i as f64, 3.0, 1.5)).collect();
    Scene { grid, tracks, path }
}

fn params(rng: &mut ChaCha8Rng, mode: SfcMode) -> CorridorParams {
    CorridorParams { v_obs_max: rng.random_range(0.0..0.8), epsilon: rng.random_range(0.0..0.1), mode, ..CorridorParams::default() }
}

#[test]
fn cells_avoid_occupied_unknown_and_inflated_tracks() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0;
    for case in 0..30 {
        let sc = scene(&mut rng);
        let mode = if case % 2 == 0 { SfcMode::Spatiotemporal } else { SfcMode::WorstCase };
        let p = params(&mut rng, mode);
        let (n_layers, dt) = (4, rng.random_range(0.2..0.6));
        let Ok(c) = generate(&sc.grid, &sc.tracks, &sc.path, n_layers, dt, 0.0, &p) else { continue };
        assert_eq!(c.n_layers(), n_layers);
        assert_eq!(c.n_segments(), sc.path.len() - 1);
        for n in 0..n_layers {
            let r = layer_radius(n, n_layers, dt, &p);
            let grown: Vec<Aabb> = sc.tracks.iter().map(|b| minkowski_inflate(b, r + p.r_drone).unwrap()).collect();
            for s in 0..c.n_segments() {
                let Some(poly) = c.cell(n, s) else { continue };
                checked += 1;
                let mid = (sc.path[s] + sc.path[s + 1]) * 0.5;
                assert!(poly.contains_tol(&mid, 1e-9), "layer {n} segment {s} misses its seed midpoint");
                let bounds = sc.grid.bounds();
                for _ in 0..400 {
                    let x = Vec3::from_fn(|i, _| rng.random_range(bounds.min()[i]..bounds.max()[i]));
                    if !poly.contains(&x) {
                        continue;
                    }
                    assert_eq!(sc.grid.classify(&x), stplan::world::Occupancy::Free, "cell point in a blocked voxel");
                    for g in &grown {
                        assert!(!g.contains(&x), "cell point inside an inflated track");
                    }
                }
            }
        }
    }
    assert!(checked > 40, "{checked}");
}

#[test]
fn worst_case_cells_never_admit_more_than_the_last_spatiotemporal_layer_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..20 {
        let sc = scene(&mut rng);
        let p = params(&mut rng, SfcMode::WorstCase);
        let dt = 0.4;
        let Ok(c) = generate(&sc.grid, &sc.tracks, &sc.path, 3, dt, 0.0, &p) else { continue };
        let r = reachable_radius(2, dt, &p);
        let grown: Vec<Aabb> = sc.tracks.iter().map(|b| minkowski_inflate(b, r + p.r_drone).unwrap()).collect();
        for s in 0..c.n_segments() {
            let Some(poly) = c.cell(0, s) else { continue };
            for g in &grown {
                assert!(stplan::world::polytope_disjoint_from_aabb(poly, g));
            }
        }
    }
}

#[test]
fn rejects_degenerate_inputs() {
    let g = VoxelGrid::new(Vec3::zeros(), 0.5, [4, 4, 4], Cell::Free).unwrap();
    let p = CorridorParams::default();
    let a = Vec3::repeat(0.5);
    assert!(generate(&g, &[], &[a], 2, 0.5, 0.0, &p).is_err());
    assert!(generate(&g, &[], &[a, a * 2.0], 0, 0.5, 0.0, &p).is_err());
    assert!(generate(&g, &[], &[a, a * 2.0], 2, 0.0, 0.0, &p).is_err());
    assert!(generate(&g, &[], &[a, a * 2.0], 2, 0.5, 0.0, &p).is_ok());
}

proptest! {
    #[test]
    fn radii_grow_with_layer_and_worst_case_dominates(v in 0.0f64..3.0, eps in 0.0f64..0.5, dt in 0.01f64..2.0, n_layers in 1usize..10) {
        let st = CorridorParams { v_obs_max: v, epsilon: eps, ..CorridorParams::default() };
        let wc = CorridorParams { mode: SfcMode::WorstCase, ..st };
        for n in 0..n_layers {
            prop_assert!((reachable_radius(n, dt, &st) - (v * (n + 1) as f64 * dt + eps)).abs() <= 1e-12);
            prop_assert!(layer_radius(n, n_layers, dt, &wc) >= layer_radius(n, n_layers, dt, &st));
            prop_assert_eq!(layer_radius(n, n_layers, dt, &wc), reachable_radius(n_layers - 1, dt, &st));
            if n > 0 {
                prop_assert!(layer_radius(n, n_layers, dt, &st) >= layer_radius(n - 1, n_layers, dt, &st));
            }
        }
    }
}
