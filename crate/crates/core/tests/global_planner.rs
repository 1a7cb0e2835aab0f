mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stplan::global_planner::{downsample, plan, select_subgoal, walk_back_from_boxes, GlobalPath};
use stplan::world::{Aabb, Cell, VoxelGrid};
use stplan::Vec3;

fn random_grid(rng: &mut ChaCha8Rng, d: [usize; 3], p_occ: f64) -> (VoxelGrid, Vec<f64>) {
    let mut g = VoxelGrid::new(Vec3::zeros(), 0.5, d, Cell::Free).unwrap();
    for l in 0..g.num_cells() {
        if rng.random_bool(p_occ) {
            g.set_linear(l, Cell::Occupied);
        }
    }
    let heat = (0..g.num_cells()).map(|_| rng.random_range(0.0..1.0)).collect();
    (g, heat)
}

fn heat_fn<'a>(g: &'a VoxelGrid, heat: &'a [f64]) -> impl Fn(&Vec3) -> f64 + 'a {
    move |q| heat[g.linear(g.index_of(q).unwrap())]
}

#[test]
fn astar_matches_exhaustive_enumeration_on_small_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..120 {
        let d = [rng.random_range(2..=6), rng.random_range(2..=6), 1];
        let (mut g, heat) = random_grid(&mut rng, d, 0.2);
        let s = [0, 0, 0];
        let t = [d[0] - 1, d[1] - 1, 0];
        g.set(s, Cell::Free).unwrap();
        g.set(t, Cell::Free).unwrap();
        let w = rng.random_range(0.0..3.0);
        let oracle = common::exhaustive_cost(&g, &heat, s, t, w);
        let got = plan(&g, &heat_fn(&g, &heat), &g.center(s), &g.center(t), w);
        match oracle {
            Some(c) => {
                let p = got.unwrap();
                assert!(!p.partial);
                assert!((p.cost - c).abs() <= 1e-9, "A* {} vs enumeration {}", p.cost, c);
                checked += 1;
            }
            None => assert!(got.map(|p| p.partial).unwrap_or(true)),
        }
    }
    assert!(checked > 60);
}

#[test]
fn astar_matches_dijkstra_on_empty_3d_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..40 {
        let d = [rng.random_range(2..10), rng.random_range(2..10), rng.random_range(2..8)];
        let g = VoxelGrid::new(Vec3::zeros(), 0.2, d, Cell::Free).unwrap();
        let heat: Vec<f64> = if i % 2 == 0 { vec![0.0; g.num_cells()] } else { (0..g.num_cells()).map(|_| rng.random_range(0.0..1.0)).collect() };
        let s = [rng.random_range(0..d[0]), rng.random_range(0..d[1]), rng.random_range(0..d[2])];
        let t = [rng.random_range(0..d[0]), rng.random_range(0..d[1]), rng.random_range(0..d[2])];
        let oracle = common::dijkstra_cost(&g, &heat, s, t, 2.0).unwrap();
        let p = plan(&g, &heat_fn(&g, &heat), &g.center(s), &g.center(t), 2.0).unwrap();
        assert!((p.cost - oracle).abs() <= 1e-9, "{} vs {}", p.cost, oracle);
    }
}

#[test]
fn unreachable_goal_gives_partial_path_to_nearest() {
    let mut g = VoxelGrid::new(Vec3::zeros(), 1.0, [7, 3, 1], Cell::Free).unwrap();
    for y in 0..3 {
        g.set([3, y, 0], Cell::Occupied).unwrap();
    }
    let p = plan(&g, &|_| 0.0, &Vec3::new(0.5, 1.5, 0.5), &Vec3::new(6.5, 1.5, 0.5), 1.0).unwrap();
    assert!(p.partial);
    assert_eq!(g.index_of(p.waypoints.last().unwrap()).unwrap(), [2, 1, 0]);
}

#[test]
fn subgoal_walks_back_from_inflated_unknown() {
    // Path along x; unknown starts at x = 5 and the radius reaches two voxels back.
    let mut g = VoxelGrid::new(Vec3::zeros(), 1.0, [10, 1, 1], Cell::Free).unwrap();
    for x in 5..10 {
        g.set([x, 0, 0], Cell::Unknown).unwrap();
    }
    let path = GlobalPath { waypoints: (0..8).map(|x| g.center([x, 0, 0])).collect(), cost: 0.0, partial: false };
    let sub = select_subgoal(&path, &g, 2.0).unwrap();
    // Brute force: the first waypoint within two voxels of Unknown is index 3.
    let first_hit = (0..8).find(|&i| (5..10).any(|u: usize| (u as i64 - i as i64).abs() <= 2)).unwrap();
    assert_eq!(first_hit, 3);
    assert_eq!(sub.index, 2);
    assert!(!sub.degenerate);
    let sub0 = select_subgoal(&path, &g, 6.0).unwrap();
    assert!(sub0.degenerate);
}

#[test]
fn walk_back_leaves_worst_case_boxes() {
    let path = GlobalPath { waypoints: (0..6).map(|x| Vec3::new(x as f64, 0.0, 0.0)).collect(), cost: 0.0, partial: false };
    let g = VoxelGrid::new(Vec3::repeat(-0.5), 1.0, [6, 1, 1], Cell::Free).unwrap();
    let sub = select_subgoal(&path, &g, 0.0).unwrap();
    assert_eq!(sub.index, 5);
    let blocked = [Aabb::new(Vec3::new(4.5, 0.0, 0.0), Vec3::new(1.2, 1.0, 1.0)).unwrap()];
    let back = walk_back_from_boxes(&path, sub, &blocked);
    assert_eq!(back.index, 3);
    let all = [Aabb::new(Vec3::new(3.0, 0.0, 0.0), Vec3::repeat(3.0)).unwrap()];
    assert!(walk_back_from_boxes(&path, sub, &all).degenerate);
}

fn arc(w: &[Vec3]) -> Vec<f64> {
    let mut out = vec![0.0];
    for p in w.windows(2) {
        out.push(out.last().unwrap() + (p[1] - p[0]).norm());
    }
    out
}

proptest! {
    #[test]
    fn downsample_keeps_ends_and_order(n in 2usize..40, target in 1usize..8, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Vec3::zeros();
        let mut w = vec![p];
        for _ in 1..n {
            p += Vec3::from_fn(|_, _| rng.random_range(0.1..1.0));
            w.push(p);
        }
        let path = GlobalPath { waypoints: w.clone(), cost: 0.0, partial: false };
        let d = downsample(&path, target).unwrap();
        prop_assert_eq!(d.segments(), target.min(n - 1));
        prop_assert_eq!(d.waypoints[0], w[0]);
        prop_assert_eq!(*d.waypoints.last().unwrap(), w[n - 1]);
        let idx: Vec<usize> = d.waypoints.iter().map(|q| w.iter().position(|x| x == q).unwrap()).collect();
        prop_assert!(idx.windows(2).all(|k| k[0] < k[1]));
        if target < n - 1 {
            // Each interior pick is the nearest admissible waypoint in arc length.
            let a = arc(&w);
            let total = a[n - 1];
            for k in 1..target {
                let goal = total * k as f64 / target as f64;
                let (lo, hi) = (idx[k - 1] + 1, n - 1 - (target - k));
                let best = (lo..=hi).map(|i| (a[i] - goal).abs()).fold(f64::INFINITY, f64::min);
                prop_assert!(((a[idx[k]] - goal).abs() - best).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn astar_path_is_connected_and_free(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut g, heat) = random_grid(&mut rng, [8, 8, 3], 0.25);
        g.set([0, 0, 0], Cell::Free).unwrap();
        let goal = g.center([7, 7, 2]);
        let h = heat_fn(&g, &heat);
        if let Ok(p) = plan(&g, &h, &g.center([0, 0, 0]), &goal, 1.0) {
            for q in &p.waypoints {
                prop_assert_ne!(g.get(g.index_of(q).unwrap()), Cell::Occupied);
            }
            for s in p.waypoints.windows(2) {
                prop_assert!((s[1] - s[0]).amax() <= g.resolution() + 1e-12);
            }
        }
    }
}
