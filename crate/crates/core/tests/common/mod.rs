//! Independent oracles shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stplan::bezier::CubicPiece;
use stplan::world::{Cell, VoxelGrid, VoxelIndex};
use stplan::Vec3;

/// 26-neighbour offsets with their voxel-unit lengths.
fn offsets() -> Vec<([i64; 3], f64)> {
    let mut out = Vec::new();
    for dx in -1i64..=1 {
        for dy in -1i64..=1 {
            for dz in -1i64..=1 {
                if (dx, dy, dz) != (0, 0, 0) {
                    out.push(([dx, dy, dz], ((dx * dx + dy * dy + dz * dz) as f64).sqrt()));
                }
            }
        }
    }
    out
}

fn edge(grid: &VoxelGrid, heat: &[f64], u: VoxelIndex, len: f64, w_heat: f64) -> f64 {
    len * grid.resolution() + w_heat * heat[grid.linear(u)]
}

/// Minimum path cost by depth-first enumeration of every simple path,
/// cutting branches whose partial cost already reaches the best total.
/// Costs are positive so the cut never discards an optimum.
pub fn exhaustive_cost(grid: &VoxelGrid, heat: &[f64], s: VoxelIndex, g: VoxelIndex, w_heat: f64) -> Option<f64> {
    let offs = offsets();
    let mut on_path = vec![false; grid.num_cells()];
    let mut best = f64::INFINITY;
    fn dfs(
        grid: &VoxelGrid,
        heat: &[f64],
        offs: &[([i64; 3], f64)],
        v: VoxelIndex,
        g: VoxelIndex,
        cost: f64,
        w_heat: f64,
        on_path: &mut [bool],
        best: &mut f64,
    ) {
        if cost >= *best {
            return;
        }
        if v == g {
            *best = cost;
            return;
        }
        for (d, len) in offs {
            let Some(u) = grid.offset(v, *d) else { continue };
            let ul = grid.linear(u);
            if on_path[ul] || grid.get(u) == Cell::Occupied {
                continue;
            }
            on_path[ul] = true;
            dfs(grid, heat, offs, u, g, cost + edge(grid, heat, u, *len, w_heat), w_heat, on_path, best);
            on_path[ul] = false;
        }
    }
    on_path[grid.linear(s)] = true;
    dfs(grid, heat, &offs, s, g, 0.0, w_heat, &mut on_path, &mut best);
    best.is_finite().then_some(best)
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

/// Plain Dijkstra over the same graph.
pub fn dijkstra_cost(grid: &VoxelGrid, heat: &[f64], s: VoxelIndex, g: VoxelIndex, w_heat: f64) -> Option<f64> {
    let offs = offsets();
    let mut dist = vec![f64::INFINITY; grid.num_cells()];
    let mut heap = BinaryHeap::new();
    dist[grid.linear(s)] = 0.0;
    heap.push(Item(0.0, grid.linear(s)));
    while let Some(Item(d, l)) = heap.pop() {
        if d > dist[l] {
            continue;
        }
        let v = grid.from_linear(l);
        if v == g {
            return Some(d);
        }
        for (o, len) in &offs {
            let Some(u) = grid.offset(v, *o) else { continue };
            if grid.get(u) == Cell::Occupied {
                continue;
            }
            let ul = grid.linear(u);
            let nd = d + edge(grid, heat, u, *len, w_heat);
            if nd < dist[ul] {
                dist[ul] = nd;
                heap.push(Item(nd, ul));
            }
        }
    }
    None
}

pub fn random_piece(rng: &mut ChaCha8Rng) -> CubicPiece {
    let mut v = || Vec3::from_fn(|_, _| rng.random_range(-2.0..2.0));
    let (a, b, c, d) = (v(), v(), v(), v());
    CubicPiece::new(a, b, c, d, rng.random_range(0.05..3.0)).unwrap()
}

/// Largest amount by which `x` exceeds the support function of `pts` over
/// the directions `dirs`; zero or below for points inside the hull.
pub fn hull_excess(pts: &[Vec3], x: &Vec3, dirs: &[Vec3]) -> f64 {
    dirs.iter()
        .map(|n| n.dot(x) - pts.iter().map(|p| n.dot(p)).fold(f64::NEG_INFINITY, f64::max))
        .fold(0.0, f64::max)
}

pub fn bernstein(deg: usize, s: f64) -> Vec<f64> {
    let binom = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    (0..=deg).map(|i| binom(deg, i) * s.powi(i as i32) * (1.0 - s).powi((deg - i) as i32)).collect()
}

pub fn unit_dirs(rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = (0..3).flat_map(|i| [Vec3::ith(i, 1.0), Vec3::ith(i, -1.0)]).collect();
    while out.len() < count {
        let v = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        if v.norm() > 1e-3 {
            out.push(v.normalize());
        }
    }
    out
}

/// Smallest eigenvalue relative to the largest magnitude (0 for the zero matrix).
pub fn min_rel_eigen(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let scale = e.eigenvalues.amax().max(1e-300);
    e.eigenvalues.min() / scale
}
