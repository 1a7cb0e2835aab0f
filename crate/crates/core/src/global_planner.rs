//! Heat-weighted 26-connected A*, waypoint downsampling and subgoal walk-back.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::world::{Cell, VoxelGrid, VoxelIndex};
use crate::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("start is outside the grid")]
    StartOutOfBounds,
    #[error("start voxel is occupied")]
    StartOccupied,
    #[error("no voxel other than the start is reachable")]
    Enclosed,
    #[error("downsample target must be at least 1 segment")]
    BadTarget,
    #[error("path has no waypoints")]
    EmptyPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPath {
    pub waypoints: Vec<Vec3>,
    /// Sum of edge costs `d + w_heat·H(next)`.
    pub cost: f64,
    /// The goal voxel was not traversable or not reachable; the path ends at
    /// the reachable voxel nearest to it.
    pub partial: bool,
}

impl GlobalPath {
    pub fn segments(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

#[derive(Clone, Copy)]
struct Open {
    f: f64,
    idx: usize,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then(other.idx.cmp(&self.idx))
    }
}

fn neighbor_offsets() -> Vec<([i64; 3], f64)> {
    let mut out = Vec::with_capacity(26);
    for dx in -1i64..=1 {
        for dy in -1i64..=1 {
            for dz in -1i64..=1 {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                let l = ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                out.push(([dx, dy, dz], l));
            }
        }
    }
    out
}

/// Minimum-cost path from `start` to `goal` over Free and Unknown voxels.
///
/// Edge cost is the voxel-center distance plus `w_heat` times the heat of the
/// destination voxel center. Heat must be non-negative.
pub fn plan(grid: &VoxelGrid, heat: &dyn Fn(&Vec3) -> f64, start: &Vec3, goal: &Vec3, w_heat: f64) -> Result<GlobalPath, PlanError> {
    let s = grid.index_of(start).ok_or(PlanError::StartOutOfBounds)?;
    if grid.get(s) == Cell::Occupied {
        return Err(PlanError::StartOccupied);
    }
    let goal_idx = grid.index_of(goal).filter(|g| grid.get(*g) != Cell::Occupied);
    let partial_goal = goal_idx.is_none();
    let target = match goal_idx {
        Some(g) => grid.center(g),
        None => *goal,
    };
    let res = grid.resolution();
    let offs = neighbor_offsets();
    let n = grid.num_cells();
    let mut g_cost = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heat_cache = vec![f64::NAN; n];
    let s_lin = grid.linear(s);
    g_cost[s_lin] = 0.0;
    let h = |idx: VoxelIndex| (grid.center(idx) - target).norm();
    let mut open = BinaryHeap::new();
    open.push(Open { f: h(s), idx: s_lin });
    // Nearest-to-goal closed voxel, ties by lower cost then lower index.
    let mut nearest = (h(s), 0.0, s_lin);
    let mut reached = None;
    while let Some(Open { idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        let v = grid.from_linear(idx);
        if goal_idx == Some(v) {
            reached = Some(idx);
            break;
        }
        let dist = h(v);
        let key = (dist, g_cost[idx], idx);
        if key.0 < nearest.0 || (key.0 == nearest.0 && (key.1, key.2) < (nearest.1, nearest.2)) {
            nearest = key;
        }
        for (d, len) in &offs {
            let Some(u) = grid.offset(v, *d) else { continue };
            if grid.get(u) == Cell::Occupied {
                continue;
            }
            let ul = grid.linear(u);
            if closed[ul] {
                continue;
            }
            if heat_cache[ul].is_nan() {
                heat_cache[ul] = heat(&grid.center(u)).max(0.0);
            }
            let cand = g_cost[idx] + len * res + w_heat * heat_cache[ul];
            if cand < g_cost[ul] {
                g_cost[ul] = cand;
                parent[ul] = idx;
                open.push(Open { f: cand + h(u), idx: ul });
            }
        }
    }
    let (end, partial) = match reached {
        Some(e) => (e, false),
        None => (nearest.2, true),
    };
    if partial && end == s_lin && closed.iter().filter(|c| **c).count() == 1 {
        return Err(PlanError::Enclosed);
    }
    let mut chain = vec![end];
    while *chain.last().expect("non-empty") != s_lin {
        chain.push(parent[*chain.last().expect("non-empty")]);
    }
    chain.reverse();
    Ok(GlobalPath {
        waypoints: chain.iter().map(|l| grid.center(grid.from_linear(*l))).collect(),
        cost: g_cost[end],
        partial: partial || partial_goal,
    })
}

/// Subsequence with `min(target, segments)` segments whose interior points
/// sit at the waypoints nearest in arc length to uniform fractions of the
/// total length.
pub fn downsample(path: &GlobalPath, target_segments: usize) -> Result<GlobalPath, PlanError> {
    if target_segments < 1 {
        return Err(PlanError::BadTarget);
    }
    let w = &path.waypoints;
    if w.is_empty() {
        return Err(PlanError::EmptyPath);
    }
    if w.len() - 1 <= target_segments {
        return Ok(path.clone());
    }
    let mut arc = vec![0.0; w.len()];
    for i in 1..w.len() {
        arc[i] = arc[i - 1] + (w[i] - w[i - 1]).norm();
    }
    let total = arc[w.len() - 1];
    let last = w.len() - 1;
    let mut picked = vec![0usize];
    for k in 1..target_segments {
        let goal = total * k as f64 / target_segments as f64;
        let lo = picked[picked.len() - 1] + 1;
        let hi = last - (target_segments - k);
        let best = (lo..=hi)
            .min_by(|a, b| (arc[*a] - goal).abs().total_cmp(&(arc[*b] - goal).abs()).then(a.cmp(b)))
            .expect("non-empty range");
        picked.push(best);
    }
    picked.push(last);
    Ok(GlobalPath { waypoints: picked.iter().map(|i| w[*i]).collect(), cost: path.cost, partial: path.partial })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subgoal {
    pub point: Vec3,
    pub index: usize,
    /// The start itself lies in the inflated unknown region.
    pub degenerate: bool,
}

/// Whether `idx` is within `k` voxels (Chebyshev) of an Unknown voxel.
fn near_unknown(grid: &VoxelGrid, idx: VoxelIndex, k: i64) -> bool {
    if grid.get(idx) == Cell::Unknown {
        return true;
    }
    for dx in -k..=k {
        for dy in -k..=k {
            for dz in -k..=k {
                if let Some(v) = grid.offset(idx, [dx, dy, dz]) {
                    if grid.get(v) == Cell::Unknown {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Walks the path until the first waypoint inside the unknown region inflated
/// by `worst_case_radius` and returns the waypoint before it.
pub fn select_subgoal(path: &GlobalPath, grid: &VoxelGrid, worst_case_radius: f64) -> Result<Subgoal, PlanError> {
    let w = &path.waypoints;
    if w.is_empty() {
        return Err(PlanError::EmptyPath);
    }
    let k = crate::world::voxels_for_radius(worst_case_radius.max(0.0), grid.resolution()) as i64;
    for (i, p) in w.iter().enumerate() {
        let hit = match grid.index_of(p) {
            Some(idx) => near_unknown(grid, idx, k),
            None => false,
        };
        if hit {
            return Ok(if i == 0 {
                Subgoal { point: w[0], index: 0, degenerate: true }
            } else {
                Subgoal { point: w[i - 1], index: i - 1, degenerate: false }
            });
        }
    }
    Ok(Subgoal { point: w[w.len() - 1], index: w.len() - 1, degenerate: false })
}

/// Steps back from `from` to the last waypoint outside every box in `blocked`
/// (tracked obstacles already grown by the worst-case radius). Index 0 means
/// no usable waypoint remains.
pub fn walk_back_from_boxes(path: &GlobalPath, from: Subgoal, blocked: &[crate::world::Aabb]) -> Subgoal {
    if from.degenerate {
        return from;
    }
    let w = &path.waypoints;
    let mut i = from.index.min(w.len().saturating_sub(1));
    while i > 0 && blocked.iter().any(|b| b.contains(&w[i])) {
        i -= 1;
    }
    Subgoal { point: w[i], index: i, degenerate: i == 0 }
}
