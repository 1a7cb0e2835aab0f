//! Time-layered safe flight corridors.
//!
//! Cell `(n, p)` is a convex polytope around global-path segment `p`, free of
//! the static map and of every tracked obstacle box grown by the reachable
//! radius of time layer `n`. Static geometry enters as the surface voxels of
//! the occupied-or-unknown set, each padded by half a voxel plus the drone
//! radius; the padded surface shell is closed, so excluding it excludes the
//! interior as well.

pub mod decomp;

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{minkowski_inflate, polytope_disjoint_from_aabb, voxels_for_radius, Aabb, Cell, Polytope, VoxelGrid, VoxelMask};
use crate::Vec3;
use decomp::{clip_seed, extend_polytope};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StsfcError {
    #[error("path needs at least two waypoints")]
    PathTooShort,
    #[error("layer count must be at least 1")]
    NoLayers,
    #[error("dt must be positive, got {0}")]
    BadDt(f64),
    #[error("corridor array is not rectangular")]
    NotRectangular,
    #[error("every corridor cell failed")]
    AllCellsFailed,
}

/// Why a corridor cell could not be built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellFailure {
    SeedInCollision,
    SeedOutOfBounds,
    TooManyHalfspaces,
    NoSeparatingPlane,
    VerificationFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SfcMode {
    /// Layer `n` uses radius `v·(n+1)·dt + ε`.
    #[default]
    Spatiotemporal,
    /// Every layer uses the full-horizon radius `v·N·dt + ε`.
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorridorParams {
    pub v_obs_max: f64,
    pub epsilon: f64,
    pub unknown_inflation: bool,
    pub max_halfspaces: usize,
    /// Lateral semi-axis of the seed ellipsoid.
    pub growth_step: f64,
    /// Margin added around each segment's bounding box to form the cell bounds.
    pub bounds_margin: f64,
    pub r_drone: f64,
    pub mode: SfcMode,
}

impl Default for CorridorParams {
    fn default() -> Self {
        CorridorParams {
            v_obs_max: 0.5,
            epsilon: 0.0,
            unknown_inflation: true,
            max_halfspaces: 64,
            growth_step: 0.5,
            bounds_margin: 1.5,
            r_drone: 0.1,
            mode: SfcMode::Spatiotemporal,
        }
    }
}

/// `v_obs_max · (n+1) · dt + ε`, using the layer end time.
pub fn reachable_radius(n: usize, dt: f64, params: &CorridorParams) -> f64 {
    params.v_obs_max * (n as f64 + 1.0) * dt + params.epsilon
}

/// Radius for layer `n` of `n_layers` under the configured mode.
pub fn layer_radius(n: usize, n_layers: usize, dt: f64, params: &CorridorParams) -> f64 {
    match params.mode {
        SfcMode::Spatiotemporal => reachable_radius(n, dt, params),
        SfcMode::WorstCase => reachable_radius(n_layers - 1, dt, params),
    }
}

/// Tracked boxes grown by layer `n`'s reachable radius.
pub fn inflate_layer_obstacles(tracks: &[Aabb], n: usize, dt: f64, params: &CorridorParams) -> Vec<Aabb> {
    let r = reachable_radius(n, dt, params);
    tracks.iter().map(|b| minkowski_inflate(b, r).expect("radius is non-negative")).collect()
}

/// Unknown voxels plus the L-infinity dilation of the unknown boundary by
/// `ceil(r_n / resolution)` voxels.
pub fn inflate_layer_unknown(grid: &VoxelGrid, n: usize, dt: f64, params: &CorridorParams) -> VoxelMask {
    let r = reachable_radius(n, dt, params);
    let k = voxels_for_radius(r, grid.resolution());
    let mut out = grid.unknown_boundary().dilate_linf(k);
    out.union_with(&grid.mask_of(Cell::Unknown));
    out
}

/// N × P corridor with per-cell outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Stsfc {
    cells: Vec<Vec<Result<Polytope, CellFailure>>>,
    pub dt: f64,
    pub t0: f64,
}

impl Stsfc {
    pub fn new(cells: Vec<Vec<Result<Polytope, CellFailure>>>, dt: f64, t0: f64) -> Result<Self, StsfcError> {
        if cells.is_empty() {
            return Err(StsfcError::NoLayers);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(StsfcError::BadDt(dt));
        }
        let p = cells[0].len();
        if p == 0 || cells.iter().any(|row| row.len() != p) {
            return Err(StsfcError::NotRectangular);
        }
        Ok(Stsfc { cells, dt, t0 })
    }

    pub fn n_layers(&self) -> usize {
        self.cells.len()
    }

    pub fn n_segments(&self) -> usize {
        self.cells[0].len()
    }

    pub fn cell(&self, n: usize, p: usize) -> Option<&Polytope> {
        self.cells.get(n)?.get(p)?.as_ref().ok()
    }

    pub fn outcome(&self, n: usize, p: usize) -> &Result<Polytope, CellFailure> {
        &self.cells[n][p]
    }

    pub fn successes(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_ok()).count()
    }

    /// Halfspace count per cell, `None` where the cell failed.
    pub fn diagnostics(&self) -> Vec<Vec<Result<usize, CellFailure>>> {
        self.cells.iter().map(|row| row.iter().map(|c| c.as_ref().map(|p| p.len()).map_err(|e| *e)).collect()).collect()
    }
}

type SegKey = [u64; 6];

fn seg_key(a: &Vec3, b: &Vec3) -> SegKey {
    [a.x.to_bits(), a.y.to_bits(), a.z.to_bits(), b.x.to_bits(), b.y.to_bits(), b.z.to_bits()]
}

#[derive(Debug, Clone, Copy)]
struct IndexBox {
    lo: [usize; 3],
    hi: [usize; 3],
}

impl IndexBox {
    fn contains(&self, v: [usize; 3]) -> bool {
        (0..3).all(|i| v[i] >= self.lo[i] && v[i] <= self.hi[i])
    }

    fn dims(&self) -> [usize; 3] {
        [self.hi[0] - self.lo[0] + 1, self.hi[1] - self.lo[1] + 1, self.hi[2] - self.lo[2] + 1]
    }

    fn local(&self, v: [usize; 3]) -> usize {
        let d = self.dims();
        ((v[0] - self.lo[0]) * d[1] + (v[1] - self.lo[1])) * d[2] + (v[2] - self.lo[2])
    }

    fn iter(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        (self.lo[0]..=self.hi[0])
            .flat_map(move |i| (self.lo[1]..=self.hi[1]).flat_map(move |j| (self.lo[2]..=self.hi[2]).map(move |k| [i, j, k])))
    }

    fn grown(&self, k: usize, dims: [usize; 3]) -> IndexBox {
        let mut out = *self;
        for i in 0..3 {
            out.lo[i] = self.lo[i].saturating_sub(k);
            out.hi[i] = (self.hi[i] + k).min(dims[i] - 1);
        }
        out
    }
}

/// Static part of one segment's cells, shared by all layers and factors.
#[derive(Debug, Clone)]
struct SegmentStatic {
    bounds: Aabb,
    region: IndexBox,
    static_boxes: Vec<Aabb>,
    base: Result<(Polytope, usize), CellFailure>,
    /// Chebyshev voxel distance to the unknown boundary over `halo_region`, capped.
    unknown_dist: Option<(IndexBox, Vec<u16>)>,
}

/// Shared read-only corridor inputs for one planning snapshot.
///
/// Base polytopes are cached per segment so that every time layer and every
/// time-allocation factor reuses the static decomposition.
pub struct CorridorContext<'a> {
    grid: &'a VoxelGrid,
    tracks: &'a [Aabb],
    params: CorridorParams,
    max_radius: f64,
    cache: Mutex<HashMap<SegKey, std::sync::Arc<SegmentStatic>>>,
}

impl<'a> CorridorContext<'a> {
    /// `max_radius` bounds the largest reachable radius that will be requested.
    pub fn new(grid: &'a VoxelGrid, tracks: &'a [Aabb], params: CorridorParams, max_radius: f64) -> Self {
        CorridorContext { grid, tracks, params, max_radius, cache: Mutex::new(HashMap::new()) }
    }

    pub fn params(&self) -> &CorridorParams {
        &self.params
    }

    pub fn tracks(&self) -> &[Aabb] {
        self.tracks
    }

    fn blocked_static(&self, v: [usize; 3]) -> bool {
        self.grid.get(v) != Cell::Free
    }

    fn surface_reach(&self) -> usize {
        voxels_for_radius(self.params.r_drone, self.grid.resolution()).max(1)
    }

    fn segment_static(&self, a: &Vec3, b: &Vec3) -> std::sync::Arc<SegmentStatic> {
        let key = seg_key(a, b);
        if let Some(s) = self.cache.lock().expect("cache lock").get(&key) {
            return s.clone();
        }
        let built = std::sync::Arc::new(self.build_segment_static(a, b));
        self.cache.lock().expect("cache lock").insert(key, built.clone());
        built
    }

    fn build_segment_static(&self, a: &Vec3, b: &Vec3) -> SegmentStatic {
        let grid = self.grid;
        let res = grid.resolution();
        let gb = grid.bounds();
        let lo = a.inf(b).add_scalar(-self.params.bounds_margin);
        let hi = a.sup(b).add_scalar(self.params.bounds_margin);
        let lo = lo.sup(&gb.min());
        let hi = hi.inf(&gb.max());
        let bounds = match Aabb::from_min_max(lo, hi) {
            Ok(bx) if (0..3).all(|i| hi[i] > lo[i]) => bx,
            _ => {
                return SegmentStatic {
                    bounds: gb,
                    region: IndexBox { lo: [0; 3], hi: [0; 3] },
                    static_boxes: vec![],
                    base: Err(CellFailure::SeedOutOfBounds),
                    unknown_dist: None,
                }
            }
        };
        let pad = 0.5 * res + self.params.r_drone;
        let region = index_box_for(grid, &bounds, pad);
        let s = self.surface_reach();
        let dims = grid.dims();
        let mut static_boxes = Vec::new();
        for v in region.iter() {
            if self.blocked_static(v) && is_surface(grid, v, s, |u| self.blocked_static(u)) {
                static_boxes.push(grid.voxel_box(v, self.params.r_drone));
            }
        }
        let base = clip_seed(*a, *b, &static_boxes, &bounds).and_then(|seed| {
            let mut poly = Polytope::from_aabb(&bounds);
            let mut cuts = 0;
            extend_polytope(&mut poly, &mut cuts, &seed, &static_boxes, self.params.growth_step, self.params.max_halfspaces)
                .map(|_| (poly, cuts))
        });
        let unknown_dist = if self.params.unknown_inflation {
            let kmax = voxels_for_radius(self.max_radius, res);
            let halo_region = region.grown(s + kmax, dims);
            local_unknown_distance(grid, halo_region, kmax)
        } else {
            None
        };
        SegmentStatic { bounds, region, static_boxes, base, unknown_dist }
    }

    /// Builds the N × P corridor for one `dt`.
    pub fn generate(&self, waypoints: &[Vec3], n_layers: usize, dt: f64, t0: f64) -> Result<Stsfc, StsfcError> {
        if waypoints.len() < 2 {
            return Err(StsfcError::PathTooShort);
        }
        if n_layers == 0 {
            return Err(StsfcError::NoLayers);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(StsfcError::BadDt(dt));
        }
        let segs: Vec<_> = waypoints.windows(2).map(|w| self.segment_static(&w[0], &w[1])).collect();
        let mut cells = Vec::with_capacity(n_layers);
        for n in 0..n_layers {
            let r = layer_radius(n, n_layers, dt, &self.params);
            let row = segs
                .iter()
                .zip(waypoints.windows(2))
                .map(|(st, w)| self.layer_cell(st, w[0], w[1], r))
                .collect();
            cells.push(row);
        }
        let out = Stsfc::new(cells, dt, t0)?;
        if out.successes() == 0 {
            return Err(StsfcError::AllCellsFailed);
        }
        Ok(out)
    }

    fn layer_cell(&self, st: &SegmentStatic, a: Vec3, b: Vec3, r: f64) -> Result<Polytope, CellFailure> {
        let (base, base_cuts) = st.base.as_ref().map_err(|e| *e)?;
        let pad = self.params.r_drone;
        let dynamic: Vec<Aabb> = self
            .tracks
            .iter()
            .map(|t| minkowski_inflate(t, r + pad).expect("non-negative"))
            .filter(|bx| bx.intersects(&st.bounds))
            .collect();
        let mut extra = dynamic.clone();
        if let Some((halo_region, dist)) = &st.unknown_dist {
            let k = voxels_for_radius(r, self.grid.resolution()).min(u16::MAX as usize - 1) as u16;
            let in_halo = |v: [usize; 3]| halo_region.contains(v) && dist[halo_region.local(v)] <= k;
            let blocked = |v: [usize; 3]| self.blocked_static(v) || in_halo(v);
            let s = self.surface_reach();
            for v in st.region.iter() {
                if !self.blocked_static(v) && in_halo(v) && is_surface(self.grid, v, s, blocked) {
                    extra.push(self.grid.voxel_box(v, pad));
                }
            }
        }
        if extra.is_empty() {
            return Ok(base.clone());
        }
        let mut all = st.static_boxes.clone();
        all.extend_from_slice(&extra);
        let seed = clip_seed(a, b, &all, &st.bounds)?;
        let mut poly = base.clone();
        let mut cuts = *base_cuts;
        extend_polytope(&mut poly, &mut cuts, &seed, &extra, self.params.growth_step, self.params.max_halfspaces)?;
        if dynamic.iter().any(|bx| !polytope_disjoint_from_aabb(&poly, bx)) {
            return Err(CellFailure::VerificationFailed);
        }
        Ok(poly)
    }
}

/// One-shot corridor generation for a single snapshot and `dt`.
pub fn generate(
    grid: &VoxelGrid,
    tracks: &[Aabb],
    waypoints: &[Vec3],
    n_layers: usize,
    dt: f64,
    t0: f64,
    params: &CorridorParams,
) -> Result<Stsfc, StsfcError> {
    let max_r = params.v_obs_max * n_layers as f64 * dt + params.epsilon;
    CorridorContext::new(grid, tracks, *params, max_r).generate(waypoints, n_layers, dt, t0)
}

fn index_box_for(grid: &VoxelGrid, b: &Aabb, pad: f64) -> IndexBox {
    let res = grid.resolution();
    let o = grid.origin();
    let dims = grid.dims();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for i in 0..3 {
        let a = ((b.min()[i] - pad - o[i]) / res).floor().max(0.0) as usize;
        let c = ((b.max()[i] + pad - o[i]) / res).floor().max(0.0) as usize;
        lo[i] = a.min(dims[i] - 1);
        hi[i] = c.min(dims[i] - 1);
    }
    IndexBox { lo, hi }
}

/// Blocked voxel with a non-blocked voxel (or the grid edge) within Chebyshev distance `s`.
fn is_surface(grid: &VoxelGrid, v: [usize; 3], s: usize, blocked: impl Fn([usize; 3]) -> bool) -> bool {
    let s = s as i64;
    for dx in -s..=s {
        for dy in -s..=s {
            for dz in -s..=s {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                match grid.offset(v, [dx, dy, dz]) {
                    None => return true,
                    Some(u) if !blocked(u) => return true,
                    _ => {}
                }
            }
        }
    }
    false
}

/// Chebyshev distance (in voxels) to the nearest unknown-boundary voxel within
/// `region`, capped at `kmax + 1`. `None` when the region has no boundary voxel.
fn local_unknown_distance(grid: &VoxelGrid, region: IndexBox, kmax: usize) -> Option<(IndexBox, Vec<u16>)> {
    let d = region.dims();
    let cap = (kmax + 1).min(u16::MAX as usize) as u16;
    let mut dist = vec![cap; d[0] * d[1] * d[2]];
    let mut queue = VecDeque::new();
    for v in region.iter() {
        if grid.get(v) == Cell::Unknown && grid.face_neighbors(v).any(|u| grid.get(u) == Cell::Free) {
            dist[region.local(v)] = 0;
            queue.push_back(v);
        }
    }
    if queue.is_empty() {
        return None;
    }
    while let Some(v) = queue.pop_front() {
        let dv = dist[region.local(v)];
        if dv + 1 >= cap {
            continue;
        }
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                for dz in -1i64..=1 {
                    if let Some(u) = grid.offset(v, [dx, dy, dz]) {
                        if region.contains(u) {
                            let l = region.local(u);
                            if dist[l] > dv + 1 {
                                dist[l] = dv + 1;
                                queue.push_back(u);
                            }
                        }
                    }
                }
            }
        }
    }
    Some((region, dist))
}
