//! Voxel occupancy grid, axis-aligned boxes, halfspace polytopes and inflation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::qp::{self, QpError};
use crate::Vec3;

/// Membership tolerance for polytope tests, in metres.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("resolution must be positive and finite, got {0}")]
    BadResolution(f64),
    #[error("grid dimensions must be at least 1, got {0:?}")]
    BadDims([usize; 3]),
    #[error("half extents must be strictly positive, got {0:?}")]
    BadHalfExtents([f64; 3]),
    #[error("radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("halfspace {0} has a zero or non-finite normal")]
    DegenerateNormal(usize),
    #[error("voxel index {0:?} is out of bounds")]
    IndexOutOfBounds([usize; 3]),
    #[error("grid parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Free,
    Occupied,
    Unknown,
}

impl Cell {
    pub fn to_char(self) -> char {
        match self {
            Cell::Free => '.',
            Cell::Occupied => '#',
            Cell::Unknown => '?',
        }
    }

    pub fn from_char(c: char) -> Option<Cell> {
        match c {
            '.' => Some(Cell::Free),
            '#' => Some(Cell::Occupied),
            '?' => Some(Cell::Unknown),
            _ => None,
        }
    }
}

/// Result of a world-point lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Occupancy {
    Free,
    Occupied,
    Unknown,
    OutOfBounds,
}

impl From<Cell> for Occupancy {
    fn from(c: Cell) -> Self {
        match c {
            Cell::Free => Occupancy::Free,
            Cell::Occupied => Occupancy::Occupied,
            Cell::Unknown => Occupancy::Unknown,
        }
    }
}

pub type VoxelIndex = [usize; 3];

/// Axis-aligned box given by center and strictly positive half extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    center: Vec3,
    half_extents: Vec3,
}

impl Aabb {
    pub fn new(center: Vec3, half_extents: Vec3) -> Result<Self, WorldError> {
        if half_extents.iter().any(|h| !(h.is_finite() && *h > 0.0)) || center.iter().any(|c| !c.is_finite()) {
            return Err(WorldError::BadHalfExtents([half_extents.x, half_extents.y, half_extents.z]));
        }
        Ok(Aabb { center, half_extents })
    }

    pub fn from_min_max(min: Vec3, max: Vec3) -> Result<Self, WorldError> {
        Aabb::new((min + max) * 0.5, (max - min) * 0.5)
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn half_extents(&self) -> Vec3 {
        self.half_extents
    }

    pub fn min(&self) -> Vec3 {
        self.center - self.half_extents
    }

    pub fn max(&self) -> Vec3 {
        self.center + self.half_extents
    }

    /// Closed-box membership.
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| (p[i] - self.center[i]).abs() <= self.half_extents[i])
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|i| (self.center[i] - other.center[i]).abs() <= self.half_extents[i] + other.half_extents[i])
    }

    /// Euclidean projection of `p` onto the box.
    pub fn project(&self, p: &Vec3) -> Vec3 {
        let (lo, hi) = (self.min(), self.max());
        Vec3::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y), p.z.clamp(lo.z, hi.z))
    }

    pub fn intersection(&self, other: &Aabb) -> Option<Aabb> {
        let lo = self.min().sup(&other.min());
        let hi = self.max().inf(&other.max());
        if (0..3).all(|i| hi[i] > lo[i]) {
            Aabb::from_min_max(lo, hi).ok()
        } else {
            None
        }
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    /// The six faces as outward halfspaces.
    pub fn halfspaces(&self) -> Vec<Halfspace> {
        let (lo, hi) = (self.min(), self.max());
        let mut out = Vec::with_capacity(6);
        for i in 0..3 {
            let mut n = Vec3::zeros();
            n[i] = 1.0;
            out.push(Halfspace { normal: n, offset: hi[i] });
            out.push(Halfspace { normal: -n, offset: -lo[i] });
        }
        out
    }
}

/// Minkowski sum of a box with the L-infinity ball of radius `r`.
pub fn minkowski_inflate(b: &Aabb, r: f64) -> Result<Aabb, WorldError> {
    if !(r >= 0.0) {
        return Err(WorldError::NegativeRadius(r));
    }
    Ok(Aabb { center: b.center, half_extents: b.half_extents.add_scalar(r) })
}

/// `normal · x <= offset`, with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace {
    pub normal: Vec3,
    pub offset: f64,
}

impl Halfspace {
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Minimum of `normal · x` over a box.
    pub fn min_over_box(&self, b: &Aabb) -> f64 {
        self.normal.dot(&b.center) - self.normal.abs().dot(&b.half_extents)
    }
}

/// Convex polytope `F x <= g`. Normals are stored unit-length so the tolerance is in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    halfspaces: Vec<Halfspace>,
}

impl Polytope {
    pub fn new(halfspaces: Vec<Halfspace>) -> Result<Self, WorldError> {
        let mut out = Vec::with_capacity(halfspaces.len());
        for (i, h) in halfspaces.into_iter().enumerate() {
            let norm = h.normal.norm();
            if !(norm.is_finite() && norm > 0.0) || !h.offset.is_finite() {
                return Err(WorldError::DegenerateNormal(i));
            }
            out.push(Halfspace { normal: h.normal / norm, offset: h.offset / norm });
        }
        Ok(Polytope { halfspaces: out })
    }

    pub fn from_aabb(b: &Aabb) -> Self {
        Polytope { halfspaces: b.halfspaces() }
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    pub fn push(&mut self, h: Halfspace) -> Result<(), WorldError> {
        let norm = h.normal.norm();
        if !(norm.is_finite() && norm > 0.0) || !h.offset.is_finite() {
            return Err(WorldError::DegenerateNormal(self.halfspaces.len()));
        }
        self.halfspaces.push(Halfspace { normal: h.normal / norm, offset: h.offset / norm });
        Ok(())
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.contains_tol(p, MEMBERSHIP_TOL)
    }

    pub fn contains_tol(&self, p: &Vec3, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.normal.dot(p) <= h.offset + tol)
    }

    /// Largest halfspace violation at `p` (non-positive when inside).
    pub fn max_violation(&self, p: &Vec3) -> f64 {
        self.halfspaces.iter().map(|h| h.signed_distance(p)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cheap sufficient test: some single halfspace excludes the whole box.
    pub fn separated_by_face(&self, b: &Aabb, margin: f64) -> bool {
        self.halfspaces.iter().any(|h| h.min_over_box(b) > h.offset + margin)
    }
}

/// Exact disjointness of a polytope and a closed box.
///
/// A single excluding face settles the question directly. Otherwise the
/// projection of the box center onto `poly ∩ box` is computed with the dense
/// QP solver; infeasibility means the sets are disjoint.
pub fn polytope_disjoint_from_aabb(poly: &Polytope, b: &Aabb) -> bool {
    if poly.separated_by_face(b, 0.0) {
        return true;
    }
    intersection_witness(poly, b).is_none()
}

/// A point lying in both the polytope and the box, if one exists.
pub fn intersection_witness(poly: &Polytope, b: &Aabb) -> Option<Vec3> {
    let m = poly.len() + 6;
    let mut a = DMatrix::<f64>::zeros(m, 3);
    let mut rhs = DVector::<f64>::zeros(m);
    for (i, h) in poly.halfspaces().iter().chain(b.halfspaces().iter()).enumerate() {
        for j in 0..3 {
            a[(i, j)] = h.normal[j];
        }
        rhs[i] = h.offset;
    }
    let c = b.center();
    let h = DMatrix::<f64>::identity(3, 3);
    let f = DVector::from_vec(vec![-c.x, -c.y, -c.z]);
    match qp::solve_qp(&h, &f, &a, &rhs) {
        Ok(sol) => Some(Vec3::new(sol.x[0], sol.x[1], sol.x[2])),
        Err(QpError::Infeasible { .. }) => None,
        // Fall back to the conservative verdict when the solver cannot decide.
        Err(_) => Some(c),
    }
}

/// Boolean voxel set over a fixed grid shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelMask {
    dims: [usize; 3],
    bits: Vec<bool>,
}

impl VoxelMask {
    pub fn empty(dims: [usize; 3]) -> Self {
        VoxelMask { dims, bits: vec![false; dims[0] * dims[1] * dims[2]] }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    fn lin(&self, idx: VoxelIndex) -> usize {
        (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2]
    }

    pub fn contains(&self, idx: VoxelIndex) -> bool {
        idx[0] < self.dims[0] && idx[1] < self.dims[1] && idx[2] < self.dims[2] && self.bits[self.lin(idx)]
    }

    pub fn insert(&mut self, idx: VoxelIndex) {
        let l = self.lin(idx);
        self.bits[l] = true;
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn union_with(&mut self, other: &VoxelMask) {
        for (a, b) in self.bits.iter_mut().zip(other.bits.iter()) {
            *a |= *b;
        }
    }

    /// Indices in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = VoxelIndex> + '_ {
        let [_, ny, nz] = self.dims;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(l, _)| [l / (ny * nz), (l / nz) % ny, l % nz])
    }

    /// L-infinity dilation by `k` voxels, done separably one axis at a time.
    pub fn dilate_linf(&self, k: usize) -> VoxelMask {
        if k == 0 {
            return self.clone();
        }
        let mut cur = self.clone();
        for axis in 0..3 {
            let mut next = VoxelMask::empty(self.dims);
            for l in 0..cur.bits.len() {
                if !cur.bits[l] {
                    continue;
                }
                let [nx, ny, nz] = self.dims;
                let idx = [l / (ny * nz), (l / nz) % ny, l % nz];
                let n = [nx, ny, nz][axis];
                let lo = idx[axis].saturating_sub(k);
                let hi = (idx[axis] + k).min(n - 1);
                let mut j = idx;
                for v in lo..=hi {
                    j[axis] = v;
                    next.insert(j);
                }
            }
            cur = next;
        }
        cur
    }
}

/// Dense voxel grid. Cells are stored row-major with the z index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    origin: Vec3,
    resolution: f64,
    dims: [usize; 3],
    cells: Vec<Cell>,
}

const FACE_NEIGHBORS: [[i64; 3]; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];

impl VoxelGrid {
    pub fn new(origin: Vec3, resolution: f64, dims: [usize; 3], fill: Cell) -> Result<Self, WorldError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(WorldError::BadResolution(resolution));
        }
        if dims.iter().any(|d| *d == 0) {
            return Err(WorldError::BadDims(dims));
        }
        Ok(VoxelGrid { origin, resolution, dims, cells: vec![fill; dims[0] * dims[1] * dims[2]] })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn linear(&self, idx: VoxelIndex) -> usize {
        (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2]
    }

    pub fn from_linear(&self, l: usize) -> VoxelIndex {
        let [_, ny, nz] = self.dims;
        [l / (ny * nz), (l / nz) % ny, l % nz]
    }

    pub fn in_bounds(&self, idx: VoxelIndex) -> bool {
        idx[0] < self.dims[0] && idx[1] < self.dims[1] && idx[2] < self.dims[2]
    }

    /// World point to voxel index using the floor convention. Points within
    /// 1e-9 voxel of a face snap onto it, so face points go to the higher index.
    pub fn index_of(&self, p: &Vec3) -> Option<VoxelIndex> {
        let mut idx = [0usize; 3];
        for i in 0..3 {
            let q = (p[i] - self.origin[i]) / self.resolution;
            if !q.is_finite() {
                return None;
            }
            let r = q.round();
            let q = if (q - r).abs() < 1e-9 { r } else { q };
            let f = q.floor();
            if f < 0.0 || f >= self.dims[i] as f64 {
                return None;
            }
            idx[i] = f as usize;
        }
        Some(idx)
    }

    pub fn center(&self, idx: VoxelIndex) -> Vec3 {
        Vec3::new(
            self.origin.x + (idx[0] as f64 + 0.5) * self.resolution,
            self.origin.y + (idx[1] as f64 + 0.5) * self.resolution,
            self.origin.z + (idx[2] as f64 + 0.5) * self.resolution,
        )
    }

    pub fn voxel_box(&self, idx: VoxelIndex, pad: f64) -> Aabb {
        Aabb { center: self.center(idx), half_extents: Vec3::repeat(0.5 * self.resolution + pad) }
    }

    pub fn bounds(&self) -> Aabb {
        let ext = Vec3::new(self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64) * self.resolution;
        Aabb { center: self.origin + ext * 0.5, half_extents: ext * 0.5 }
    }

    pub fn get(&self, idx: VoxelIndex) -> Cell {
        self.cells[self.linear(idx)]
    }

    pub fn try_get(&self, idx: VoxelIndex) -> Option<Cell> {
        self.in_bounds(idx).then(|| self.get(idx))
    }

    pub fn set(&mut self, idx: VoxelIndex, cell: Cell) -> Result<(), WorldError> {
        if !self.in_bounds(idx) {
            return Err(WorldError::IndexOutOfBounds(idx));
        }
        let l = self.linear(idx);
        self.cells[l] = cell;
        Ok(())
    }

    pub fn set_linear(&mut self, l: usize, cell: Cell) {
        self.cells[l] = cell;
    }

    pub fn fill(&mut self, cell: Cell) {
        self.cells.iter_mut().for_each(|c| *c = cell);
    }

    /// Occupancy lookup at a world point.
    pub fn classify(&self, p: &Vec3) -> Occupancy {
        match self.index_of(p) {
            Some(idx) => self.get(idx).into(),
            None => Occupancy::OutOfBounds,
        }
    }

    pub fn offset(&self, idx: VoxelIndex, d: [i64; 3]) -> Option<VoxelIndex> {
        let mut out = [0usize; 3];
        for i in 0..3 {
            let v = idx[i] as i64 + d[i];
            if v < 0 || v >= self.dims[i] as i64 {
                return None;
            }
            out[i] = v as usize;
        }
        Some(out)
    }

    pub fn face_neighbors(&self, idx: VoxelIndex) -> impl Iterator<Item = VoxelIndex> + '_ {
        FACE_NEIGHBORS.iter().filter_map(move |d| self.offset(idx, *d))
    }

    pub fn mask_of(&self, cell: Cell) -> VoxelMask {
        VoxelMask { dims: self.dims, bits: self.cells.iter().map(|c| *c == cell).collect() }
    }

    /// Every voxel within L-infinity distance ceil(radius/resolution) voxels of
    /// an occupied voxel becomes occupied.
    pub fn inflate_occupied(&self, radius: f64) -> Result<VoxelGrid, WorldError> {
        if !(radius >= 0.0) {
            return Err(WorldError::NegativeRadius(radius));
        }
        let k = voxels_for_radius(radius, self.resolution);
        let grown = self.mask_of(Cell::Occupied).dilate_linf(k);
        let mut out = self.clone();
        for (c, b) in out.cells.iter_mut().zip(grown.bits.iter()) {
            if *b {
                *c = Cell::Occupied;
            }
        }
        Ok(out)
    }

    /// Unknown voxels with at least one face-adjacent free voxel.
    pub fn unknown_boundary(&self) -> VoxelMask {
        self.boundary_of(Cell::Unknown)
    }

    /// Occupied voxels with at least one face-adjacent free voxel.
    pub fn occupied_boundary(&self) -> VoxelMask {
        self.boundary_of(Cell::Occupied)
    }

    fn boundary_of(&self, kind: Cell) -> VoxelMask {
        let mut out = VoxelMask::empty(self.dims);
        for l in 0..self.cells.len() {
            if self.cells[l] != kind {
                continue;
            }
            let idx = self.from_linear(l);
            if self.face_neighbors(idx).any(|n| self.get(n) == Cell::Free) {
                out.bits[l] = true;
            }
        }
        out
    }

    /// Serialize with a four-line header followed by one line per (x, y)
    /// column holding the z cells as `.`, `#`, `?`.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.cells.len() + self.dims[0] * self.dims[1] + 128);
        s.push_str(&format!("origin {} {} {}\n", self.origin.x, self.origin.y, self.origin.z));
        s.push_str(&format!("resolution {}\n", self.resolution));
        s.push_str(&format!("dims {} {} {}\n", self.dims[0], self.dims[1], self.dims[2]));
        s.push_str("encoding ascii-zfast .#?\n");
        for row in self.cells.chunks(self.dims[2]) {
            s.extend(row.iter().map(|c| c.to_char()));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<VoxelGrid, WorldError> {
        let mut lines = text.lines().enumerate();
        let mut header = |key: &str| -> Result<Vec<String>, WorldError> {
            let (n, line) = lines.next().ok_or(WorldError::Parse { line: 0, msg: format!("missing {key}") })?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(WorldError::Parse { line: n + 1, msg: format!("expected `{key}`") });
            }
            Ok(parts.map(str::to_owned).collect())
        };
        let num = |v: &[String], line: usize| -> Result<Vec<f64>, WorldError> {
            v.iter()
                .map(|s| f64::from_str(s).map_err(|e| WorldError::Parse { line, msg: e.to_string() }))
                .collect()
        };
        let o = num(&header("origin")?, 1)?;
        let r = num(&header("resolution")?, 2)?;
        let d = num(&header("dims")?, 3)?;
        let enc = header("encoding")?;
        if o.len() != 3 || r.len() != 1 || d.len() != 3 || d.iter().any(|x| *x < 1.0 || x.fract() != 0.0) {
            return Err(WorldError::Parse { line: 3, msg: "malformed header".into() });
        }
        if enc.first().map(String::as_str) != Some("ascii-zfast") {
            return Err(WorldError::Parse { line: 4, msg: "unsupported encoding".into() });
        }
        let dims = [d[0] as usize, d[1] as usize, d[2] as usize];
        let mut grid = VoxelGrid::new(Vec3::new(o[0], o[1], o[2]), r[0], dims, Cell::Free)?;
        let mut l = 0;
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if line.chars().count() != dims[2] {
                return Err(WorldError::Parse { line: n + 1, msg: "row length does not match dims".into() });
            }
            for c in line.chars() {
                let cell = Cell::from_char(c).ok_or(WorldError::Parse { line: n + 1, msg: format!("bad cell `{c}`") })?;
                if l >= grid.cells.len() {
                    return Err(WorldError::Parse { line: n + 1, msg: "too many cells".into() });
                }
                grid.cells[l] = cell;
                l += 1;
            }
        }
        if l != grid.cells.len() {
            return Err(WorldError::Parse { line: 0, msg: format!("expected {} cells, got {l}", grid.cells.len()) });
        }
        Ok(grid)
    }
}

impl fmt::Display for VoxelGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Whole-voxel count covering `radius`, rounding up.
pub fn voxels_for_radius(radius: f64, resolution: f64) -> usize {
    let q = radius / resolution;
    let r = q.round();
    if (q - r).abs() < 1e-9 {
        r.max(0.0) as usize
    } else {
        q.ceil().max(0.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(d: [usize; 3]) -> VoxelGrid {
        VoxelGrid::new(Vec3::zeros(), 1.0, d, Cell::Free).unwrap()
    }

    #[test]
    fn classify_basic() {
        let g = grid([2, 2, 2]);
        assert_eq!(g.classify(&Vec3::new(0.5, 0.5, 0.5)), Occupancy::Free);
        assert_eq!(g.classify(&Vec3::new(-0.1, 0.0, 0.0)), Occupancy::OutOfBounds);
        assert_eq!(g.classify(&Vec3::new(2.0, 0.0, 0.0)), Occupancy::OutOfBounds);
        assert_eq!(g.index_of(&Vec3::new(1.0, 0.0, 0.0)), Some([1, 0, 0]));
    }

    #[test]
    fn face_point_goes_to_higher_index_despite_rounding() {
        let g = VoxelGrid::new(Vec3::zeros(), 0.1, [10, 10, 10], Cell::Free).unwrap();
        assert_eq!(g.index_of(&Vec3::new(0.3, 0.0, 0.0)), Some([3, 0, 0]));
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(VoxelGrid::new(Vec3::zeros(), 0.0, [1, 1, 1], Cell::Free).is_err());
        assert!(VoxelGrid::new(Vec3::zeros(), 1.0, [0, 1, 1], Cell::Free).is_err());
        assert!(Aabb::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0)).is_err());
        assert!(Polytope::new(vec![Halfspace { normal: Vec3::zeros(), offset: 1.0 }]).is_err());
    }

    #[test]
    fn inflate_single_voxel() {
        let mut g = grid([5, 5, 5]);
        g.set([2, 2, 2], Cell::Occupied).unwrap();
        assert_eq!(g.inflate_occupied(0.0).unwrap(), g);
        let inf = g.inflate_occupied(1.0).unwrap();
        assert_eq!(inf.mask_of(Cell::Occupied).len(), 27);
        let mut corner = grid([3, 3, 3]);
        corner.set([0, 0, 0], Cell::Occupied).unwrap();
        assert_eq!(corner.inflate_occupied(1.0).unwrap().mask_of(Cell::Occupied).len(), 8);
        assert!(g.inflate_occupied(-1.0).is_err());
    }

    #[test]
    fn hardware_radius_is_five_voxels() {
        assert_eq!(voxels_for_radius(0.45, 0.1), 5);
        assert_eq!(voxels_for_radius(0.2, 0.1), 2);
    }

    #[test]
    fn inflation_keeps_unknown() {
        let mut g = grid([5, 1, 1]);
        g.set([0, 0, 0], Cell::Occupied).unwrap();
        g.set([4, 0, 0], Cell::Unknown).unwrap();
        g.set([1, 0, 0], Cell::Unknown).unwrap();
        let inf = g.inflate_occupied(1.0).unwrap();
        assert_eq!(inf.get([1, 0, 0]), Cell::Occupied);
        assert_eq!(inf.get([4, 0, 0]), Cell::Unknown);
    }

    #[test]
    fn minkowski() {
        let b = Aabb::new(Vec3::zeros(), Vec3::repeat(0.4)).unwrap();
        assert_eq!(minkowski_inflate(&b, 0.0).unwrap(), b);
        let r = minkowski_inflate(&b, 0.25).unwrap();
        assert!((r.half_extents() - Vec3::repeat(0.65)).norm() < 1e-15);
        let r = minkowski_inflate(&b, 0.2).unwrap();
        assert!((r.half_extents() - Vec3::repeat(0.6)).norm() < 1e-15);
        assert!(minkowski_inflate(&b, -0.1).is_err());
    }

    #[test]
    fn unknown_boundary_cases() {
        assert!(grid([3, 3, 3]).unknown_boundary().is_empty());
        let mut u = grid([3, 3, 3]);
        u.fill(Cell::Unknown);
        assert!(u.unknown_boundary().is_empty());
    }

    #[test]
    fn disjoint_basic() {
        let p = Polytope::new(vec![Halfspace { normal: Vec3::x(), offset: 0.0 }]).unwrap();
        let far = Aabb::new(Vec3::new(2.0, 0.0, 0.0), Vec3::repeat(0.5)).unwrap();
        let near = Aabb::new(Vec3::new(0.2, 0.0, 0.0), Vec3::repeat(0.5)).unwrap();
        assert!(polytope_disjoint_from_aabb(&p, &far));
        assert!(!polytope_disjoint_from_aabb(&p, &near));
        let cube = Polytope::from_aabb(&Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)).unwrap());
        let inside = Aabb::new(Vec3::new(0.1, 0.1, 0.1), Vec3::repeat(0.1)).unwrap();
        assert!(!polytope_disjoint_from_aabb(&cube, &inside));
    }

    #[test]
    fn diagonal_separation_needs_exact_test() {
        // The box is beyond the slanted face but no axis face excludes it.
        let mut p = Polytope::from_aabb(&Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)).unwrap());
        p.push(Halfspace { normal: Vec3::new(1.0, 1.0, 0.0), offset: 1.0 }).unwrap();
        let b = Aabb::new(Vec3::new(0.9, 0.9, 0.0), Vec3::repeat(0.1)).unwrap();
        assert!(polytope_disjoint_from_aabb(&p, &b));
        let b2 = Aabb::new(Vec3::new(0.5, 0.5, 0.0), Vec3::repeat(0.1)).unwrap();
        assert!(!polytope_disjoint_from_aabb(&p, &b2));
    }

    #[test]
    fn text_round_trip() {
        let mut g = VoxelGrid::new(Vec3::new(-1.5, 0.25, 0.1), 0.2, [3, 2, 4], Cell::Free).unwrap();
        g.set([1, 1, 2], Cell::Occupied).unwrap();
        g.set([2, 0, 3], Cell::Unknown).unwrap();
        let back = VoxelGrid::from_text(&g.to_text()).unwrap();
        assert_eq!(back, g);
        assert!(VoxelGrid::from_text("origin 0 0 0\n").is_err());
    }

    #[test]
    fn dilation_matches_bruteforce() {
        let mut m = VoxelMask::empty([6, 5, 4]);
        m.insert([1, 1, 1]);
        m.insert([4, 3, 2]);
        let d = m.dilate_linf(1);
        for i in 0..6 {
            for j in 0..5 {
                for k in 0..4 {
                    let expect = m.iter().any(|s| {
                        (s[0] as i64 - i as i64).abs() <= 1
                            && (s[1] as i64 - j as i64).abs() <= 1
                            && (s[2] as i64 - k as i64).abs() <= 1
                    });
                    assert_eq!(d.contains([i, j, k]), expect);
                }
            }
        }
    }
}
