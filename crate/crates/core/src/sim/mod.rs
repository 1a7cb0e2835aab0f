//! Scenarios, obstacle motion models, episode stepping, metrics and suites.

mod episode;
pub mod presets;
mod suites;

pub use episode::{compute_metrics, step_episode, Episode, EpisodeLog, EpisodeMetrics, EpisodeTimings, LogSample, ReplanRecord, TraceRow};
pub use suites::{ablate_sfc, ablate_ve, aggregate, run_suite, safety_suite, Aggregate, SafetySummary, SfcAblationRow, VeRow};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::replan::PlannerConfig;
use crate::tracker::TrackerConfig;
use crate::world::{Aabb, Cell, VoxelGrid, WorldError};
use crate::Vec3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("episode log is empty")]
    EmptyLog,
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("scenario file: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Vertical cylinder standing on the arena floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub center: [f64; 2],
    pub radius: f64,
    pub height: f64,
}

impl Cylinder {
    pub fn contains(&self, p: &Vec3, floor: f64) -> bool {
        let (dx, dy) = (p.x - self.center[0], p.y - self.center[1]);
        dx * dx + dy * dy <= self.radius * self.radius && p.z >= floor && p.z <= floor + self.height
    }

    /// The closed cylinder meets the box.
    pub fn intersects(&self, b: &Aabb, floor: f64) -> bool {
        let (lo, hi) = (b.min(), b.max());
        if hi.z < floor || lo.z > floor + self.height {
            return false;
        }
        let cx = self.center[0].clamp(lo.x, hi.x);
        let cy = self.center[1].clamp(lo.y, hi.y);
        let (dx, dy) = (cx - self.center[0], cy - self.center[1]);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrefoilParams {
    pub center: Vec3,
    pub scale: f64,
    pub speed: f64,
    pub offset: f64,
}

/// `center + scale·(sin θ + 2 sin 2θ, cos θ − 2 cos 2θ, −sin 3θ)/3`, `θ = speed·t + offset`.
pub fn trefoil_position(p: &TrefoilParams, t: f64) -> Vec3 {
    let th = p.speed * t + p.offset;
    let v = Vec3::new(th.sin() + 2.0 * (2.0 * th).sin(), th.cos() - 2.0 * (2.0 * th).cos(), -(3.0 * th).sin());
    p.center + v * (p.scale / 3.0)
}

/// Largest per-axis speed of a unit-speed trefoil of the given scale, by dense sampling.
pub fn trefoil_unit_axis_speed(scale: f64) -> f64 {
    let p = TrefoilParams { center: Vec3::zeros(), scale, speed: 1.0, offset: 0.0 };
    let n = 20_000;
    let h = std::f64::consts::TAU / n as f64;
    (0..n)
        .map(|i| ((trefoil_position(&p, (i + 1) as f64 * h) - trefoil_position(&p, i as f64 * h)) / h).amax())
        .fold(0.0, f64::max)
}

/// Angular speed that keeps the sampled per-axis speed at or below `v_bound`.
pub fn trefoil_speed_for(scale: f64, v_bound: f64) -> f64 {
    0.99 * v_bound / trefoil_unit_axis_speed(scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Motion {
    Trefoil(TrefoilParams),
    /// Back and forth between `p0` and `p1` at constant speed.
    Line { p0: Vec3, p1: Vec3, speed: f64 },
    Circle { center: Vec3, radius: f64, omega: f64, phase: f64 },
    /// Lissajous `(sin ωt, sin 2ωt)·r` in the horizontal plane.
    FigureEight { center: Vec3, radius: f64, omega: f64 },
    /// Closed polyline through `waypoints` at constant speed.
    Waypoints { waypoints: Vec<Vec3>, speed: f64 },
    Static { center: Vec3 },
}

fn polyline_at(pts: &[Vec3], s: f64) -> Vec3 {
    let mut s = s;
    for w in pts.windows(2) {
        let l = (w[1] - w[0]).norm();
        if s <= l {
            return if l > 0.0 { w[0] + (w[1] - w[0]) * (s / l) } else { w[0] };
        }
        s -= l;
    }
    pts[pts.len() - 1]
}

impl Motion {
    pub fn position(&self, t: f64) -> Vec3 {
        match self {
            Motion::Trefoil(p) => trefoil_position(p, t),
            Motion::Line { p0, p1, speed } => {
                let l = (p1 - p0).norm();
                if l == 0.0 {
                    return *p0;
                }
                let s = (speed * t).rem_euclid(2.0 * l);
                let s = if s > l { 2.0 * l - s } else { s };
                p0 + (p1 - p0) * (s / l)
            }
            Motion::Circle { center, radius, omega, phase } => {
                let th = omega * t + phase;
                center + Vec3::new(th.cos(), th.sin(), 0.0) * *radius
            }
            Motion::FigureEight { center, radius, omega } => {
                center + Vec3::new((omega * t).sin(), (2.0 * omega * t).sin(), 0.0) * *radius
            }
            Motion::Waypoints { waypoints, speed } => {
                if waypoints.len() < 2 {
                    return waypoints.first().copied().unwrap_or_else(Vec3::zeros);
                }
                let mut closed = waypoints.clone();
                closed.push(waypoints[0]);
                let total: f64 = closed.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
                if total == 0.0 {
                    return waypoints[0];
                }
                polyline_at(&closed, (speed * t).rem_euclid(total))
            }
            Motion::Static { center } => *center,
        }
    }

    /// Analytic per-axis speed bound.
    pub fn axis_speed_bound(&self) -> f64 {
        match self {
            Motion::Trefoil(p) => p.speed.abs() * trefoil_unit_axis_speed(p.scale),
            Motion::Line { speed, .. } | Motion::Waypoints { speed, .. } => speed.abs(),
            Motion::Circle { radius, omega, .. } => (radius * omega).abs(),
            Motion::FigureEight { radius, omega, .. } => 2.0 * (radius * omega).abs(),
            Motion::Static { .. } => 0.0,
        }
    }
}

/// Model-dispatching form of the motion evaluation.
pub fn simple_motion(model: &Motion, t: f64) -> Vec3 {
    model.position(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicObstacle {
    pub motion: Motion,
    pub half_extents: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub bounds_min: Vec3,
    pub bounds_max: Vec3,
    pub resolution: f64,
    pub start: Vec3,
    pub goal: Vec3,
    pub cylinders: Vec<Cylinder>,
    pub dynamic: Vec<DynamicObstacle>,
    pub planner: PlannerConfig,
    pub tracker: TrackerConfig,
    /// Standard deviation of centroid measurement noise (m), clipped at 3σ.
    pub noise_sigma: f64,
    pub sensing_range: f64,
    /// The map starts Unknown and is revealed within sensing range.
    pub unknown_initially: bool,
    pub replan_period: f64,
    /// Simulation and logging step (s).
    pub sim_dt: f64,
    pub timeout: f64,
    pub goal_tolerance: f64,
    /// Every k-th sample goes to the trace.
    pub trace_stride: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "empty".into(),
            seed: 0,
            bounds_min: Vec3::new(0.0, 0.0, 0.0),
            bounds_max: Vec3::new(12.0, 6.0, 3.0),
            resolution: 0.2,
            start: Vec3::new(1.0, 3.0, 1.5),
            goal: Vec3::new(11.0, 3.0, 1.5),
            cylinders: vec![],
            dynamic: vec![],
            planner: PlannerConfig { deterministic: true, ..Default::default() },
            tracker: TrackerConfig::default(),
            noise_sigma: 0.02,
            sensing_range: 6.0,
            unknown_initially: false,
            replan_period: 0.2,
            sim_dt: 0.001,
            timeout: 60.0,
            goal_tolerance: 0.5,
            trace_stride: 10,
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn bounds(&self) -> Result<Aabb, SimError> {
        Ok(Aabb::from_min_max(self.bounds_min, self.bounds_max)?)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let b = self.bounds()?;
        if !b.contains(&self.start) || !b.contains(&self.goal) {
            return Err(SimError::Scenario("start and goal must lie inside the bounds".into()));
        }
        if !(self.sim_dt > 0.0 && self.sim_dt <= 0.01) {
            return Err(SimError::Scenario("sim_dt must lie in (0, 10 ms]".into()));
        }
        if !(self.replan_period >= self.sim_dt && self.timeout > 0.0 && self.resolution > 0.0) {
            return Err(SimError::Scenario("replan_period, timeout and resolution must be positive".into()));
        }
        if self.planner.n_pieces < 4 || self.planner.n_segments < 1 {
            return Err(SimError::Scenario("need at least 4 pieces and 1 segment".into()));
        }
        self.planner.heat.validate().map_err(|e| SimError::Scenario(e.to_string()))?;
        if self.dynamic.iter().any(|d| d.half_extents.iter().any(|h| !(*h > 0.0))) {
            return Err(SimError::Scenario("obstacle half extents must be positive".into()));
        }
        Ok(())
    }

    /// Ground-truth occupancy: every voxel the cylinders touch is Occupied.
    pub fn truth_grid(&self) -> Result<VoxelGrid, SimError> {
        let ext = self.bounds_max - self.bounds_min;
        let dims = [0, 1, 2].map(|i| ((ext[i] / self.resolution) - 1e-9).ceil().max(1.0) as usize);
        let mut g = VoxelGrid::new(self.bounds_min, self.resolution, dims, Cell::Free)?;
        let floor = self.bounds_min.z;
        let idx = |v: f64, i: usize| (((v - self.bounds_min[i]) / self.resolution).floor().max(0.0) as usize).min(dims[i] - 1);
        for c in &self.cylinders {
            let lo = [idx(c.center[0] - c.radius, 0), idx(c.center[1] - c.radius, 1), 0];
            let hi = [idx(c.center[0] + c.radius, 0), idx(c.center[1] + c.radius, 1), idx(floor + c.height, 2)];
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        if c.intersects(&g.voxel_box([x, y, z], 0.0), floor) {
                            g.set([x, y, z], Cell::Occupied)?;
                        }
                    }
                }
            }
        }
        Ok(g)
    }

    /// True obstacle boxes at time `t`.
    pub fn obstacle_boxes(&self, t: f64) -> Vec<Aabb> {
        self.dynamic
            .iter()
            .map(|d| Aabb::new(d.motion.position(t), d.half_extents).expect("validated extents"))
            .collect()
    }

    /// Independent collision oracle: point inside a cylinder or a true obstacle box.
    pub fn in_collision(&self, p: &Vec3, t: f64) -> bool {
        let floor = self.bounds_min.z;
        self.cylinders.iter().any(|c| c.contains(p, floor)) || self.obstacle_boxes(t).iter().any(|b| b.contains(p))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Random closed polyline of `k` points inside `region`.
pub fn random_waypoints(rng: &mut ChaCha8Rng, region: &Aabb, k: usize) -> Vec<Vec3> {
    let (lo, hi) = (region.min(), region.max());
    (0..k).map(|_| Vec3::from_fn(|i, _| rng.random_range(lo[i]..=hi[i]))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trefoil_at_zero_and_period() {
        let p = TrefoilParams { center: Vec3::new(1.0, 2.0, 3.0), scale: 1.5, speed: 0.7, offset: 0.0 };
        assert!((trefoil_position(&p, 0.0) - (p.center + Vec3::new(0.0, -0.5, 0.0))).norm() < 1e-12);
        let per = std::f64::consts::TAU / p.speed;
        assert!((trefoil_position(&p, 1.3) - trefoil_position(&p, 1.3 + per)).norm() < 1e-9);
    }

    #[test]
    fn line_reflects_inside_segment() {
        let m = Motion::Line { p0: Vec3::zeros(), p1: Vec3::new(2.0, 0.0, 0.0), speed: 0.7 };
        for i in 0..10_000 {
            let p = m.position(i as f64 * 0.013);
            assert!(p.x >= -1e-12 && p.x <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn toml_round_trip() {
        let mut s = Scenario::default();
        s.cylinders.push(Cylinder { center: [5.0, 3.0], radius: 0.5, height: 6.0 });
        s.dynamic.push(DynamicObstacle {
            motion: Motion::Circle { center: Vec3::new(6.0, 3.0, 1.5), radius: 1.0, omega: 0.4, phase: 0.0 },
            half_extents: Vec3::repeat(0.2),
        });
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn truth_grid_covers_cylinder() {
        let mut s = Scenario::default();
        s.cylinders.push(Cylinder { center: [5.0, 3.0], radius: 0.5, height: 6.0 });
        let g = s.truth_grid().unwrap();
        for i in 0..200 {
            let a = i as f64 * 0.0314;
            let p = Vec3::new(5.0 + 0.5 * a.cos(), 3.0 + 0.5 * a.sin(), 1.0);
            assert_eq!(g.get(g.index_of(&p).unwrap()), Cell::Occupied);
        }
    }
}
