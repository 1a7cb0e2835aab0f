//! Motion planning among static and moving obstacles with time-layered safe
//! corridors.
//!
//! The pipeline: a heat-weighted A* global path over a voxel grid, a corridor
//! of convex polytopes per (time layer, path segment) whose obstacles are
//! inflated by each layer's reachable radius, and a mixed-integer QP over
//! cubic Bézier pieces solved by branch and bound. Obstacles are tracked with
//! an adaptive EKF; a deterministic simulator and metrics drive benchmarks.

pub mod bezier;
pub mod global_planner;
pub mod heatmap;
pub mod miqp;
pub mod qp;
pub mod replan;
pub mod sim;
pub mod stsfc;
pub mod tracker;
pub mod world;

/// 3-vector in metres (or the derivative unit in context).
pub type Vec3 = nalgebra::Vector3<f64>;
