//! Cubic trajectory pieces, their Bézier control points, and sampling.

use thiserror::Error;

use crate::world::Polytope;
use crate::Vec3;

/// Junction continuity tolerance (position, velocity, acceleration).
pub const CONTINUITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BezierError {
    #[error("piece duration must be positive and finite, got {0}")]
    BadDuration(f64),
    #[error("trajectory has no pieces")]
    Empty,
    #[error("discontinuity of {gap:e} at junction {junction} (derivative order {order})")]
    Discontinuous { junction: usize, order: usize, gap: f64 },
    #[error("time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("dynamic limits must be positive")]
    BadLimits,
}

/// Position and its first three derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub jerk: Vec3,
}

impl TrajState {
    pub fn at_rest(p: Vec3) -> Self {
        TrajState { position: p, velocity: Vec3::zeros(), acceleration: Vec3::zeros(), jerk: Vec3::zeros() }
    }
}

/// `x(τ) = aτ³ + bτ² + cτ + d` for `τ ∈ [0, dt]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicPiece {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
    pub d: Vec3,
    dt: f64,
}

/// Velocity, acceleration and jerk Bézier points of one piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativePoints {
    pub velocity: [Vec3; 3],
    pub acceleration: [Vec3; 2],
    pub jerk: Vec3,
}

impl CubicPiece {
    pub fn new(a: Vec3, b: Vec3, c: Vec3, d: Vec3, dt: f64) -> Result<Self, BezierError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(BezierError::BadDuration(dt));
        }
        Ok(CubicPiece { a, b, c, d, dt })
    }

    pub fn constant(p: Vec3, dt: f64) -> Result<Self, BezierError> {
        CubicPiece::new(Vec3::zeros(), Vec3::zeros(), Vec3::zeros(), p, dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn eval(&self, tau: f64) -> TrajState {
        let t2 = tau * tau;
        TrajState {
            position: self.a * (t2 * tau) + self.b * t2 + self.c * tau + self.d,
            velocity: self.a * (3.0 * t2) + self.b * (2.0 * tau) + self.c,
            acceleration: self.a * (6.0 * tau) + self.b * 2.0,
            jerk: self.a * 6.0,
        }
    }

    pub fn position_control_points(&self) -> [Vec3; 4] {
        let dt = self.dt;
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        [
            d,
            (c * dt + d * 3.0) / 3.0,
            (b * (dt * dt) + c * (2.0 * dt) + d * 3.0) / 3.0,
            a * (dt * dt * dt) + b * (dt * dt) + c * dt + d,
        ]
    }

    pub fn derivative_control_points(&self) -> DerivativePoints {
        let p = self.position_control_points();
        let dt = self.dt;
        let v = [(p[1] - p[0]) * (3.0 / dt), (p[2] - p[1]) * (3.0 / dt), (p[3] - p[2]) * (3.0 / dt)];
        let acc = [(v[1] - v[0]) * (2.0 / dt), (v[2] - v[1]) * (2.0 / dt)];
        DerivativePoints { velocity: v, acceleration: acc, jerk: (acc[1] - acc[0]) / dt }
    }

    /// All four position control points satisfy the polytope.
    pub fn inside(&self, poly: &Polytope) -> bool {
        self.position_control_points().iter().all(|p| poly.contains(p))
    }
}

/// Concatenation of cubic pieces starting at `t0`, C² at the junctions.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeTrajectory {
    pieces: Vec<CubicPiece>,
    t0: f64,
    starts: Vec<f64>,
}

impl CompositeTrajectory {
    pub fn new(pieces: Vec<CubicPiece>, t0: f64) -> Result<Self, BezierError> {
        if pieces.is_empty() {
            return Err(BezierError::Empty);
        }
        for (k, w) in pieces.windows(2).enumerate() {
            let end = w[0].eval(w[0].dt);
            let start = w[1].eval(0.0);
            let gaps = [
                (end.position - start.position).amax(),
                (end.velocity - start.velocity).amax(),
                (end.acceleration - start.acceleration).amax(),
            ];
            for (order, gap) in gaps.into_iter().enumerate() {
                if !(gap <= CONTINUITY_TOL) {
                    return Err(BezierError::Discontinuous { junction: k, order, gap });
                }
            }
        }
        let mut starts = Vec::with_capacity(pieces.len());
        let mut t = t0;
        for p in &pieces {
            starts.push(t);
            t += p.dt;
        }
        Ok(CompositeTrajectory { pieces, t0, starts })
    }

    /// Single constant piece holding `p` for `duration` seconds.
    pub fn hover(p: Vec3, t0: f64, duration: f64) -> Result<Self, BezierError> {
        CompositeTrajectory::new(vec![CubicPiece::constant(p, duration)?], t0)
    }

    pub fn pieces(&self) -> &[CubicPiece] {
        &self.pieces
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn duration(&self) -> f64 {
        self.pieces.iter().map(|p| p.dt).sum()
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.duration()
    }

    /// Piece index and local time; junction times go to the later piece.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let k = self.starts.partition_point(|s| *s <= t + 1e-12).saturating_sub(1);
        let tau = (t - self.starts[k]).clamp(0.0, self.pieces[k].dt);
        (k, tau)
    }

    pub fn sample(&self, t: f64) -> Result<TrajState, BezierError> {
        let end = self.t_end();
        let slack = 1e-12 * (1.0 + end.abs());
        if !(t >= self.t0 - slack && t <= end + slack) {
            return Err(BezierError::OutOfRange { t, start: self.t0, end });
        }
        Ok(self.sample_clamped(t))
    }

    /// Samples with `t` clamped to the span; past the end the final position is held at rest.
    pub fn sample_clamped(&self, t: f64) -> TrajState {
        let end = self.t_end();
        if t > end {
            let last = self.pieces.last().expect("nonempty");
            return TrajState::at_rest(last.eval(last.dt).position);
        }
        let (k, tau) = self.locate(t.max(self.t0));
        self.pieces[k].eval(tau)
    }

    /// Uniform samples `t0, t0 + step, …` up to and including the end.
    pub fn sample_uniform(&self, step: f64) -> Vec<(f64, TrajState)> {
        let n = (self.duration() / step).floor() as usize;
        let mut out: Vec<(f64, TrajState)> =
            (0..=n).map(|i| self.t0 + i as f64 * step).map(|t| (t, self.sample_clamped(t))).collect();
        if out.last().map(|(t, _)| self.t_end() - t > 1e-12).unwrap_or(true) {
            out.push((self.t_end(), self.sample_clamped(self.t_end())));
        }
        out
    }
}

/// Per-axis L-infinity limits.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DynamicLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub j_max: f64,
}

impl Default for DynamicLimits {
    fn default() -> Self {
        DynamicLimits { v_max: 1.0, a_max: 2.0, j_max: 3.0 }
    }
}

impl DynamicLimits {
    pub fn new(v_max: f64, a_max: f64, j_max: f64) -> Result<Self, BezierError> {
        if [v_max, a_max, j_max].iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(BezierError::BadLimits);
        }
        Ok(DynamicLimits { v_max, a_max, j_max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LimitReport {
    /// Some control point or jerk value exceeds a limit.
    pub control_point_violation: bool,
    /// Some dense sample exceeds a limit by more than `tol`.
    pub sampled_violation: bool,
    pub samples: usize,
    pub violating_samples: usize,
    /// Largest ratio |value| / limit seen over control points.
    pub max_control_ratio: f64,
}

/// Checks limits both through control points and by dense sampling every `sample_dt`.
pub fn check_dynamic_limits(traj: &CompositeTrajectory, limits: &DynamicLimits, sample_dt: f64, tol: f64) -> LimitReport {
    let mut rep = LimitReport::default();
    for piece in traj.pieces() {
        let dp = piece.derivative_control_points();
        let r = dp
            .velocity
            .iter()
            .map(|v| v.amax() / limits.v_max)
            .chain(dp.acceleration.iter().map(|a| a.amax() / limits.a_max))
            .chain(std::iter::once(dp.jerk.amax() / limits.j_max))
            .fold(0.0, f64::max);
        rep.max_control_ratio = rep.max_control_ratio.max(r);
    }
    rep.control_point_violation = rep.max_control_ratio > 1.0 + tol;
    for (_, s) in traj.sample_uniform(sample_dt) {
        rep.samples += 1;
        if s.velocity.amax() > limits.v_max + tol
            || s.acceleration.amax() > limits.a_max + tol
            || s.jerk.amax() > limits.j_max + tol
        {
            rep.violating_samples += 1;
        }
    }
    rep.sampled_violation = rep.violating_samples > 0;
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn constant_piece_points() {
        let p = CubicPiece::constant(v(1.0, 2.0, 3.0), 0.7).unwrap();
        assert!(p.position_control_points().iter().all(|q| *q == v(1.0, 2.0, 3.0)));
        let dp = p.derivative_control_points();
        assert!(dp.velocity.iter().chain(dp.acceleration.iter()).all(|q| q.amax() == 0.0));
        assert_eq!(dp.jerk, Vec3::zeros());
    }

    #[test]
    fn linear_piece_points() {
        let p = CubicPiece::new(Vec3::zeros(), Vec3::zeros(), Vec3::x(), Vec3::zeros(), 1.0).unwrap();
        let cp = p.position_control_points();
        for (k, q) in cp.iter().enumerate() {
            assert!((q - Vec3::x() * (k as f64 / 3.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn cubic_jerk() {
        let p = CubicPiece::new(Vec3::x(), Vec3::zeros(), Vec3::zeros(), Vec3::zeros(), 1.0).unwrap();
        assert!((p.derivative_control_points().jerk - v(6.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_dt_and_discontinuity() {
        assert!(CubicPiece::constant(Vec3::zeros(), 0.0).is_err());
        let a = CubicPiece::constant(Vec3::zeros(), 1.0).unwrap();
        let b = CubicPiece::constant(Vec3::x(), 1.0).unwrap();
        assert!(matches!(CompositeTrajectory::new(vec![a, b], 0.0), Err(BezierError::Discontinuous { .. })));
        assert!(CompositeTrajectory::new(vec![], 0.0).is_err());
    }

    #[test]
    fn sampling_range_and_junctions() {
        // x(t) = t² on [0,2] split into two pieces.
        let p0 = CubicPiece::new(Vec3::zeros(), Vec3::x(), Vec3::zeros(), Vec3::zeros(), 1.0).unwrap();
        let p1 = CubicPiece::new(Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0, Vec3::x(), 1.0).unwrap();
        let tr = CompositeTrajectory::new(vec![p0, p1], 5.0).unwrap();
        assert_eq!(tr.locate(6.0).0, 1);
        let s = tr.sample(6.0).unwrap();
        assert!((s.position.x - 1.0).abs() < 1e-15 && (s.velocity.x - 2.0).abs() < 1e-15);
        assert_eq!(tr.sample(5.0).unwrap().position, Vec3::zeros());
        assert!(tr.sample(4.9).is_err());
        assert!(tr.sample(7.1).is_err());
    }

    #[test]
    fn limit_check_flags_control_point() {
        let lim = DynamicLimits::new(1.0, 10.0, 100.0).unwrap();
        let p = CubicPiece::new(Vec3::zeros(), Vec3::zeros(), Vec3::x() * 1.01, Vec3::zeros(), 1.0).unwrap();
        let rep = check_dynamic_limits(&CompositeTrajectory::new(vec![p], 0.0).unwrap(), &lim, 1e-3, 1e-9);
        assert!(rep.control_point_violation);
        let z = CompositeTrajectory::hover(Vec3::zeros(), 0.0, 1.0).unwrap();
        let rep = check_dynamic_limits(&z, &lim, 1e-3, 1e-9);
        assert!(!rep.control_point_violation && !rep.sampled_violation);
    }
}
