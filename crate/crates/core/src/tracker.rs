//! Nearest-neighbor association, adaptive EKF and track lifecycle.

use nalgebra::{Matrix3, SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heatmap::ObstaclePrediction;
use crate::world::Aabb;
use crate::Vec3;

pub type State9 = SVector<f64, 9>;
pub type Mat9 = SMatrix<f64, 9, 9>;
type Mat39 = SMatrix<f64, 3, 9>;
type Mat93 = SMatrix<f64, 9, 3>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackerError {
    #[error("measurement stamp {stamp} precedes last update {last}")]
    NonMonotoneStamp { stamp: f64, last: f64 },
    #[error("forgetting factor must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("invalid tracker parameter: {0}")]
    BadParam(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub alpha: f64,
    pub gate: f64,
    pub timeout: f64,
    /// Diagonal of the default process noise.
    pub q0: f64,
    /// Diagonal of the default measurement noise.
    pub r0: f64,
    pub r_margin: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig { alpha: 0.9, gate: 1.0, timeout: 1.0, q0: 0.1, r0: 0.05, r_margin: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub centroid: Vec3,
    pub half_extents: Vec3,
    pub stamp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleTrack {
    pub id: u64,
    /// `[p, v, a]`.
    pub state: State9,
    pub covariance: Mat9,
    pub q: Mat9,
    pub r: Matrix3<f64>,
    pub half_extents: Vec3,
    pub last_update: f64,
}

impl ObstacleTrack {
    pub fn position(&self) -> Vec3 {
        self.state.fixed_rows::<3>(0).into()
    }

    pub fn velocity(&self) -> Vec3 {
        self.state.fixed_rows::<3>(3).into()
    }

    pub fn acceleration(&self) -> Vec3 {
        self.state.fixed_rows::<3>(6).into()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::new(self.position(), self.half_extents).expect("half extents are positive")
    }
}

/// Intermediate quantities of one filter step, kept for recomputation checks.
#[derive(Debug, Clone, PartialEq)]
pub struct AekfLog {
    pub innovation: Vec3,
    pub residual: Vec3,
    pub gain: Mat93,
    pub q_prev: Mat9,
    pub r_prev: Matrix3<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Association {
    /// `(measurement index, track index)`.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_measurements: Vec<usize>,
    pub unmatched_tracks: Vec<usize>,
}

/// Greedy globally-nearest-first pairing within `gate`. Ties go to the lower
/// track id, then the lower measurement index.
pub fn associate(measurements: &[Measurement], tracks: &[ObstacleTrack], gate: f64) -> Association {
    let mut cand = Vec::new();
    for (i, m) in measurements.iter().enumerate() {
        for (j, t) in tracks.iter().enumerate() {
            let d = (m.centroid - t.position()).norm();
            if d <= gate {
                cand.push((d, t.id, i, j));
            }
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut m_used = vec![false; measurements.len()];
    let mut t_used = vec![false; tracks.len()];
    let mut out = Association::default();
    for (_, _, i, j) in cand {
        if !m_used[i] && !t_used[j] {
            m_used[i] = true;
            t_used[j] = true;
            out.pairs.push((i, j));
        }
    }
    out.unmatched_measurements = (0..measurements.len()).filter(|i| !m_used[*i]).collect();
    out.unmatched_tracks = (0..tracks.len()).filter(|j| !t_used[*j]).collect();
    out
}

/// Constant-acceleration transition over `dt`.
pub fn transition(dt: f64) -> Mat9 {
    let mut f = Mat9::identity();
    for i in 0..3 {
        f[(i, i + 3)] = dt;
        f[(i, i + 6)] = 0.5 * dt * dt;
        f[(i + 3, i + 6)] = dt;
    }
    f
}

fn observation() -> Mat39 {
    let mut h = Mat39::zeros();
    for i in 0..3 {
        h[(i, i)] = 1.0;
    }
    h
}

/// Predict, position update in Joseph form, then forgetting updates of `R`
/// from the post-fit residual and of `Q` from the gain-mapped innovation.
pub fn aekf_step(track: &ObstacleTrack, z: &Measurement, alpha: f64) -> Result<(ObstacleTrack, AekfLog), TrackerError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TrackerError::BadAlpha(alpha));
    }
    if z.stamp < track.last_update {
        return Err(TrackerError::NonMonotoneStamp { stamp: z.stamp, last: track.last_update });
    }
    let f = transition(z.stamp - track.last_update);
    let h = observation();
    let x_prior = f * track.state;
    let p_prior = f * track.covariance * f.transpose() + track.q;
    let d = z.centroid - h * x_prior;
    let s = h * p_prior * h.transpose() + track.r;
    let s_inv = s.try_inverse().ok_or(TrackerError::SingularInnovation)?;
    let k = p_prior * h.transpose() * s_inv;
    let x_post = x_prior + k * d;
    let ikh = Mat9::identity() - k * h;
    let p_post = ikh * p_prior * ikh.transpose() + k * track.r * k.transpose();
    let eps = z.centroid - h * x_post;
    let r_new = track.r * alpha + (eps * eps.transpose()) * (1.0 - alpha);
    let kd = k * d;
    let q_new = track.q * alpha + (kd * kd.transpose()) * (1.0 - alpha);
    let next = ObstacleTrack {
        id: track.id,
        state: x_post,
        covariance: psd_projection((p_post + p_post.transpose()) * 0.5),
        q: (q_new + q_new.transpose()) * 0.5,
        r: (r_new + r_new.transpose()) * 0.5,
        half_extents: track.half_extents,
        last_update: z.stamp,
    };
    Ok((next, AekfLog { innovation: d, residual: eps, gain: k, q_prev: track.q, r_prev: track.r }))
}

/// Clips negative eigenvalues left by round-off once the covariance has
/// shrunk to the scale of the rounding error of its own update.
fn psd_projection(p: Mat9) -> Mat9 {
    if p.cholesky().is_some() {
        return p;
    }
    let e = nalgebra::SymmetricEigen::new(p);
    let clipped = e.eigenvalues.map(|l| l.max(0.0));
    let m = e.eigenvectors * Mat9::from_diagonal(&clipped) * e.eigenvectors.transpose();
    (m + m.transpose()) * 0.5
}

/// Cube with the largest observed half extent, grown by `r_margin`.
pub fn cubify(half_extents: &Vec3, r_margin: f64) -> Vec3 {
    Vec3::repeat(half_extents.amax() + r_margin)
}

/// New track at the measurement with zero velocity and acceleration. `Q` and
/// `R` start at the mean over existing tracks, or the configured defaults.
pub fn initialize_track(z: &Measurement, existing: &[ObstacleTrack], cfg: &TrackerConfig, id: u64) -> ObstacleTrack {
    let (q, r) = if existing.is_empty() {
        (Mat9::identity() * cfg.q0, Matrix3::identity() * cfg.r0)
    } else {
        let k = existing.len() as f64;
        (
            existing.iter().fold(Mat9::zeros(), |acc, t| acc + t.q) / k,
            existing.iter().fold(Matrix3::zeros(), |acc, t| acc + t.r) / k,
        )
    };
    let mut state = State9::zeros();
    state.fixed_rows_mut::<3>(0).copy_from(&z.centroid);
    ObstacleTrack {
        id,
        state,
        covariance: q,
        q,
        r,
        half_extents: cubify(&z.half_extents, cfg.r_margin),
        last_update: z.stamp,
    }
}

/// Constant-velocity centers at `samples` uniform times in `[0, horizon]`.
pub fn predict(track: &ObstacleTrack, horizon: f64, samples: usize) -> Result<ObstaclePrediction, TrackerError> {
    if !(horizon > 0.0) {
        return Err(TrackerError::BadParam("horizon must be positive"));
    }
    if samples < 2 {
        return Err(TrackerError::BadParam("at least two samples"));
    }
    let (p, v) = (track.position(), track.velocity());
    let pts = (0..samples)
        .map(|j| {
            let t = horizon * j as f64 / (samples - 1) as f64;
            (t, p + v * t)
        })
        .collect();
    Ok(ObstaclePrediction::new(p, track.half_extents, pts).expect("uniform times increase"))
}

/// Drops tracks with `now − last_update > timeout`.
pub fn prune(tracks: Vec<ObstacleTrack>, timeout: f64, now: f64) -> Vec<ObstacleTrack> {
    tracks.into_iter().filter(|t| now - t.last_update <= timeout).collect()
}

/// Track set with id allocation, driven once per measurement batch.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub config: TrackerConfig,
    tracks: Vec<ObstacleTrack>,
    next_id: u64,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self, TrackerError> {
        if !(config.alpha > 0.0 && config.alpha < 1.0) {
            return Err(TrackerError::BadAlpha(config.alpha));
        }
        if !(config.gate > 0.0 && config.timeout > 0.0 && config.q0 > 0.0 && config.r0 > 0.0 && config.r_margin >= 0.0) {
            return Err(TrackerError::BadParam("gate, timeout, q0, r0 must be positive and r_margin non-negative"));
        }
        Ok(Tracker { config, tracks: Vec::new(), next_id: 0 })
    }

    pub fn tracks(&self) -> &[ObstacleTrack] {
        &self.tracks
    }

    /// Associate, filter matched tracks, spawn tracks for the rest, prune.
    pub fn update(&mut self, measurements: &[Measurement], now: f64) -> Result<(), TrackerError> {
        let assoc = associate(measurements, &self.tracks, self.config.gate);
        for &(i, j) in &assoc.pairs {
            let (mut t, _) = aekf_step(&self.tracks[j], &measurements[i], self.config.alpha)?;
            t.half_extents = cubify(&measurements[i].half_extents, self.config.r_margin);
            self.tracks[j] = t;
        }
        for &i in &assoc.unmatched_measurements {
            let t = initialize_track(&measurements[i], &self.tracks, &self.config, self.next_id);
            self.next_id += 1;
            self.tracks.push(t);
        }
        self.tracks = prune(std::mem::take(&mut self.tracks), self.config.timeout, now);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meas(p: Vec3, t: f64) -> Measurement {
        Measurement { centroid: p, half_extents: Vec3::new(0.2, 0.4, 0.3), stamp: t }
    }

    #[test]
    fn init_defaults_and_means() {
        let cfg = TrackerConfig::default();
        let t = initialize_track(&meas(Vec3::x(), 0.0), &[], &cfg, 0);
        assert_eq!(t.r, Matrix3::identity() * 0.05);
        assert!((t.half_extents - Vec3::repeat(0.5)).amax() < 1e-15);
        let mut a = t.clone();
        a.r = Matrix3::identity();
        let mut b = t.clone();
        b.r = Matrix3::identity() * 3.0;
        let c = initialize_track(&meas(Vec3::x(), 0.0), &[a, b], &cfg, 2);
        assert_eq!(c.r, Matrix3::identity() * 2.0);
    }

    #[test]
    fn stationary_zero_noise() {
        let cfg = TrackerConfig::default();
        let p = Vec3::new(1.0, 2.0, 3.0);
        let mut t = initialize_track(&meas(p, 0.0), &[], &cfg, 0);
        for k in 1..=20 {
            t = aekf_step(&t, &meas(p, 0.1 * k as f64), 0.9).unwrap().0;
        }
        assert!(t.velocity().norm() <= 1e-3);
    }

    #[test]
    fn prune_boundary_kept() {
        let cfg = TrackerConfig::default();
        let t = initialize_track(&meas(Vec3::zeros(), 1.0), &[], &cfg, 0);
        assert_eq!(prune(vec![t.clone()], 1.0, 2.0).len(), 1);
        assert_eq!(prune(vec![t], 1.0, 2.0 + 1e-9).len(), 0);
    }

    #[test]
    fn predict_is_constant_velocity() {
        let cfg = TrackerConfig::default();
        let mut t = initialize_track(&meas(Vec3::zeros(), 0.0), &[], &cfg, 0);
        t.state[6] = 3.0;
        let pr = predict(&t, 2.0, 5).unwrap();
        assert!(pr.samples().iter().all(|(_, c)| *c == Vec3::zeros()));
        t.state[3] = 1.0;
        let pr = predict(&t, 2.0, 5).unwrap();
        assert_eq!(pr.samples().last().unwrap().1, Vec3::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_past_measurement() {
        let cfg = TrackerConfig::default();
        let t = initialize_track(&meas(Vec3::zeros(), 1.0), &[], &cfg, 0);
        assert!(matches!(aekf_step(&t, &meas(Vec3::zeros(), 0.5), 0.9), Err(TrackerError::NonMonotoneStamp { .. })));
    }
}
