//! Static and dynamic soft-cost fields, combined by max and capped.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{VoxelGrid, VoxelMask};
use crate::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatError {
    #[error("invalid heat parameter: {0}")]
    BadParam(&'static str),
    #[error("query point is outside the grid")]
    OutOfBounds,
    #[error("prediction sample times must be strictly increasing")]
    NonMonotoneSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatParams {
    pub alpha_s: f64,
    pub p_s: f64,
    pub r_s: f64,
    pub h_max: f64,
    pub alpha_d0: f64,
    pub alpha_d1: f64,
    pub p_d: f64,
    pub q_d: f64,
    pub gamma_k: f64,
    pub tau_ratio: f64,
    pub m_tube: usize,
    pub t_h: f64,
    pub r_margin: f64,
    pub v_obs_max: f64,
}

impl Default for HeatParams {
    fn default() -> Self {
        HeatParams {
            alpha_s: 5.0,
            p_s: 2.0,
            r_s: 0.3,
            h_max: 50.0,
            alpha_d0: 1.0,
            alpha_d1: 2.0,
            p_d: 2.0,
            q_d: 2.0,
            gamma_k: 0.5,
            tau_ratio: 0.5,
            m_tube: 10,
            t_h: 2.0,
            r_margin: 0.1,
            v_obs_max: 0.5,
        }
    }
}

impl HeatParams {
    pub fn validate(&self) -> Result<(), HeatError> {
        let scales = [self.alpha_s, self.r_s, self.alpha_d0, self.alpha_d1, self.gamma_k, self.t_h, self.r_margin, self.v_obs_max];
        if scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(HeatError::BadParam("scales must be finite and non-negative"));
        }
        if [self.p_s, self.p_d, self.q_d].iter().any(|p| !(*p >= 1.0)) {
            return Err(HeatError::BadParam("exponents must be at least 1"));
        }
        if !(self.h_max > 0.0) {
            return Err(HeatError::BadParam("H_max must be positive"));
        }
        if !(self.tau_ratio > 0.0 && self.tau_ratio <= 1.0) {
            return Err(HeatError::BadParam("tau_ratio must lie in (0, 1]"));
        }
        if self.m_tube < 2 {
            return Err(HeatError::BadParam("M_tube must be at least 2"));
        }
        Ok(())
    }
}

/// Predicted motion of one obstacle over the heat horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstaclePrediction {
    pub current_center: Vec3,
    pub half_extents: Vec3,
    samples: Vec<(f64, Vec3)>,
}

impl ObstaclePrediction {
    /// Sample times must be strictly increasing.
    pub fn new(current_center: Vec3, half_extents: Vec3, samples: Vec<(f64, Vec3)>) -> Result<Self, HeatError> {
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(HeatError::NonMonotoneSamples);
        }
        Ok(ObstaclePrediction { current_center, half_extents, samples })
    }

    pub fn samples(&self) -> &[(f64, Vec3)] {
        &self.samples
    }
}

/// Static heat sources of one grid snapshot: occupied voxels with a free face neighbor.
#[derive(Debug, Clone)]
pub struct StaticHeat<'a> {
    grid: &'a VoxelGrid,
    sources: VoxelMask,
    params: HeatParams,
}

impl<'a> StaticHeat<'a> {
    pub fn new(grid: &'a VoxelGrid, params: HeatParams) -> Self {
        StaticHeat { grid, sources: grid.occupied_boundary(), params }
    }

    pub fn sources(&self) -> &VoxelMask {
        &self.sources
    }

    pub fn query(&self, q: &Vec3) -> Result<f64, HeatError> {
        let grid = self.grid;
        let idx = grid.index_of(q).ok_or(HeatError::OutOfBounds)?;
        let p = &self.params;
        if p.r_s <= 0.0 || p.alpha_s == 0.0 {
            return Ok(0.0);
        }
        let k = (p.r_s / grid.resolution()).ceil() as i64 + 1;
        let mut best: f64 = 0.0;
        for dx in -k..=k {
            for dy in -k..=k {
                for dz in -k..=k {
                    let Some(v) = grid.offset(idx, [dx, dy, dz]) else { continue };
                    if !self.sources.contains(v) {
                        continue;
                    }
                    let d = (q - grid.center(v)).norm();
                    if d <= p.r_s {
                        best = best.max(p.alpha_s * (1.0 - d / p.r_s).powf(p.p_s));
                    }
                }
            }
        }
        Ok(best.min(p.h_max))
    }
}

/// Static heat at `q`; rebuilds the source set, so prefer [`StaticHeat`] for repeated queries.
pub fn static_heat(grid: &VoxelGrid, params: &HeatParams, q: &Vec3) -> Result<f64, HeatError> {
    StaticHeat::new(grid, *params).query(q)
}

/// Max over obstacles of base heat around the current center plus the
/// time-weighted tube heat around predicted centers.
pub fn dynamic_heat(preds: &[ObstaclePrediction], params: &HeatParams, q: &Vec3) -> f64 {
    let p = params;
    let mut best: f64 = 0.0;
    for pred in preds {
        let r0 = pred.half_extents.amax() + p.r_margin;
        let rd = r0 + p.v_obs_max * p.t_h;
        let d0 = (q - pred.current_center).norm();
        let base = if rd > 0.0 && d0 <= rd { p.alpha_d0 * (1.0 - d0 / rd).powf(p.p_d) } else { 0.0 };
        let tau = p.tau_ratio * p.t_h;
        let mut tube: f64 = 0.0;
        for (t, c) in pred.samples() {
            let r = r0 + p.gamma_k * t;
            if r <= 0.0 {
                continue;
            }
            let s = (1.0 - (q - c).norm() / r).max(0.0);
            if s > 0.0 {
                let w = if tau > 0.0 { (-t / tau).exp() } else { 0.0 };
                tube = tube.max(w * s.powf(p.q_d));
            }
        }
        best = best.max(base + p.alpha_d1 * tube);
    }
    best
}

/// `min(max(static, dynamic), H_max)`.
pub fn combined_heat(static_h: f64, dynamic_h: f64, h_max: f64) -> f64 {
    static_h.max(dynamic_h).min(h_max)
}

/// Full heat field for one planning snapshot.
pub struct HeatField<'a> {
    pub static_heat: StaticHeat<'a>,
    pub predictions: &'a [ObstaclePrediction],
    pub params: HeatParams,
}

impl HeatField<'_> {
    pub fn eval(&self, q: &Vec3) -> f64 {
        let s = self.static_heat.query(q).unwrap_or(0.0);
        combined_heat(s, dynamic_heat(self.predictions, &self.params, q), self.params.h_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Cell;

    fn pred_at(c: Vec3, samples: Vec<(f64, Vec3)>) -> ObstaclePrediction {
        ObstaclePrediction::new(c, Vec3::repeat(0.2), samples).unwrap()
    }

    #[test]
    fn static_peak_equals_alpha() {
        let mut g = VoxelGrid::new(Vec3::zeros(), 0.1, [10, 10, 10], Cell::Free).unwrap();
        g.set([5, 5, 5], Cell::Occupied).unwrap();
        let p = HeatParams::default();
        assert!((static_heat(&g, &p, &g.center([5, 5, 5])).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(static_heat(&g, &p, &g.center([0, 0, 0])).unwrap(), 0.0);
        assert!(static_heat(&g, &p, &Vec3::repeat(-1.0)).is_err());
    }

    #[test]
    fn dynamic_examples() {
        let p = HeatParams::default();
        let c = Vec3::new(1.0, 2.0, 3.0);
        let pr = pred_at(c, vec![(0.0, c), (1.0, c + Vec3::x())]);
        assert!((dynamic_heat(&[pr], &p, &c) - 3.0).abs() < 1e-12);
        assert_eq!(dynamic_heat(&[], &p, &c), 0.0);
        let tau = p.tau_ratio * p.t_h;
        let far = Vec3::new(50.0, 0.0, 0.0);
        let single = pred_at(Vec3::new(-50.0, 0.0, 0.0), vec![(tau, far)]);
        assert!((dynamic_heat(&[single], &p, &far) - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn combine() {
        assert_eq!(combined_heat(3.0, 7.0, 50.0), 7.0);
        assert_eq!(combined_heat(60.0, 0.0, 50.0), 50.0);
        assert_eq!(combined_heat(0.0, 0.0, 50.0), 0.0);
    }

    #[test]
    fn rejects_bad_samples_and_params() {
        assert!(ObstaclePrediction::new(Vec3::zeros(), Vec3::repeat(1.0), vec![(0.0, Vec3::zeros()), (0.0, Vec3::zeros())]).is_err());
        let bad = HeatParams { m_tube: 1, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(HeatParams::default().validate().is_ok());
    }
}
