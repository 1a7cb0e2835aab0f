//! Seeded scenario generators. Ranges are local choices, not published values.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::{trefoil_speed_for, Cylinder, DynamicObstacle, Motion, Scenario, TrefoilParams};
use crate::bezier::DynamicLimits;
use crate::replan::PlannerConfig;
use crate::stsfc::SfcMode;
use crate::Vec3;

/// Obstacle-free arena.
pub fn empty(seed: u64) -> Scenario {
    Scenario { name: "empty".into(), seed, ..Default::default() }
}

fn place_cylinders(rng: &mut ChaCha8Rng, s: &Scenario, count: usize, r: (f64, f64), keep_out: f64) -> Vec<Cylinder> {
    let mut out: Vec<Cylinder> = Vec::new();
    let (lo, hi) = (s.bounds_min, s.bounds_max);
    let mut tries = 0;
    while out.len() < count && tries < 100 * count {
        tries += 1;
        let radius = rng.random_range(r.0..=r.1);
        let c = [rng.random_range(lo.x + radius..hi.x - radius), rng.random_range(lo.y + radius..hi.y - radius)];
        let clear = |p: &Vec3| ((c[0] - p.x).powi(2) + (c[1] - p.y).powi(2)).sqrt() > radius + keep_out;
        let apart = out.iter().all(|o| ((c[0] - o.center[0]).powi(2) + (c[1] - o.center[1]).powi(2)).sqrt() > radius + o.radius + 0.8);
        if clear(&s.start) && clear(&s.goal) && apart {
            out.push(Cylinder { center: c, radius, height: hi.z - lo.z + 1.0 });
        }
    }
    out
}

/// Static forest on a desk-scale 30 × 15 m arena with partially unknown map.
pub fn static_forest(seed: u64, count: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Scenario {
        name: format!("static_forest_{count}"),
        seed,
        bounds_min: Vec3::new(0.0, 0.0, 0.0),
        bounds_max: Vec3::new(30.0, 15.0, 4.0),
        start: Vec3::new(1.5, 7.5, 1.5),
        goal: Vec3::new(28.5, 7.5, 1.5),
        unknown_initially: true,
        sensing_range: 6.0,
        timeout: 90.0,
        planner: PlannerConfig {
            deterministic: true,
            limits: DynamicLimits { v_max: 3.0, a_max: 10.0, j_max: 40.0 },
            horizon: 4.0,
            ..Default::default()
        },
        ..Default::default()
    };
    s.cylinders = place_cylinders(&mut rng, &s, count, (0.3, 0.6), 1.2);
    s
}

/// Trefoil obstacles crossing the start–goal line, each at most `v_obs_max` per axis.
pub fn dynamic_trefoil(seed: u64, count: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Scenario {
        name: format!("dynamic_trefoil_{count}"),
        seed,
        bounds_min: Vec3::new(0.0, 0.0, 0.0),
        bounds_max: Vec3::new(14.0, 8.0, 4.0),
        start: Vec3::new(1.0, 4.0, 2.0),
        goal: Vec3::new(13.0, 4.0, 2.0),
        timeout: 60.0,
        planner: PlannerConfig {
            deterministic: true,
            limits: DynamicLimits { v_max: 3.0, a_max: 10.0, j_max: 40.0 },
            horizon: 4.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let v = s.planner.corridor.v_obs_max;
    for _ in 0..count {
        let scale = rng.random_range(0.8..1.6);
        let center = Vec3::new(rng.random_range(4.0..10.0), rng.random_range(2.5..5.5), rng.random_range(1.7..2.3));
        let h = rng.random_range(0.15..0.3);
        s.dynamic.push(DynamicObstacle {
            motion: Motion::Trefoil(TrefoilParams {
                center,
                scale,
                speed: trefoil_speed_for(scale, v),
                offset: rng.random_range(0.0..std::f64::consts::TAU),
            }),
            half_extents: Vec3::repeat(h),
        });
    }
    s
}

/// Dense desk-scale dynamic suite used for the corridor ablation.
pub fn dense_dynamic(seed: u64, v_max: f64, mode: SfcMode) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut s = dynamic_trefoil(seed, 0);
    s.name = format!("dense_dynamic_v{v_max}_{}", match mode {
        SfcMode::Spatiotemporal => "stsfc",
        SfcMode::WorstCase => "worst_case",
    });
    s.bounds_max = Vec3::new(20.0, 8.0, 4.0);
    s.goal = Vec3::new(19.0, 4.0, 2.0);
    s.planner.limits = DynamicLimits { v_max, a_max: 4.0 * v_max, j_max: 20.0 * v_max };
    s.planner.horizon = 1.5 * v_max;
    s.planner.corridor.mode = mode;
    s.cylinders = place_cylinders(&mut rng, &s, 6, (0.3, 0.5), 1.5);
    let v = s.planner.corridor.v_obs_max;
    for _ in 0..8 {
        let scale = rng.random_range(0.8..1.6);
        let center = Vec3::new(rng.random_range(4.0..16.0), rng.random_range(2.5..5.5), rng.random_range(1.7..2.3));
        s.dynamic.push(DynamicObstacle {
            motion: Motion::Trefoil(TrefoilParams {
                center,
                scale,
                speed: trefoil_speed_for(scale, v),
                offset: rng.random_range(0.0..std::f64::consts::TAU),
            }),
            half_extents: Vec3::repeat(rng.random_range(0.15..0.3)),
        });
    }
    s
}

/// An obstacle sweeping across the path at `speed_factor` times the assumed bound.
pub fn negative_control(seed: u64, speed_factor: f64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = dynamic_trefoil(seed, 0);
    s.name = format!("negative_control_x{speed_factor}");
    let v = s.planner.corridor.v_obs_max * speed_factor;
    let x = rng.random_range(5.0..9.0);
    s.dynamic.push(DynamicObstacle {
        motion: Motion::Line { p0: Vec3::new(x, 1.0, 2.0), p1: Vec3::new(x, 7.0, 2.0), speed: v },
        half_extents: Vec3::repeat(0.3),
    });
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_respect_speed() {
        for seed in 0..5 {
            for s in [empty(seed), static_forest(seed, 20), dynamic_trefoil(seed, 4), dense_dynamic(seed, 2.5, SfcMode::WorstCase)] {
                s.validate().unwrap();
                for d in &s.dynamic {
                    assert!(d.motion.axis_speed_bound() <= s.planner.corridor.v_obs_max + 1e-12);
                }
            }
        }
    }
}
