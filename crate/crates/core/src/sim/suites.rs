use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{presets, step_episode, EpisodeMetrics, EpisodeTimings, Scenario, SimError};
use crate::miqp::{instances, solve_bnb, solve_enumerate, solve_without_elimination, MiqpError, MiqpSolution};
use crate::replan::{SafetyCheckParams, SafetyReport};
use crate::stsfc::SfcMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scenario: String,
    pub episodes: usize,
    pub success_rate: f64,
    pub collisions: usize,
    pub t_trav_mean: f64,
    pub t_trav_std: f64,
    pub l_path_mean: f64,
    pub l_path_std: f64,
    pub s_jerk_mean: f64,
    pub s_jerk_std: f64,
    pub rho_sfc_mean: f64,
    pub rho_vel_mean: f64,
    pub rho_acc_mean: f64,
    pub rho_jerk_mean: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (m, (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt())
}

/// Per-scenario aggregates; path statistics are over successful episodes only.
pub fn aggregate(rows: &[EpisodeMetrics]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<&str, Vec<&EpisodeMetrics>> = BTreeMap::new();
    for r in rows {
        groups.entry(&r.scenario).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(name, g)| {
            let ok: Vec<_> = g.iter().filter(|r| r.success).collect();
            let col = |f: fn(&EpisodeMetrics) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (t_trav_mean, t_trav_std) = mean_std(&col(|r| r.t_trav));
            let (l_path_mean, l_path_std) = mean_std(&col(|r| r.l_path));
            let (s_jerk_mean, s_jerk_std) = mean_std(&col(|r| r.s_jerk));
            let all = |f: fn(&EpisodeMetrics) -> f64| mean_std(&g.iter().map(|r| f(r)).collect::<Vec<_>>()).0;
            Aggregate {
                scenario: name.to_string(),
                episodes: g.len(),
                success_rate: 100.0 * ok.len() as f64 / g.len() as f64,
                collisions: g.iter().map(|r| r.collisions).sum(),
                t_trav_mean,
                t_trav_std,
                l_path_mean,
                l_path_std,
                s_jerk_mean,
                s_jerk_std,
                rho_sfc_mean: all(|r| r.rho_sfc),
                rho_vel_mean: all(|r| r.rho_vel),
                rho_acc_mean: all(|r| r.rho_acc),
                rho_jerk_mean: all(|r| r.rho_jerk),
            }
        })
        .collect()
}

/// Runs every scenario `repetitions` times with seeds `seed, seed+1, …`.
pub fn run_suite(scenarios: &[Scenario], repetitions: usize) -> Result<(Vec<EpisodeMetrics>, Vec<EpisodeTimings>, Vec<Aggregate>), SimError> {
    let mut rows = Vec::new();
    let mut times = Vec::new();
    for s in scenarios {
        for r in 0..repetitions {
            let mut sc = s.clone();
            sc.seed = s.seed + r as u64;
            let ep = step_episode(&sc, None)?;
            rows.push(ep.metrics);
            times.push(ep.timings);
        }
    }
    let agg = aggregate(&rows);
    Ok((rows, times, agg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VeRow {
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub feasible_ve: bool,
    pub feasible_no_ve: bool,
    pub feasible_enum: bool,
    pub j_ve: f64,
    pub j_no_ve: f64,
    pub j_enum: f64,
    /// Largest sampled position gap between the two formulations (m).
    pub traj_gap: f64,
    pub t_ve_ms: f64,
    pub t_no_ve_ms: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64() * 1e3)
}

fn objective(r: &Result<MiqpSolution, MiqpError>) -> f64 {
    r.as_ref().map(|s| s.objective).unwrap_or(f64::NAN)
}

/// Elimination on/off and exhaustive enumeration over the seeded instance suite.
pub fn ablate_ve(count: usize, base_seed: u64) -> Vec<VeRow> {
    instances::suite(count, base_seed)
        .into_iter()
        .map(|(seed, n, p)| {
            let prob = instances::random_instance(seed, n, p).expect("generator builds valid problems");
            let (ve, t_ve_ms) = timed(|| solve_bnb(&prob, None));
            let (nove, t_no_ve_ms) = timed(|| solve_without_elimination(&prob, None));
            let en = solve_enumerate(&prob);
            let traj_gap = match (&ve, &nove) {
                (Ok(a), Ok(b)) => {
                    let (t0, t1) = (a.trajectory.t0(), a.trajectory.t_end());
                    let k = ((t1 - t0) / 1e-3).ceil() as usize;
                    (0..=k)
                        .map(|i| {
                            let t = (t0 + i as f64 * 1e-3).min(t1);
                            (a.trajectory.sample_clamped(t).position - b.trajectory.sample_clamped(t).position).norm()
                        })
                        .fold(0.0, f64::max)
                }
                _ => 0.0,
            };
            VeRow {
                seed,
                n,
                p,
                feasible_ve: ve.is_ok(),
                feasible_no_ve: nove.is_ok(),
                feasible_enum: en.is_ok(),
                j_ve: objective(&ve),
                j_no_ve: objective(&nove),
                j_enum: objective(&en),
                traj_gap,
                t_ve_ms,
                t_no_ve_ms,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfcAblationRow {
    pub seed: u64,
    pub v_max: f64,
    pub mode: SfcMode,
    pub success: bool,
    pub collisions: usize,
    pub replans: usize,
    pub replan_failures: usize,
    /// Mean corridor plus solver time per planning call (ms).
    pub t_solve_mean: f64,
    pub opt_calls: usize,
    /// Mean wall time of one optimization (ms).
    pub t_per_opt_mean: f64,
    pub t_replan_mean: f64,
}

/// Both corridor modes on the dense dynamic suite at each agent speed.
pub fn ablate_sfc(seeds: &[u64], speeds: &[f64]) -> Result<Vec<SfcAblationRow>, SimError> {
    let mut out = Vec::new();
    for &v in speeds {
        for mode in [SfcMode::Spatiotemporal, SfcMode::WorstCase] {
            for &seed in seeds {
                let ep = step_episode(&presets::dense_dynamic(seed, v, mode), None)?;
                out.push(SfcAblationRow {
                    seed,
                    v_max: v,
                    mode,
                    success: ep.metrics.success,
                    collisions: ep.metrics.collisions,
                    replans: ep.metrics.replans,
                    replan_failures: ep.metrics.replan_failures,
                    t_solve_mean: ep.timings.t_solve_mean,
                    opt_calls: ep.timings.opt_calls,
                    t_per_opt_mean: ep.timings.t_per_opt_mean,
                    t_replan_mean: ep.timings.t_replan_mean,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SafetySummary {
    pub episodes: usize,
    pub successes: usize,
    /// Sampled agent–obstacle intersections in closed-loop episodes.
    pub collisions: usize,
    pub plans_verified: usize,
    pub verifier: SafetyReport,
    /// Largest violation percentages over the successful episodes.
    pub max_rho_sfc: f64,
    pub max_rho_limits: f64,
}

impl SafetySummary {
    fn absorb(&mut self, r: &SafetyReport) {
        let v = &mut self.verifier;
        v.samples += r.samples;
        v.motions += r.motions;
        v.corridor_violations += r.corridor_violations;
        v.containment_violations += r.containment_violations;
        v.disjointness_violations += r.disjointness_violations;
        v.collisions += r.collisions;
    }
}

/// Closed-loop episodes with every plan checked by the safety verifier.
///
/// With `speed_factor == 1` the episodes are trefoil scenes inside the
/// assumed bounds; above 1 they are the negative-control scenes and the
/// verifier's adversary moves at the same inflated speed.
pub fn safety_suite(episodes: usize, base_seed: u64, speed_factor: f64, motions: usize) -> Result<SafetySummary, SimError> {
    let mut sum = SafetySummary::default();
    for i in 0..episodes {
        let seed = base_seed + i as u64;
        let sc = if speed_factor > 1.0 {
            presets::negative_control(seed, speed_factor)
        } else {
            presets::dynamic_trefoil(seed, 3 + (i % 3))
        };
        let c = &sc.planner.corridor;
        let params = SafetyCheckParams {
            v_obs_max: c.v_obs_max,
            epsilon: c.epsilon,
            sample_dt: 1e-3,
            adversary_speed: c.v_obs_max * speed_factor,
            motions,
            seed,
        };
        let ep = step_episode(&sc, Some(&params))?;
        sum.episodes += 1;
        sum.successes += ep.metrics.success as usize;
        sum.collisions += ep.metrics.collisions;
        if ep.metrics.success {
            sum.max_rho_sfc = sum.max_rho_sfc.max(ep.metrics.rho_sfc);
            sum.max_rho_limits = sum.max_rho_limits.max(ep.metrics.rho_vel).max(ep.metrics.rho_acc).max(ep.metrics.rho_jerk);
        }
        for r in ep.log.replans.iter().filter_map(|r| r.safety.as_ref()) {
            sum.plans_verified += 1;
            sum.absorb(r);
        }
    }
    Ok(sum)
}
