use std::time::Duration;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Scenario, SimError};
use crate::bezier::{CompositeTrajectory, DynamicLimits, TrajState};
use crate::miqp::BoundaryState;
use crate::replan::{plan_once, verify_theorem1, FactorWindow, SafetyCheckParams, SafetyReport, Snapshot};
use crate::stsfc::Stsfc;
use crate::tracker::{Measurement, Tracker};
use crate::world::{Cell, VoxelGrid};
use crate::Vec3;

/// Tolerance for limit and corridor checks on logged samples.
const RHO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSample {
    pub t: f64,
    pub state: TrajState,
    /// `None` while no trajectory has been planned.
    pub in_corridor: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    pub t: f64,
    pub success: bool,
    pub factor: Option<f64>,
    pub cause: Option<String>,
    pub t_replan: Duration,
    pub t_global: Duration,
    pub t_stsfc: Duration,
    pub t_opt: Duration,
    /// Corridor plus solver time over every factor that ran.
    pub t_solve: Duration,
    /// Wall time of each individual optimization (one per factor whose solver ran).
    pub opt_runs: Vec<Duration>,
    pub safety: Option<SafetyReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub name: String,
    pub seed: u64,
    pub sample_dt: f64,
    pub limits: DynamicLimits,
    pub samples: Vec<LogSample>,
    pub replans: Vec<ReplanRecord>,
    pub success: bool,
    pub collisions: usize,
    pub t_trav: f64,
}

/// Deterministic per-episode results; `metrics.csv` has one row of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub scenario: String,
    pub seed: u64,
    pub success: bool,
    pub collisions: usize,
    pub t_trav: f64,
    pub l_path: f64,
    pub s_jerk: f64,
    pub rho_sfc: f64,
    pub rho_vel: f64,
    pub rho_acc: f64,
    pub rho_jerk: f64,
    pub replans: usize,
    pub replan_failures: usize,
    pub samples: usize,
}

/// Wall-clock aggregates in milliseconds; kept apart because they vary run to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTimings {
    pub scenario: String,
    pub seed: u64,
    pub replans: usize,
    pub t_replan_mean: f64,
    pub t_replan_std: f64,
    pub t_global_mean: f64,
    pub t_global_std: f64,
    pub t_stsfc_mean: f64,
    pub t_stsfc_std: f64,
    pub t_opt_mean: f64,
    pub t_opt_std: f64,
    pub t_solve_mean: f64,
    pub t_solve_std: f64,
    /// Number of individual optimizations and their mean wall time.
    pub opt_calls: usize,
    pub t_per_opt_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub in_corridor: Option<bool>,
}

impl From<&LogSample> for TraceRow {
    fn from(s: &LogSample) -> Self {
        let (p, v, a, j) = (s.state.position, s.state.velocity, s.state.acceleration, s.state.jerk);
        TraceRow {
            t: s.t,
            px: p.x,
            py: p.y,
            pz: p.z,
            vx: v.x,
            vy: v.y,
            vz: v.z,
            ax: a.x,
            ay: a.y,
            az: a.z,
            jx: j.x,
            jy: j.y,
            jz: j.z,
            in_corridor: s.in_corridor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub metrics: EpisodeMetrics,
    pub timings: EpisodeTimings,
    pub trace: Vec<TraceRow>,
    pub log: EpisodeLog,
    /// Observed map at the end of the episode.
    pub final_grid: VoxelGrid,
}

fn mean_std_ms(xs: impl Iterator<Item = Duration> + Clone) -> (f64, f64) {
    let v: Vec<f64> = xs.map(|d| d.as_secs_f64() * 1e3).collect();
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

/// Path length, L1 jerk integral (trapezoid), violation percentages and timing aggregates.
pub fn compute_metrics(log: &EpisodeLog) -> Result<(EpisodeMetrics, EpisodeTimings), SimError> {
    let s = &log.samples;
    if s.is_empty() {
        return Err(SimError::EmptyLog);
    }
    let l_path = s.windows(2).map(|w| (w[1].state.position - w[0].state.position).norm()).sum();
    let s_jerk = s
        .windows(2)
        .map(|w| 0.5 * (w[0].state.jerk.norm() + w[1].state.jerk.norm()) * (w[1].t - w[0].t))
        .sum();
    let lim = &log.limits;
    let pct = |k: usize| 100.0 * k as f64 / s.len() as f64;
    let count = |f: &dyn Fn(&LogSample) -> bool| s.iter().filter(|x| f(x)).count();
    let metrics = EpisodeMetrics {
        scenario: log.name.clone(),
        seed: log.seed,
        success: log.success,
        collisions: log.collisions,
        t_trav: log.t_trav,
        l_path,
        s_jerk,
        rho_sfc: pct(count(&|x| x.in_corridor == Some(false))),
        rho_vel: pct(count(&|x| x.state.velocity.amax() > lim.v_max + RHO_TOL)),
        rho_acc: pct(count(&|x| x.state.acceleration.amax() > lim.a_max + RHO_TOL)),
        rho_jerk: pct(count(&|x| x.state.jerk.amax() > lim.j_max + RHO_TOL)),
        replans: log.replans.len(),
        replan_failures: log.replans.iter().filter(|r| !r.success).count(),
        samples: s.len(),
    };
    let r = &log.replans;
    let (t_replan_mean, t_replan_std) = mean_std_ms(r.iter().map(|x| x.t_replan));
    let (t_global_mean, t_global_std) = mean_std_ms(r.iter().map(|x| x.t_global));
    let (t_stsfc_mean, t_stsfc_std) = mean_std_ms(r.iter().map(|x| x.t_stsfc));
    let (t_opt_mean, t_opt_std) = mean_std_ms(r.iter().map(|x| x.t_opt));
    let (t_solve_mean, t_solve_std) = mean_std_ms(r.iter().map(|x| x.t_solve));
    let (t_per_opt_mean, _) = mean_std_ms(r.iter().flat_map(|x| x.opt_runs.iter().copied()));
    let opt_calls = r.iter().map(|x| x.opt_runs.len()).sum();
    let timings = EpisodeTimings {
        scenario: log.name.clone(),
        seed: log.seed,
        replans: r.len(),
        t_replan_mean,
        t_replan_std,
        t_global_mean,
        t_global_std,
        t_stsfc_mean,
        t_stsfc_std,
        t_opt_mean,
        t_opt_std,
        t_solve_mean,
        t_solve_std,
        opt_calls,
        t_per_opt_mean,
    };
    Ok((metrics, timings))
}

/// Copies ground truth into the observed map within `range` of `p`.
fn reveal(observed: &mut VoxelGrid, truth: &VoxelGrid, p: &Vec3, range: f64) {
    let res = observed.resolution();
    let dims = observed.dims();
    let o = observed.origin();
    let lo = [0, 1, 2].map(|i| (((p[i] - range - o[i]) / res).floor().max(0.0) as usize).min(dims[i] - 1));
    let hi = [0, 1, 2].map(|i| (((p[i] + range - o[i]) / res).floor().max(0.0) as usize).min(dims[i] - 1));
    let r2 = range * range;
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            for z in lo[2]..=hi[2] {
                let v = [x, y, z];
                if (observed.center(v) - p).norm_squared() <= r2 {
                    let l = observed.linear(v);
                    observed.set_linear(l, truth.cells()[l]);
                }
            }
        }
    }
}

struct Active {
    traj: CompositeTrajectory,
    corridor: Stsfc,
    assignment: Vec<usize>,
}

impl Active {
    fn in_corridor(&self, t: f64, p: &Vec3) -> bool {
        let n = if t >= self.traj.t_end() { self.traj.pieces().len() - 1 } else { self.traj.locate(t).0 };
        self.corridor.cell(n, self.assignment[n]).is_some_and(|c| c.contains_tol(p, RHO_TOL))
    }
}

/// Runs one closed-loop episode under perfect trajectory tracking.
///
/// Planning is treated as instantaneous in simulated time. When `verify` is
/// given, every successful plan is also passed through the safety verifier.
pub fn step_episode(scenario: &Scenario, verify: Option<&SafetyCheckParams>) -> Result<Episode, SimError> {
    scenario.validate()?;
    let truth = scenario.truth_grid()?;
    let mut observed = truth.clone();
    if scenario.unknown_initially {
        observed.fill(Cell::Unknown);
    }
    let mut rng: ChaCha8Rng = scenario.rng();
    let noise = Normal::new(0.0, scenario.noise_sigma.max(0.0)).map_err(|e| SimError::Scenario(e.to_string()))?;
    let clip = 3.0 * scenario.noise_sigma.max(0.0);
    let mut tracker = Tracker::new(scenario.tracker).map_err(|e| SimError::Scenario(e.to_string()))?;
    let cfg = &scenario.planner;
    let mut window = FactorWindow::new(cfg.factor_step, cfg.factor_half_width, cfg.f_max).map_err(|e| SimError::Scenario(e.to_string()))?;
    let dt = scenario.sim_dt;
    let steps = (scenario.timeout / dt).round() as usize;
    let period = ((scenario.replan_period / dt).round() as usize).max(1);
    let mut active: Option<Active> = None;
    let mut samples = Vec::with_capacity(steps.min(200_000) + 1);
    let mut replans = Vec::new();
    let (mut success, mut collisions, mut t_trav) = (false, 0, scenario.timeout);

    for k in 0..=steps {
        let t = k as f64 * dt;
        // Follow the last successful plan; past its end it holds the final point
        // at rest, and before any plan the agent hovers at the start.
        let state = match &active {
            Some(a) => a.traj.sample_clamped(t),
            None => TrajState::at_rest(scenario.start),
        };
        if k % period == 0 {
            let p = state.position;
            if scenario.unknown_initially {
                reveal(&mut observed, &truth, &p, scenario.sensing_range);
            }
            let meas: Vec<Measurement> = scenario
                .dynamic
                .iter()
                .filter_map(|d| {
                    let c = d.motion.position(t);
                    ((c - p).norm() <= scenario.sensing_range).then_some((c, d.half_extents))
                })
                .map(|(c, h)| {
                    let e = Vec3::from_fn(|_, _| noise.sample(&mut rng).clamp(-clip, clip));
                    Measurement { centroid: c + e, half_extents: h, stamp: t }
                })
                .collect();
            tracker.update(&meas, t).map_err(|e| SimError::Scenario(e.to_string()))?;
            let snap = Snapshot {
                grid: &observed,
                tracks: tracker.tracks(),
                state: BoundaryState { position: p, velocity: state.velocity, acceleration: state.acceleration },
                goal: scenario.goal,
                t0: t,
            };
            let out = plan_once(&snap, cfg, &window);
            window.update(out.winning_factor());
            let t_solve = out.diagnostics.iter().map(|d| d.t_stsfc + d.t_opt).sum();
            let mut rec = ReplanRecord {
                t,
                success: out.success().is_some(),
                factor: out.winning_factor(),
                cause: match &out.result {
                    crate::replan::PlanResult::AllFailed { cause } => Some(cause.clone()),
                    _ => None,
                },
                t_replan: out.timing.t_replan,
                t_global: out.timing.t_global,
                t_stsfc: out.timing.t_stsfc,
                t_opt: out.timing.t_opt,
                t_solve,
                opt_runs: out.diagnostics.iter().filter(|d| d.solver_ran()).map(|d| d.t_opt).collect(),
                safety: None,
            };
            if let Some(s) = out.success() {
                if let Some(vp) = verify {
                    let boxes: Vec<_> = tracker.tracks().iter().map(|tr| tr.aabb()).collect();
                    rec.safety = Some(verify_theorem1(&s.trajectory, &s.corridor, &s.assignment, &boxes, vp));
                }
                active = Some(Active { traj: s.trajectory.clone(), corridor: s.corridor.clone(), assignment: s.assignment.clone() });
            }
            replans.push(rec);
        }
        let in_corridor = active.as_ref().map(|a| a.in_corridor(t, &state.position));
        samples.push(LogSample { t, state, in_corridor });
        if scenario.in_collision(&state.position, t) {
            collisions += 1;
            break;
        }
        if (state.position - scenario.goal).norm() <= scenario.goal_tolerance {
            success = true;
            t_trav = t;
            break;
        }
    }
    let log = EpisodeLog {
        name: scenario.name.clone(),
        seed: scenario.seed,
        sample_dt: dt,
        limits: cfg.limits,
        samples,
        replans,
        success,
        collisions,
        t_trav,
    };
    let (metrics, timings) = compute_metrics(&log)?;
    let stride = scenario.trace_stride.max(1);
    let trace = log.samples.iter().step_by(stride).map(TraceRow::from).collect();
    Ok(Episode { metrics, timings, trace, log, final_grid: observed })
}
