//! Receding-horizon replanning: factor window, single planning cycle, fallback
//! and the continuous-time safety verifier.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bezier::{CompositeTrajectory, DynamicLimits};
use crate::global_planner::{self, downsample, select_subgoal, walk_back_from_boxes, GlobalPath, PlanError};
use crate::heatmap::{HeatField, HeatParams, StaticHeat};
use crate::miqp::{solve_bnb, BoundaryState, MiqpError, MiqpProblem, SolverStats};
use crate::stsfc::{reachable_radius, CorridorContext, CorridorParams, Stsfc};
use crate::tracker::{predict, ObstacleTrack};
use crate::world::{minkowski_inflate, polytope_disjoint_from_aabb, Aabb, Cell, VoxelGrid};
use crate::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplanError {
    #[error("factor step and half width must be positive, got {step} and {half_width}")]
    BadWindow { step: f64, half_width: f64 },
    #[error("f_max {0} must be at least 1")]
    BadFMax(f64),
}

/// Per-piece duration that lets each axis cover its displacement within the
/// velocity, acceleration and jerk limits, divided over `n` pieces.
pub fn baseline_dt(init: &BoundaryState, fin: &BoundaryState, limits: &DynamicLimits, n: usize) -> f64 {
    let d = (fin.position - init.position).abs();
    let mut t: f64 = 0.0;
    for ax in 0..3 {
        let di = d[ax];
        let ta = (di / limits.v_max).max((2.0 * di / limits.a_max).sqrt()).max((6.0 * di / limits.j_max).cbrt());
        t = t.max(ta);
    }
    (t / n.max(1) as f64).max(1e-3)
}

/// `M` uniformly spaced time-allocation factors, all at least 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorWindow {
    start: f64,
    m: usize,
    pub step: f64,
    pub half_width: f64,
    pub f_max: f64,
}

impl FactorWindow {
    pub fn new(step: f64, half_width: f64, f_max: f64) -> Result<Self, ReplanError> {
        if !(step > 0.0 && half_width > 0.0) {
            return Err(ReplanError::BadWindow { step, half_width });
        }
        if !(f_max >= 1.0) {
            return Err(ReplanError::BadFMax(f_max));
        }
        let m = (2.0 * half_width / step + 1e-9).floor() as usize + 1;
        Ok(FactorWindow { start: 1.0, m, step, half_width, f_max })
    }

    /// A one-factor window, used to probe a single time allocation.
    pub fn single(factor: f64, f_max: f64) -> Result<Self, ReplanError> {
        if !(factor >= 1.0 && factor <= f_max) {
            return Err(ReplanError::BadFMax(f_max));
        }
        Ok(FactorWindow { start: factor, m: 1, step: 1.0, half_width: 0.5, f_max })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn factors(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.start + i as f64 * self.step).collect()
    }

    pub fn median(&self) -> f64 {
        self.start + (self.m - 1) as f64 * self.step / 2.0
    }

    fn span(&self) -> f64 {
        (self.m - 1) as f64 * self.step
    }

    /// Recenter on a winning factor, or climb one step after a total failure
    /// and reset once the top would pass `f_max`.
    pub fn update(&mut self, winner: Option<f64>) {
        match winner {
            Some(f) => {
                let hi = (self.f_max - self.span()).max(1.0);
                self.start = (f - self.span() / 2.0).clamp(1.0, hi);
            }
            None => {
                self.start += self.step;
                if self.start + self.span() > self.f_max + 1e-9 {
                    self.start = 1.0;
                }
            }
        }
    }
}

/// Window update driven by a planning outcome.
pub fn window_update(w: &FactorWindow, outcome: &PlanOutcome) -> FactorWindow {
    let mut next = w.clone();
    next.update(outcome.winning_factor());
    next
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub n_pieces: usize,
    pub n_segments: usize,
    pub limits: DynamicLimits,
    pub corridor: CorridorParams,
    pub heat: HeatParams,
    pub w_heat: f64,
    /// Global path is cut after this arc length (m).
    pub horizon: f64,
    pub factor_step: f64,
    pub factor_half_width: f64,
    pub f_max: f64,
    /// Sequential ascending factors instead of racing threads.
    pub deterministic: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            n_pieces: 5,
            n_segments: 3,
            limits: DynamicLimits::default(),
            corridor: CorridorParams::default(),
            heat: HeatParams::default(),
            w_heat: 5.0,
            horizon: 6.0,
            factor_step: 0.1,
            factor_half_width: 0.4,
            f_max: 2.5,
            deterministic: false,
        }
    }
}

/// Immutable inputs of one planning cycle.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    /// Observed occupancy before any inflation.
    pub grid: &'a VoxelGrid,
    pub tracks: &'a [ObstacleTrack],
    pub state: BoundaryState,
    pub goal: Vec3,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FactorFailure {
    DegenerateSubgoal,
    Corridor(String),
    Solver(String),
    Cancelled,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDiagnostic {
    pub factor: f64,
    pub dt: f64,
    pub result: Result<(), FactorFailure>,
    pub t_stsfc: Duration,
    pub t_opt: Duration,
    pub nodes: usize,
}

impl FactorDiagnostic {
    /// The branch and bound solver was invoked for this factor.
    pub fn solver_ran(&self) -> bool {
        matches!(self.result, Ok(()) | Err(FactorFailure::Solver(_)) | Err(FactorFailure::Cancelled))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanTiming {
    pub t_replan: Duration,
    pub t_global: Duration,
    /// Corridor time of the winning factor (or the sum when all fail).
    pub t_stsfc: Duration,
    pub t_opt: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanSuccess {
    pub trajectory: CompositeTrajectory,
    pub factor: f64,
    pub assignment: Vec<usize>,
    pub corridor: Stsfc,
    pub waypoints: Vec<Vec3>,
    pub stats: SolverStats,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanResult {
    Success(Box<PlanSuccess>),
    AllFailed { cause: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub result: PlanResult,
    pub diagnostics: Vec<FactorDiagnostic>,
    pub timing: PlanTiming,
}

impl PlanOutcome {
    pub fn winning_factor(&self) -> Option<f64> {
        match &self.result {
            PlanResult::Success(s) => Some(s.factor),
            PlanResult::AllFailed { .. } => None,
        }
    }

    pub fn success(&self) -> Option<&PlanSuccess> {
        match &self.result {
            PlanResult::Success(s) => Some(s),
            PlanResult::AllFailed { .. } => None,
        }
    }
}

/// Planning grid: occupied voxels inflated by the drone radius, current track
/// boxes marked occupied, and the start voxel forced traversable.
pub fn planning_grid(grid: &VoxelGrid, tracks: &[ObstacleTrack], r_drone: f64, start: &Vec3) -> VoxelGrid {
    let mut g = grid.inflate_occupied(r_drone).expect("radius is non-negative");
    let res = g.resolution();
    for t in tracks {
        let b = minkowski_inflate(&t.aabb(), r_drone).expect("non-negative");
        let (Some(lo), Some(hi)) = (clamp_index(&g, &b.min()), clamp_index(&g, &b.max())) else { continue };
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    if g.voxel_box([x, y, z], -0.5 * res * 1e-6).intersects(&b) && g.get([x, y, z]) != Cell::Unknown {
                        g.set([x, y, z], Cell::Occupied).expect("in bounds");
                    }
                }
            }
        }
    }
    if let Some(s) = g.index_of(start) {
        g.set(s, Cell::Free).expect("in bounds");
    }
    g
}

fn clamp_index(g: &VoxelGrid, p: &Vec3) -> Option<[usize; 3]> {
    let b = g.bounds();
    if (0..3).any(|i| !p[i].is_finite()) {
        return None;
    }
    let q = p.sup(&b.min()).inf(&(b.max() - Vec3::repeat(1e-9 * g.resolution())));
    g.index_of(&q)
}

/// Cuts the path after `horizon` metres of arc length (keeping the crossing waypoint).
pub fn truncate_path(path: &GlobalPath, horizon: f64) -> GlobalPath {
    let mut acc = 0.0;
    let mut out = vec![path.waypoints[0]];
    for w in path.waypoints.windows(2) {
        if acc >= horizon {
            break;
        }
        acc += (w[1] - w[0]).norm();
        out.push(w[1]);
    }
    GlobalPath { waypoints: out, cost: path.cost, partial: path.partial }
}

struct FactorJob<'a> {
    ctx: &'a CorridorContext<'a>,
    grid: &'a VoxelGrid,
    path: &'a GlobalPath,
    config: &'a PlannerConfig,
    state: BoundaryState,
    t0: f64,
    dt0: f64,
}

type FactorRun = (FactorDiagnostic, Option<PlanSuccess>);

fn run_factor(job: &FactorJob<'_>, factor: f64, cancel: Option<&AtomicBool>) -> FactorRun {
    let dt = factor * job.dt0;
    let n = job.config.n_pieces;
    let mut diag = FactorDiagnostic { factor, dt, result: Ok(()), t_stsfc: Duration::ZERO, t_opt: Duration::ZERO, nodes: 0 };
    let t_sfc = Instant::now();
    let r_wc = reachable_radius(n - 1, dt, &job.config.corridor);
    let sub = select_subgoal(job.path, job.grid, r_wc).expect("non-empty path");
    let blocked: Vec<Aabb> = job
        .ctx
        .tracks()
        .iter()
        .map(|b| minkowski_inflate(b, r_wc + job.config.corridor.r_drone).expect("non-negative"))
        .collect();
    let sub = walk_back_from_boxes(job.path, sub, &blocked);
    if sub.degenerate || sub.index == 0 {
        diag.result = Err(FactorFailure::DegenerateSubgoal);
        diag.t_stsfc = t_sfc.elapsed();
        return (diag, None);
    }
    let head = GlobalPath { waypoints: job.path.waypoints[..=sub.index].to_vec(), cost: 0.0, partial: false };
    let way = downsample(&head, job.config.n_segments).expect("target >= 1").waypoints;
    let corridor = job.ctx.generate(&way, n, dt, job.t0);
    diag.t_stsfc = t_sfc.elapsed();
    let corridor = match corridor {
        Ok(c) => c,
        Err(e) => {
            diag.result = Err(FactorFailure::Corridor(e.to_string()));
            return (diag, None);
        }
    };
    if let Some(layer) = (0..corridor.n_layers()).find(|&l| (0..corridor.n_segments()).all(|p| corridor.cell(l, p).is_none())) {
        diag.result = Err(FactorFailure::Corridor(format!("time layer {layer} has no cell")));
        return (diag, None);
    }
    let t_opt = Instant::now();
    let fin = BoundaryState::at_rest(sub.point);
    let solved = MiqpProblem::new(corridor.clone(), job.state, fin, job.config.limits).and_then(|p| solve_bnb(&p, cancel));
    diag.t_opt = t_opt.elapsed();
    match solved {
        Ok(sol) => {
            diag.nodes = sol.stats.nodes;
            let ok = PlanSuccess {
                trajectory: sol.trajectory,
                factor,
                assignment: sol.assignment,
                corridor,
                waypoints: way,
                stats: sol.stats,
            };
            (diag, Some(ok))
        }
        Err(MiqpError::Cancelled) => {
            diag.result = Err(FactorFailure::Cancelled);
            (diag, None)
        }
        Err(e) => {
            diag.result = Err(FactorFailure::Solver(e.to_string()));
            (diag, None)
        }
    }
}

fn all_failed(cause: String, diagnostics: Vec<FactorDiagnostic>, timing: PlanTiming) -> PlanOutcome {
    PlanOutcome { result: PlanResult::AllFailed { cause }, diagnostics, timing }
}

/// One planning cycle: shared global path, then per-factor subgoal, corridor
/// and branch and bound. Racing mode returns the first feasible factor to
/// finish; deterministic mode the smallest feasible factor.
pub fn plan_once(snapshot: &Snapshot<'_>, config: &PlannerConfig, window: &FactorWindow) -> PlanOutcome {
    let t_start = Instant::now();
    let mut timing = PlanTiming::default();
    let factors = window.factors();
    let not_run = |f: f64| FactorDiagnostic {
        factor: f,
        dt: 0.0,
        result: Err(FactorFailure::NotRun),
        t_stsfc: Duration::ZERO,
        t_opt: Duration::ZERO,
        nodes: 0,
    };
    let start = snapshot.state.position;
    let pgrid = planning_grid(snapshot.grid, snapshot.tracks, config.corridor.r_drone, &start);
    let preds: Vec<_> = snapshot
        .tracks
        .iter()
        .map(|t| predict(t, config.heat.t_h, config.heat.m_tube).expect("validated heat params"))
        .collect();
    let field = HeatField { static_heat: StaticHeat::new(snapshot.grid, config.heat), predictions: &preds, params: config.heat };
    let global = global_planner::plan(&pgrid, &|q| field.eval(q), &start, &snapshot.goal, config.w_heat);
    timing.t_global = t_start.elapsed();
    let mut path = match global {
        Ok(p) => p,
        Err(e) => {
            timing.t_replan = t_start.elapsed();
            let e: PlanError = e;
            return all_failed(format!("global plan: {e}"), factors.iter().map(|f| not_run(*f)).collect(), timing);
        }
    };
    path.waypoints[0] = start;
    if path.waypoints.len() < 2 {
        timing.t_replan = t_start.elapsed();
        return all_failed("already at goal voxel".into(), factors.iter().map(|f| not_run(*f)).collect(), timing);
    }
    let path = truncate_path(&path, config.horizon);
    let end = BoundaryState::at_rest(*path.waypoints.last().expect("non-empty"));
    let dt0 = baseline_dt(&snapshot.state, &end, &config.limits, config.n_pieces);
    let max_radius = reachable_radius(config.n_pieces - 1, window.f_max.max(factors[factors.len() - 1]) * dt0, &config.corridor);
    let boxes: Vec<Aabb> = snapshot.tracks.iter().map(|t| t.aabb()).collect();
    let ctx = CorridorContext::new(snapshot.grid, &boxes, config.corridor, max_radius);
    let job = FactorJob { ctx: &ctx, grid: snapshot.grid, path: &path, config, state: snapshot.state, t0: snapshot.t0, dt0 };

    let mut runs: Vec<Option<FactorRun>> = vec![None; factors.len()];
    let mut winner: Option<usize> = None;
    if config.deterministic {
        for (i, f) in factors.iter().enumerate() {
            let r = run_factor(&job, *f, None);
            let ok = r.1.is_some();
            runs[i] = Some(r);
            if ok {
                winner = Some(i);
                break;
            }
        }
    } else {
        let cancel = AtomicBool::new(false);
        let (tx, rx) = mpsc::channel();
        std::thread::scope(|s| {
            for (i, f) in factors.iter().enumerate() {
                let (tx, job, cancel) = (tx.clone(), &job, &cancel);
                let f = *f;
                s.spawn(move || {
                    let r = if cancel.load(Ordering::Relaxed) { (not_run(f), None) } else { run_factor(job, f, Some(cancel)) };
                    if r.1.is_some() {
                        cancel.store(true, Ordering::Relaxed);
                    }
                    let _ = tx.send((i, r));
                });
            }
            drop(tx);
            for (i, r) in rx {
                if winner.is_none() && r.1.is_some() {
                    winner = Some(i);
                }
                runs[i] = Some(r);
            }
        });
    }
    let mut diagnostics = Vec::with_capacity(factors.len());
    let mut best = None;
    for (i, r) in runs.into_iter().enumerate() {
        match r {
            Some((d, sol)) => {
                if Some(i) == winner {
                    timing.t_stsfc = d.t_stsfc;
                    timing.t_opt = d.t_opt;
                    best = sol;
                } else if winner.is_none() {
                    timing.t_stsfc += d.t_stsfc;
                    timing.t_opt += d.t_opt;
                }
                diagnostics.push(d);
            }
            None => diagnostics.push(not_run(factors[i])),
        }
    }
    timing.t_replan = t_start.elapsed();
    match best {
        Some(s) => PlanOutcome { result: PlanResult::Success(Box::new(s)), diagnostics, timing },
        None => {
            let cause = diagnostics
                .iter()
                .filter_map(|d| d.result.clone().err())
                .map(|e| format!("{e:?}"))
                .next_back()
                .unwrap_or_else(|| "no factor ran".into());
            all_failed(cause, diagnostics, timing)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Follow(CompositeTrajectory),
    Hover(Vec3),
}

/// Keep flying the previous trajectory while it has time left, else hover.
pub fn fallback(previous: Option<&CompositeTrajectory>, now: f64, position: Vec3) -> Command {
    match previous {
        Some(t) if now < t.t_end() => Command::Follow(t.clone()),
        _ => Command::Hover(position),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyCheckParams {
    /// Bound used to build the corridor.
    pub v_obs_max: f64,
    pub epsilon: f64,
    pub sample_dt: f64,
    /// Per-axis speed of the simulated adversary; above `v_obs_max` breaks the assumption.
    pub adversary_speed: f64,
    pub motions: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SafetyReport {
    pub samples: usize,
    pub motions: usize,
    /// Trajectory samples outside their assigned polytope.
    pub corridor_violations: usize,
    /// Obstacle samples outside their layer's inflated box.
    pub containment_violations: usize,
    /// Assigned polytopes intersecting an inflated box.
    pub disjointness_violations: usize,
    /// Agent samples inside a moving obstacle box.
    pub collisions: usize,
}

impl SafetyReport {
    pub fn total(&self) -> usize {
        self.corridor_violations + self.containment_violations + self.disjointness_violations + self.collisions
    }
}

/// Slack for accumulated rounding in the adversary's integrated displacement.
const CONTAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
enum Adversary {
    Constant(Vec3),
    BangBang { v: Vec3, period: f64, phase: f64 },
    Pursuit,
}

/// Checks corridor membership, obstacle containment in inflated layer boxes,
/// polytope disjointness and, end to end, that no adversarial obstacle motion
/// within the assumed bounds ever touches the sampled trajectory.
pub fn verify_theorem1(
    traj: &CompositeTrajectory,
    stsfc: &Stsfc,
    assignment: &[usize],
    tracks_at_t0: &[Aabb],
    params: &SafetyCheckParams,
) -> SafetyReport {
    let mut rep = SafetyReport::default();
    let t0 = traj.t0();
    let dt = stsfc.dt;
    let n_layers = stsfc.n_layers().min(traj.pieces().len()).min(assignment.len());
    let steps = (traj.duration() / params.sample_dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|i| (t0 + i as f64 * params.sample_dt).min(traj.t_end())).collect();
    let agent: Vec<Vec3> = times.iter().map(|t| traj.sample_clamped(*t).position).collect();
    rep.samples = times.len();
    let layer_of = |t: f64| traj.locate(t).0.min(n_layers.saturating_sub(1));
    let rad = |n: usize| params.v_obs_max * (n as f64 + 1.0) * dt + params.epsilon;

    for (t, p) in times.iter().zip(&agent) {
        let n = layer_of(*t);
        match stsfc.cell(n, assignment[n]) {
            Some(poly) if poly.contains(p) => {}
            _ => rep.corridor_violations += 1,
        }
    }
    for n in 0..n_layers {
        let Some(poly) = stsfc.cell(n, assignment[n]) else { continue };
        for b in tracks_at_t0 {
            let inflated = minkowski_inflate(b, rad(n)).expect("non-negative");
            if !polytope_disjoint_from_aabb(poly, &inflated) {
                rep.disjointness_violations += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let s = params.adversary_speed;
    for b in tracks_at_t0 {
        let (c0, h) = (b.center(), b.half_extents());
        for m in 0..params.motions {
            rep.motions += 1;
            let e = Vec3::from_fn(|_, _| rng.random_range(-1.0..=1.0) * params.epsilon);
            let adv = match m % 3 {
                0 => Adversary::Pursuit,
                1 => Adversary::Constant(Vec3::from_fn(|_, _| if rng.random_bool(0.5) { s } else { -s })),
                _ => Adversary::BangBang {
                    v: Vec3::from_fn(|_, _| if rng.random_bool(0.5) { s } else { -s }),
                    period: rng.random_range(0.1..2.0),
                    phase: rng.random_range(0.0..1.0),
                },
            };
            let mut disp = e;
            for (i, (t, p)) in times.iter().zip(&agent).enumerate() {
                if i > 0 {
                    let h_step = t - times[i - 1];
                    let v = match adv {
                        Adversary::Constant(v) => v,
                        Adversary::BangBang { v, period, phase } => {
                            if ((t - t0) / period + phase).floor() as i64 % 2 == 0 {
                                v
                            } else {
                                -v
                            }
                        }
                        Adversary::Pursuit => (p - (c0 + disp)).map(|d| if d > 0.0 { s } else if d < 0.0 { -s } else { 0.0 }),
                    };
                    disp += v * h_step;
                }
                let c = c0 + disp;
                let n = layer_of(*t);
                let off = disp.abs();
                if (0..3).any(|k| off[k] > rad(n) + CONTAIN_TOL) {
                    rep.containment_violations += 1;
                }
                let d = (p - c).abs();
                if (0..3).all(|k| d[k] <= h[k]) {
                    rep.collisions += 1;
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_size_and_climb() {
        let mut w = FactorWindow::new(0.1, 0.4, 2.5).unwrap();
        assert_eq!(w.len(), 9);
        assert!((w.median() - 1.4).abs() < 1e-12);
        let med = w.median();
        let before = w.factors();
        w.update(Some(med));
        assert_eq!(w.factors(), before);
        let mut maxes = vec![];
        for _ in 0..10 {
            w.update(None);
            maxes.push(*w.factors().last().unwrap());
        }
        for (k, m) in maxes.iter().take(7).enumerate() {
            assert!((m - (1.8 + 0.1 * (k + 1) as f64)).abs() < 1e-9);
        }
        assert!((maxes[7] - 1.8).abs() < 1e-9);
    }

    #[test]
    fn baseline_examples() {
        let lim = DynamicLimits { v_max: 5.0, a_max: 20.0, j_max: 100.0 };
        let a = BoundaryState::at_rest(Vec3::zeros());
        let b = BoundaryState::at_rest(Vec3::new(10.0, 0.0, 0.0));
        assert!((baseline_dt(&a, &b, &lim, 5) - 0.4).abs() < 1e-12);
        assert_eq!(baseline_dt(&a, &a, &lim, 5), 1e-3);
    }

    #[test]
    fn fallback_cases() {
        let t = CompositeTrajectory::hover(Vec3::x(), 0.0, 1.0).unwrap();
        assert!(matches!(fallback(Some(&t), 0.5, Vec3::zeros()), Command::Follow(_)));
        assert_eq!(fallback(Some(&t), 1.5, Vec3::zeros()), Command::Hover(Vec3::zeros()));
        assert_eq!(fallback(None, 0.0, Vec3::y()), Command::Hover(Vec3::y()));
    }
}
