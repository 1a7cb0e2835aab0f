//! Piece-to-polytope assignment MIQP over cubic pieces.
//!
//! Each piece `n` must keep its four position control points inside one
//! polytope of corridor layer `n`, all velocity/acceleration control points
//! and the jerk inside per-axis limits, and the pieces must join C² between
//! fixed boundary states. The objective is `J = Σ‖6 a_n‖²`.
//!
//! Two equivalent QP parametrizations are provided: the eliminated one
//! (`y = y_p + Z w`, `N−3` free variables per axis) and the explicit one
//! (all `4N` coefficients per axis with the equalities kept as constraints).
//! Control points and derivative points fixed by the boundary states are
//! checked once up front and left out of both QPs.

pub mod elimination;
pub mod instances;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use elimination::{build_equalities, eliminate, EliminationMap, Equalities};

use crate::bezier::{BezierError, CompositeTrajectory, CubicPiece, DynamicLimits};
use crate::qp::{solve_qp_eq, QpError, QpOptions};
use crate::stsfc::Stsfc;
use crate::world::{Polytope, MEMBERSHIP_TOL};
use crate::Vec3;

/// Polytope rows are tightened by this much so reconstructed control points
/// pass the membership test with margin.
const POLY_TIGHTEN: f64 = 5e-10;
/// Tolerance for dynamic quantities fixed by the boundary states.
const FIXED_TOL: f64 = 1e-6;
/// Augmented-Lagrangian weight making the explicit Hessian positive definite.
const AUG_RHO: f64 = 72.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MiqpError {
    #[error("need at least 4 pieces, got {0}")]
    TooFewPieces(usize),
    #[error("piece duration must be positive, got {0}")]
    BadDt(f64),
    #[error("equality matrix rank {found}, expected {expected}")]
    RankDeficient { expected: usize, found: usize },
    #[error("no assignment is feasible")]
    Infeasible,
    #[error("cancelled")]
    Cancelled,
    #[error("QP failure: {0}")]
    Qp(#[from] QpError),
    #[error("trajectory construction: {0}")]
    Bezier(#[from] BezierError),
    #[error("returned solution failed its own check: {0}")]
    SolutionCheck(String),
}

/// Position, velocity and acceleration at a trajectory end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

impl BoundaryState {
    pub fn at_rest(p: Vec3) -> Self {
        BoundaryState { position: p, velocity: Vec3::zeros(), acceleration: Vec3::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).chain(self.acceleration.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpProblem {
    pub elimination: EliminationMap,
    pub equalities: Equalities,
    pub corridor: Stsfc,
    pub limits: DynamicLimits,
    pub init: BoundaryState,
    pub fin: BoundaryState,
}

impl MiqpProblem {
    /// Piece count and duration come from the corridor.
    pub fn new(corridor: Stsfc, init: BoundaryState, fin: BoundaryState, limits: DynamicLimits) -> Result<Self, MiqpError> {
        let n = corridor.n_layers();
        let dt = corridor.dt;
        let equalities = build_equalities(n, dt, &init, &fin)?;
        let elimination = EliminationMap::new(n, dt, &init, &fin)?;
        Ok(MiqpProblem { elimination, equalities, corridor, limits, init, fin })
    }

    pub fn n(&self) -> usize {
        self.elimination.n
    }

    pub fn dt(&self) -> f64 {
        self.elimination.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverStats {
    /// Branch-and-bound nodes expanded (enumeration: assignments tried).
    pub nodes: usize,
    pub qp_solves: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpSolution {
    pub trajectory: CompositeTrajectory,
    pub assignment: Vec<usize>,
    pub objective: f64,
    pub stats: SolverStats,
}

/// Bézier-point maps on one piece's `[a, b, c, d]` block.
struct PieceMaps {
    pos: [[f64; 4]; 4],
    vel: [[f64; 4]; 3],
    acc: [[f64; 4]; 2],
    jerk: [f64; 4],
}

impl PieceMaps {
    fn new(dt: f64) -> Self {
        let pos = [
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, dt / 3.0, 1.0],
            [0.0, dt * dt / 3.0, 2.0 * dt / 3.0, 1.0],
            [dt * dt * dt, dt * dt, dt, 1.0],
        ];
        let diff = |a: &[f64; 4], b: &[f64; 4], s: f64| -> [f64; 4] { std::array::from_fn(|i| s * (b[i] - a[i])) };
        let vel = [diff(&pos[0], &pos[1], 3.0 / dt), diff(&pos[1], &pos[2], 3.0 / dt), diff(&pos[2], &pos[3], 3.0 / dt)];
        let acc = [diff(&vel[0], &vel[1], 2.0 / dt), diff(&vel[1], &vel[2], 2.0 / dt)];
        PieceMaps { pos, vel, acc, jerk: [6.0, 0.0, 0.0, 0.0] }
    }
}

fn apply(block: &[f64; 4], coeffs: &[f64; 4]) -> f64 {
    block.iter().zip(coeffs).map(|(a, b)| a * b).sum()
}

/// A quantity affine in one axis's variables: `row · v_axis + constant[axis]`.
#[derive(Clone)]
struct AffineQty {
    row: DVector<f64>,
    constant: Vec3,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Param {
    Eliminated,
    Explicit,
}

/// One QP parametrization of a problem, assembled once per solve.
struct Formulation {
    k: usize,
    t: DMatrix<f64>,
    y0: [DVector<f64>; 3],
    h: DMatrix<f64>,
    f: DVector<f64>,
    obj_const: f64,
    aeq: DMatrix<f64>,
    beq: DVector<f64>,
    dyn_a: DMatrix<f64>,
    dyn_b: DVector<f64>,
    /// `pos[n][j]`, `None` where fixed by a boundary state.
    pos: Vec<[Option<AffineQty>; 4]>,
    opts: QpOptions,
}

impl Formulation {
    fn new(problem: &MiqpProblem, param: Param) -> Result<Self, MiqpError> {
        let n = problem.n();
        let dt = problem.dt();
        let nc = 4 * n;
        let (t, y0) = match param {
            Param::Eliminated => (problem.elimination.basis.clone(), problem.elimination.particular.clone()),
            Param::Explicit => (DMatrix::identity(nc, nc), [DVector::zeros(nc), DVector::zeros(nc), DVector::zeros(nc)]),
        };
        let k = t.ncols();
        let nv = 3 * k;

        // Objective: 36 Σ ‖S y‖² with S picking the cubic coefficients.
        let mut st = DMatrix::zeros(n, k);
        for p in 0..n {
            st.set_row(p, &t.row(4 * p));
        }
        let hb = st.transpose() * &st * 72.0;
        let mut h = DMatrix::zeros(nv, nv);
        let mut f = DVector::zeros(nv);
        let mut obj_const = 0.0;
        let eq = &problem.equalities;
        let et = &eq.e * &t;
        for ax in 0..3 {
            let sy0 = DVector::from_iterator(n, (0..n).map(|p| y0[ax][4 * p]));
            h.view_mut((ax * k, ax * k), (k, k)).copy_from(&hb);
            f.rows_mut(ax * k, k).copy_from(&(st.transpose() * &sy0 * 72.0));
            obj_const += 36.0 * sy0.norm_squared();
        }
        let (aeq, beq) = if param == Param::Explicit {
            let m = eq.e.nrows();
            let mut aeq = DMatrix::zeros(3 * m, nv);
            let mut beq = DVector::zeros(3 * m);
            let aug = et.transpose() * &et * AUG_RHO;
            for ax in 0..3 {
                let r = &eq.h[ax] - &eq.e * &y0[ax];
                aeq.view_mut((ax * m, ax * k), (m, k)).copy_from(&et);
                beq.rows_mut(ax * m, m).copy_from(&r);
                let mut hv = h.view_mut((ax * k, ax * k), (k, k));
                hv += &aug;
                let mut fv = f.rows_mut(ax * k, k);
                fv -= et.transpose() * &r * AUG_RHO;
                obj_const += 0.5 * AUG_RHO * r.norm_squared();
            }
            (aeq, beq)
        } else {
            (DMatrix::zeros(0, nv), DVector::zeros(0))
        };

        let maps = PieceMaps::new(dt);
        let qty = |p: usize, block: &[f64; 4]| -> AffineQty {
            let mut row = DVector::zeros(k);
            for (i, b) in block.iter().enumerate() {
                if *b != 0.0 {
                    row.axpy(*b, &t.row(4 * p + i).transpose(), 1.0);
                }
            }
            let constant = Vec3::from_fn(|ax, _| (0..4).map(|i| block[i] * y0[ax][4 * p + i]).sum());
            AffineQty { row, constant }
        };
        let scale_of = |block: &[f64; 4]| block.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        // Quantities fixed by the boundary states, evaluated from the
        // boundary-anchored partial polynomials.
        let (i0, f0) = (&problem.init, &problem.fin);
        let head: Vec<[f64; 4]> =
            (0..3).map(|ax| [0.0, 0.5 * i0.acceleration[ax], i0.velocity[ax], i0.position[ax]]).collect();
        let tail: Vec<[f64; 4]> = (0..3)
            .map(|ax| {
                let (p, v, a) = (f0.position[ax], f0.velocity[ax], f0.acceleration[ax]);
                [0.0, 0.5 * a, v - a * dt, p - v * dt + 0.5 * a * dt * dt]
            })
            .collect();
        let lim = &problem.limits;
        let fixed_dyn: Vec<(&[f64; 4], &Vec<[f64; 4]>, f64)> = vec![
            (&maps.vel[0], &head, lim.v_max),
            (&maps.vel[1], &head, lim.v_max),
            (&maps.acc[0], &head, lim.a_max),
            (&maps.vel[1], &tail, lim.v_max),
            (&maps.vel[2], &tail, lim.v_max),
            (&maps.acc[1], &tail, lim.a_max),
        ];
        for (block, coeffs, l) in fixed_dyn {
            for c in coeffs.iter() {
                if apply(block, c).abs() > l + FIXED_TOL {
                    return Err(MiqpError::Infeasible);
                }
            }
        }

        let mut rows: Vec<DVector<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        let mut push_limit = |q: &AffineQty, block: &[f64; 4], l: f64| -> Result<(), MiqpError> {
            let zero = q.row.amax() <= 1e-10 * scale_of(block);
            for ax in 0..3 {
                for sign in [1.0, -1.0] {
                    let b = l - sign * q.constant[ax];
                    if zero {
                        if b < -FIXED_TOL {
                            return Err(MiqpError::Infeasible);
                        }
                        continue;
                    }
                    let mut r = DVector::zeros(nv);
                    r.rows_mut(ax * k, k).copy_from(&(&q.row * sign));
                    rows.push(r);
                    rhs.push(b);
                }
            }
            Ok(())
        };
        for p in 0..n {
            for j in 0..3 {
                let fixed = (p == 0 && j <= 1) || (p == n - 1 && j >= 1);
                if !fixed {
                    push_limit(&qty(p, &maps.vel[j]), &maps.vel[j], lim.v_max)?;
                }
            }
            for j in 0..2 {
                let fixed = (p == 0 && j == 0) || (p == n - 1 && j == 1);
                if !fixed {
                    push_limit(&qty(p, &maps.acc[j]), &maps.acc[j], lim.a_max)?;
                }
            }
            push_limit(&qty(p, &maps.jerk), &maps.jerk, lim.j_max)?;
        }
        let mut dyn_a = DMatrix::zeros(rows.len(), nv);
        for (i, r) in rows.iter().enumerate() {
            dyn_a.set_row(i, &r.transpose());
        }
        let dyn_b = DVector::from_vec(rhs);

        let pos = (0..n)
            .map(|p| {
                std::array::from_fn(|j| {
                    let fixed = (p == 0 && j <= 2) || (p == n - 1 && j >= 1);
                    (!fixed).then(|| qty(p, &maps.pos[j]))
                })
            })
            .collect();
        Ok(Formulation { k, t, y0, h, f, obj_const, aeq, beq, dyn_a, dyn_b, pos, opts: QpOptions::default() })
    }

    fn polytope_rows(&self, piece: usize, poly: &Polytope, rows: &mut Vec<DVector<f64>>, rhs: &mut Vec<f64>) -> bool {
        let k = self.k;
        for q in self.pos[piece].iter().flatten() {
            let zero = q.row.amax() <= 1e-12;
            for hs in poly.halfspaces() {
                let b = hs.offset - POLY_TIGHTEN - hs.normal.dot(&q.constant);
                if zero {
                    if b < -MEMBERSHIP_TOL {
                        return false;
                    }
                    continue;
                }
                let mut r = DVector::zeros(3 * k);
                for ax in 0..3 {
                    if hs.normal[ax] != 0.0 {
                        r.rows_mut(ax * k, k).axpy(hs.normal[ax], &q.row, 0.0);
                    }
                }
                rows.push(r);
                rhs.push(b);
            }
        }
        true
    }

    /// Solves with the dynamic limits plus the given piece→polytope constraints.
    /// Returns `(variables, objective)`, or `None` when infeasible.
    fn solve(&self, assigned: &[(usize, &Polytope)]) -> Result<Option<(DVector<f64>, f64)>, MiqpError> {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (piece, poly) in assigned {
            if !self.polytope_rows(*piece, poly, &mut rows, &mut rhs) {
                return Ok(None);
            }
        }
        let nv = 3 * self.k;
        let m0 = self.dyn_a.nrows();
        let mut a = DMatrix::zeros(m0 + rows.len(), nv);
        a.view_mut((0, 0), (m0, nv)).copy_from(&self.dyn_a);
        let mut b = DVector::zeros(m0 + rows.len());
        b.rows_mut(0, m0).copy_from(&self.dyn_b);
        for (i, (r, v)) in rows.iter().zip(rhs).enumerate() {
            a.set_row(m0 + i, &r.transpose());
            b[m0 + i] = v;
        }
        match solve_qp_eq(&self.h, &self.f, &self.aeq, &self.beq, &a, &b, &self.opts) {
            Ok(sol) => Ok(Some((sol.x, sol.objective + self.obj_const))),
            Err(QpError::Infeasible { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn trajectory(&self, v: &DVector<f64>, dt: f64, t0: f64) -> Result<CompositeTrajectory, MiqpError> {
        let k = self.k;
        let ys: Vec<DVector<f64>> = (0..3).map(|ax| &self.y0[ax] + &self.t * v.rows(ax * k, k)).collect();
        let n = self.y0[0].len() / 4;
        let pieces = (0..n)
            .map(|p| {
                let c = |i: usize| Vec3::new(ys[0][4 * p + i], ys[1][4 * p + i], ys[2][4 * p + i]);
                CubicPiece::new(c(0), c(1), c(2), c(3), dt)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompositeTrajectory::new(pieces, t0)?)
    }
}

/// Squared-jerk objective `Σ‖6 a_n‖²` of a trajectory.
pub fn jerk_objective(traj: &CompositeTrajectory) -> f64 {
    traj.pieces().iter().map(|p| (p.a * 6.0).norm_squared()).sum()
}

/// Per-piece candidate polytope indices after boundary presolve.
fn candidates(problem: &MiqpProblem) -> Vec<Vec<usize>> {
    let n = problem.n();
    let dt = problem.dt();
    let maps = PieceMaps::new(dt);
    let i0 = &problem.init;
    let f0 = &problem.fin;
    let head: Vec<Vec3> = (0..3)
        .map(|j| {
            Vec3::from_fn(|ax, _| apply(&maps.pos[j], &[0.0, 0.5 * i0.acceleration[ax], i0.velocity[ax], i0.position[ax]]))
        })
        .collect();
    let tail: Vec<Vec3> = (1..4)
        .map(|j| {
            Vec3::from_fn(|ax, _| {
                let (p, v, a) = (f0.position[ax], f0.velocity[ax], f0.acceleration[ax]);
                apply(&maps.pos[j], &[0.0, 0.5 * a, v - a * dt, p - v * dt + 0.5 * a * dt * dt])
            })
        })
        .collect();
    (0..n)
        .map(|layer| {
            (0..problem.corridor.n_segments())
                .filter(|&p| match problem.corridor.cell(layer, p) {
                    None => false,
                    Some(poly) => {
                        (layer != 0 || head.iter().all(|q| poly.contains(q)))
                            && (layer != n - 1 || tail.iter().all(|q| poly.contains(q)))
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(PartialEq)]
struct Node {
    bound: f64,
    assign: Vec<usize>,
    vars: DVector<f64>,
}

impl Eq for Node {}

impl Ord for Node {
    // Reversed so the max-heap pops the smallest bound, then the
    // lexicographically smallest assignment.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.assign.cmp(&self.assign))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn cancelled(c: Option<&AtomicBool>) -> bool {
    c.map(|f| f.load(AtomicOrdering::Relaxed)).unwrap_or(false)
}

fn bnb(problem: &MiqpProblem, param: Param, cancel: Option<&AtomicBool>) -> Result<MiqpSolution, MiqpError> {
    let start = Instant::now();
    let mut stats = SolverStats::default();
    let form = Formulation::new(problem, param)?;
    let cands = candidates(problem);
    if cands.iter().any(|c| c.is_empty()) {
        return Err(MiqpError::Infeasible);
    }
    let n = problem.n();
    let corridor = &problem.corridor;
    let assigned = |assign: &[usize]| -> Vec<(usize, &Polytope)> {
        assign.iter().enumerate().map(|(piece, &p)| (piece, corridor.cell(piece, p).expect("candidate"))).collect()
    };
    if cands.iter().all(|c| c.len() == 1) {
        let assign: Vec<usize> = cands.iter().map(|c| c[0]).collect();
        stats.nodes = 1;
        stats.qp_solves = 1;
        return match form.solve(&assigned(&assign))? {
            Some((vars, _)) => {
                stats.wall_time = start.elapsed();
                finish(problem, &form, vars, assign, stats)
            }
            None => Err(MiqpError::Infeasible),
        };
    }
    let mut heap = BinaryHeap::new();
    stats.qp_solves += 1;
    match form.solve(&[])? {
        Some((vars, bound)) => heap.push(Node { bound, assign: vec![], vars }),
        None => return Err(MiqpError::Infeasible),
    }
    while let Some(node) = heap.pop() {
        if cancelled(cancel) {
            return Err(MiqpError::Cancelled);
        }
        if node.assign.len() == n {
            stats.wall_time = start.elapsed();
            return finish(problem, &form, node.vars, node.assign, stats);
        }
        stats.nodes += 1;
        let depth = node.assign.len();
        for &p in &cands[depth] {
            let mut child = node.assign.clone();
            child.push(p);
            stats.qp_solves += 1;
            if let Some((vars, bound)) = form.solve(&assigned(&child))? {
                heap.push(Node { bound, assign: child, vars });
            }
        }
    }
    Err(MiqpError::Infeasible)
}

fn finish(
    problem: &MiqpProblem,
    form: &Formulation,
    vars: DVector<f64>,
    assignment: Vec<usize>,
    stats: SolverStats,
) -> Result<MiqpSolution, MiqpError> {
    let trajectory = form.trajectory(&vars, problem.dt(), problem.corridor.t0)?;
    check_solution(problem, &trajectory, &assignment)?;
    let objective = jerk_objective(&trajectory);
    Ok(MiqpSolution { trajectory, assignment, objective, stats })
}

/// Verifies boundary residuals, polytope membership of control points and
/// dynamic limits of a candidate solution.
pub fn check_solution(problem: &MiqpProblem, traj: &CompositeTrajectory, assignment: &[usize]) -> Result<(), MiqpError> {
    let pieces = traj.pieces();
    let s0 = pieces[0].eval(0.0);
    let last = pieces.last().expect("nonempty");
    let s1 = last.eval(last.dt());
    let resid = [
        (s0.position - problem.init.position).amax(),
        (s0.velocity - problem.init.velocity).amax(),
        (s0.acceleration - problem.init.acceleration).amax(),
        (s1.position - problem.fin.position).amax(),
        (s1.velocity - problem.fin.velocity).amax(),
        (s1.acceleration - problem.fin.acceleration).amax(),
    ];
    if let Some(r) = resid.iter().find(|r| !(**r <= 1e-6)) {
        return Err(MiqpError::SolutionCheck(format!("boundary residual {r:e}")));
    }
    let lim = &problem.limits;
    for (n, (piece, &p)) in pieces.iter().zip(assignment).enumerate() {
        let poly = problem.corridor.cell(n, p).ok_or_else(|| MiqpError::SolutionCheck(format!("piece {n} assigned to failed cell")))?;
        if !piece.inside(poly) {
            return Err(MiqpError::SolutionCheck(format!("piece {n} leaves polytope {p}")));
        }
        let dp = piece.derivative_control_points();
        let over = dp.velocity.iter().any(|v| v.amax() > lim.v_max + FIXED_TOL)
            || dp.acceleration.iter().any(|a| a.amax() > lim.a_max + FIXED_TOL)
            || dp.jerk.amax() > lim.j_max + FIXED_TOL;
        if over {
            return Err(MiqpError::SolutionCheck(format!("piece {n} exceeds dynamic limits")));
        }
    }
    Ok(())
}

/// Best-first branch and bound over piece→polytope assignments, eliminated QPs.
pub fn solve_bnb(problem: &MiqpProblem, cancel: Option<&AtomicBool>) -> Result<MiqpSolution, MiqpError> {
    bnb(problem, Param::Eliminated, cancel)
}

/// Same branch and bound with all coefficients as variables and explicit equalities.
pub fn solve_without_elimination(problem: &MiqpProblem, cancel: Option<&AtomicBool>) -> Result<MiqpSolution, MiqpError> {
    bnb(problem, Param::Explicit, cancel)
}

/// Exhaustive search over every single-polytope assignment in lexicographic order.
pub fn solve_enumerate(problem: &MiqpProblem) -> Result<MiqpSolution, MiqpError> {
    let start = Instant::now();
    let mut stats = SolverStats::default();
    let form = Formulation::new(problem, Param::Eliminated)?;
    let n = problem.n();
    let cands: Vec<Vec<usize>> = candidates(problem);
    if cands.iter().any(|c| c.is_empty()) {
        return Err(MiqpError::Infeasible);
    }
    let mut idx = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>, DVector<f64>)> = None;
    loop {
        let assign: Vec<usize> = idx.iter().enumerate().map(|(piece, &i)| cands[piece][i]).collect();
        let constraints: Vec<(usize, &Polytope)> =
            assign.iter().enumerate().map(|(piece, &p)| (piece, problem.corridor.cell(piece, p).expect("candidate"))).collect();
        stats.nodes += 1;
        stats.qp_solves += 1;
        if let Some((vars, obj)) = form.solve(&constraints)? {
            if best.as_ref().map(|b| obj < b.0).unwrap_or(true) {
                best = Some((obj, assign, vars));
            }
        }
        let mut d = n;
        loop {
            if d == 0 {
                stats.wall_time = start.elapsed();
                return match best {
                    Some((_, assign, vars)) => finish(problem, &form, vars, assign, stats),
                    None => Err(MiqpError::Infeasible),
                };
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < cands[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}
