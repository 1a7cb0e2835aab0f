//! Dense strictly convex QP solver (Goldfarb–Idnani dual active-set method).
//!
//! Solves `min ½ xᵀHx + fᵀx  s.t.  Aeq x = beq,  A x <= b`.
//! The factorization `J = L⁻ᵀ` is updated with Givens rotations as
//! constraints enter and leave the active set; equalities are added first
//! and never dropped. The most violated inequality enters next, ties going
//! to the lowest row index, so results are deterministic.

use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("equality constraints are linearly dependent or inconsistent")]
    DependentEqualities,
    #[error("infeasible: inequality {constraint} cannot be satisfied together with the active set")]
    Infeasible { constraint: usize },
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    /// Absolute slack below which an inequality counts as violated.
    pub feas_tol: f64,
    /// Hard cap on outer iterations; `None` picks a bound from the problem size.
    pub max_iter: Option<usize>,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions { feas_tol: 1e-9, max_iter: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Multipliers of the inequalities (zero when inactive), `λ >= 0`.
    pub lambda: DVector<f64>,
    /// Multipliers of the equalities.
    pub mu: DVector<f64>,
    /// Active inequality rows at the solution.
    pub active: Vec<usize>,
    pub iterations: usize,
}

/// Inequality-only entry point.
pub fn solve_qp(h: &DMatrix<f64>, f: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<QpSolution, QpError> {
    let n = h.nrows();
    solve_qp_eq(h, f, &DMatrix::zeros(0, n), &DVector::zeros(0), a, b, &QpOptions::default())
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Con {
    Eq(usize),
    Ineq(usize),
}

struct Factor {
    n: usize,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    iq: usize,
    r_norm: f64,
}

impl Factor {
    fn new(j: DMatrix<f64>) -> Self {
        let n = j.nrows();
        Factor { n, j, r: DMatrix::zeros(n, n), iq: 0, r_norm: 1.0 }
    }

    fn compute_d(&self, np: &DVector<f64>, d: &mut DVector<f64>) {
        d.gemv_tr(1.0, &self.j, np, 0.0);
    }

    fn step_dirs(&self, d: &DVector<f64>, z: &mut DVector<f64>, rv: &mut DVector<f64>) {
        z.fill(0.0);
        for c in self.iq..self.n {
            let dc = d[c];
            if dc != 0.0 {
                z.axpy(dc, &self.j.column(c), 1.0);
            }
        }
        for i in (0..self.iq).rev() {
            let mut s = d[i];
            for k in i + 1..self.iq {
                s -= self.r[(i, k)] * rv[k];
            }
            rv[i] = s / self.r[(i, i)];
        }
    }

    /// Rotates `d` so only its first `iq + 1` entries are nonzero and appends it to `R`.
    fn add(&mut self, d: &mut DVector<f64>) -> bool {
        let n = self.n;
        for c in (self.iq + 1..n).rev() {
            let (mut cc, mut ss) = (d[c - 1], d[c]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            d[c] = 0.0;
            ss /= h;
            cc /= h;
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[c - 1] = -h;
            } else {
                d[c - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in 0..n {
                let t1 = self.j[(k, c - 1)];
                let t2 = self.j[(k, c)];
                let nj = t1 * cc + t2 * ss;
                self.j[(k, c - 1)] = nj;
                self.j[(k, c)] = xny * (t1 + nj) - t2;
            }
        }
        self.iq += 1;
        for i in 0..self.iq {
            self.r[(i, self.iq - 1)] = d[i];
        }
        let diag = d[self.iq - 1].abs();
        if diag <= f64::EPSILON * self.r_norm {
            return false;
        }
        self.r_norm = self.r_norm.max(diag);
        true
    }

    /// Removes the active constraint at position `qq`, restoring triangularity.
    fn delete(&mut self, qq: usize, active: &mut Vec<Con>, u: &mut DVector<f64>) {
        let n = self.n;
        let iq = self.iq;
        active.remove(qq);
        for i in qq..iq {
            u[i] = u[i + 1];
        }
        u[iq] = 0.0;
        for c in qq..iq - 1 {
            for i in 0..n {
                self.r[(i, c)] = self.r[(i, c + 1)];
            }
        }
        for i in 0..n {
            self.r[(i, iq - 1)] = 0.0;
        }
        self.iq -= 1;
        let iq = self.iq;
        if iq == 0 {
            return;
        }
        for jj in qq..iq {
            let (mut cc, mut ss) = (self.r[(jj, jj)], self.r[(jj + 1, jj)]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            cc /= h;
            ss /= h;
            self.r[(jj + 1, jj)] = 0.0;
            if cc < 0.0 {
                self.r[(jj, jj)] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[(jj, jj)] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in jj + 1..iq {
                let t1 = self.r[(jj, k)];
                let t2 = self.r[(jj + 1, k)];
                let nr = t1 * cc + t2 * ss;
                self.r[(jj, k)] = nr;
                self.r[(jj + 1, k)] = xny * (t1 + nr) - t2;
            }
            for k in 0..n {
                let t1 = self.j[(k, jj)];
                let t2 = self.j[(k, jj + 1)];
                let nj = t1 * cc + t2 * ss;
                self.j[(k, jj)] = nj;
                self.j[(k, jj + 1)] = xny * (nj + t1) - t2;
            }
        }
    }
}

/// Full entry point with equalities and options.
pub fn solve_qp_eq(
    h: &DMatrix<f64>,
    f: &DVector<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    opts: &QpOptions,
) -> Result<QpSolution, QpError> {
    let n = h.nrows();
    let meq = aeq.nrows();
    let m = a.nrows();
    if h.ncols() != n || f.len() != n {
        return Err(QpError::Dimension(format!("H is {}x{}, f has {}", h.nrows(), h.ncols(), f.len())));
    }
    if (meq > 0 && aeq.ncols() != n) || beq.len() != meq {
        return Err(QpError::Dimension("equality block".into()));
    }
    if (m > 0 && a.ncols() != n) || b.len() != m {
        return Err(QpError::Dimension("inequality block".into()));
    }
    if h.iter().chain(f.iter()).chain(aeq.iter()).chain(beq.iter()).chain(a.iter()).chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(QpError::Numerical("non-finite input".into()));
    }
    let chol = Cholesky::new(h.clone()).ok_or(QpError::NotPositiveDefinite)?;
    let l = chol.l();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(QpError::NotPositiveDefinite)?;
    let j0 = linv.transpose();
    let x0 = -chol.solve(f);

    let max_iter = opts.max_iter.unwrap_or(50 * (n + m + meq) + 100);
    let normal = |c: Con| -> DVector<f64> {
        match c {
            Con::Eq(i) => aeq.row(i).transpose(),
            Con::Ineq(i) => -a.row(i).transpose(),
        }
    };

    let mut fac = Factor::new(j0.clone());
    let mut x = x0.clone();
    let mut u = DVector::<f64>::zeros(n + 1);
    let mut active: Vec<Con> = Vec::with_capacity(n);
    let mut d = DVector::<f64>::zeros(n);
    let mut z = DVector::<f64>::zeros(n);
    let mut rv = DVector::<f64>::zeros(n + 1);

    for i in 0..meq {
        let np = normal(Con::Eq(i));
        fac.compute_d(&np, &mut d);
        fac.step_dirs(&d, &mut z, &mut rv);
        let zn = z.dot(&np);
        let t2 = if z.norm_squared() > f64::EPSILON { (beq[i] - np.dot(&x)) / zn } else { 0.0 };
        x.axpy(t2, &z, 1.0);
        u[fac.iq] = t2;
        for k in 0..fac.iq {
            u[k] -= t2 * rv[k];
        }
        active.push(Con::Eq(i));
        if !fac.add(&mut d) {
            return Err(QpError::DependentEqualities);
        }
    }
    let eq_resid = (aeq * &x - beq).amax();
    if meq > 0 && eq_resid > 1e-6 * (1.0 + beq.amax()) {
        return Err(QpError::DependentEqualities);
    }

    let mut excluded = vec![false; m];
    let mut slack = DVector::<f64>::zeros(m);
    let mut iters = 0;
    'outer: loop {
        iters += 1;
        if iters > max_iter {
            return Err(QpError::IterationLimit(max_iter));
        }
        slack.copy_from(b);
        slack.gemv(-1.0, a, &x, 1.0);
        let is_active = |i: usize, act: &[Con]| act.contains(&Con::Ineq(i));
        let mut ip = None;
        let mut worst = -opts.feas_tol;
        for i in 0..m {
            if slack[i] < worst && !excluded[i] && !is_active(i, &active) {
                worst = slack[i];
                ip = Some(i);
            }
        }
        let Some(ip) = ip else {
            if let Some(i) = (0..m).find(|&i| excluded[i] && slack[i] < -opts.feas_tol) {
                return Err(QpError::Numerical(format!("degenerate constraint {i} left violated")));
            }
            break;
        };
        let saved = (x.clone(), u.clone(), active.clone());
        let np = normal(Con::Ineq(ip));
        u[fac.iq] = 0.0;
        let mut s_ip = slack[ip];
        loop {
            iters += 1;
            if iters > max_iter {
                return Err(QpError::IterationLimit(max_iter));
            }
            fac.compute_d(&np, &mut d);
            fac.step_dirs(&d, &mut z, &mut rv);
            let mut t1 = f64::INFINITY;
            let mut l = None;
            for k in 0..fac.iq {
                if matches!(active[k], Con::Ineq(_)) && rv[k] > 0.0 {
                    let ratio = u[k] / rv[k];
                    if ratio < t1 {
                        t1 = ratio;
                        l = Some(k);
                    }
                }
            }
            let zn = z.dot(&np);
            let t2 = if z.norm_squared() > f64::EPSILON && zn > 0.0 { -s_ip / zn } else { f64::INFINITY };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(QpError::Infeasible { constraint: ip });
            }
            if !t2.is_finite() {
                for k in 0..fac.iq {
                    u[k] -= t * rv[k];
                }
                u[fac.iq] += t;
                let pos = l.expect("finite t1 has a blocking index");
                fac.delete(pos, &mut active, &mut u);
                continue;
            }
            x.axpy(t, &z, 1.0);
            for k in 0..fac.iq {
                u[k] -= t * rv[k];
            }
            u[fac.iq] += t;
            if t2 <= t1 {
                active.push(Con::Ineq(ip));
                if !fac.add(&mut d) {
                    excluded[ip] = true;
                    let (sx, su, sact) = saved;
                    x = sx;
                    u = su;
                    fac = Factor::new(j0.clone());
                    active.clear();
                    for c in sact {
                        let np = normal(c);
                        fac.compute_d(&np, &mut d);
                        active.push(c);
                        if !fac.add(&mut d) {
                            return Err(QpError::Numerical("refactorization lost rank".into()));
                        }
                    }
                }
                continue 'outer;
            }
            let pos = l.expect("partial step has a blocking index");
            fac.delete(pos, &mut active, &mut u);
            s_ip = b[ip] - a.row(ip).dot(&x.transpose());
        }
    }

    if x.iter().any(|v| !v.is_finite()) {
        return Err(QpError::Numerical("non-finite iterate".into()));
    }
    let mut lambda = DVector::zeros(m);
    let mut mu = DVector::zeros(meq);
    let mut act = Vec::new();
    for (k, c) in active.iter().enumerate() {
        match *c {
            Con::Eq(i) => mu[i] = -u[k],
            Con::Ineq(i) => {
                lambda[i] = u[k];
                act.push(i);
            }
        }
    }
    act.sort_unstable();
    let objective = 0.5 * x.dot(&(h * &x)) + f.dot(&x);
    Ok(QpSolution { x, objective, lambda, mu, active: act, iterations: iters })
}

/// KKT residuals `(stationarity, primal infeasibility, complementarity)` of a candidate.
pub fn kkt_residuals(
    h: &DMatrix<f64>,
    f: &DVector<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    sol: &QpSolution,
) -> (f64, f64, f64) {
    let mut g = h * &sol.x + f;
    if a.nrows() > 0 {
        g += a.transpose() * &sol.lambda;
    }
    if aeq.nrows() > 0 {
        g += aeq.transpose() * &sol.mu;
    }
    let mut primal: f64 = 0.0;
    let mut comp: f64 = 0.0;
    if a.nrows() > 0 {
        let s = b - a * &sol.x;
        for i in 0..a.nrows() {
            primal = primal.max(-s[i]);
            comp = comp.max((sol.lambda[i] * s[i]).abs());
            primal = primal.max(-sol.lambda[i]);
        }
    }
    if aeq.nrows() > 0 {
        primal = primal.max((aeq * &sol.x - beq).amax());
    }
    (g.amax(), primal.max(0.0), comp)
}
