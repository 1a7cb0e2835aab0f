//! Continuity and boundary equalities and their numeric elimination.

use nalgebra::{DMatrix, DVector, SVD};

use super::{BoundaryState, MiqpError};

/// `E y = h` per axis, with `E` shared by all axes. Piece `n` occupies
/// columns `4n..4n+4` as `[a, b, c, d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalities {
    pub e: DMatrix<f64>,
    pub h: [DVector<f64>; 3],
}

/// Rows: 3 initial conditions, 3(N−1) junction conditions, 3 final conditions.
pub fn build_equalities(n: usize, dt: f64, init: &BoundaryState, fin: &BoundaryState) -> Result<Equalities, MiqpError> {
    if n < 4 {
        return Err(MiqpError::TooFewPieces(n));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(MiqpError::BadDt(dt));
    }
    let rows = 3 * n + 3;
    let mut e = DMatrix::zeros(rows, 4 * n);
    let mut h = [DVector::zeros(rows), DVector::zeros(rows), DVector::zeros(rows)];
    let (dt2, dt3) = (dt * dt, dt * dt * dt);
    e[(0, 3)] = 1.0;
    e[(1, 2)] = 1.0;
    e[(2, 1)] = 2.0;
    for ax in 0..3 {
        h[ax][0] = init.position[ax];
        h[ax][1] = init.velocity[ax];
        h[ax][2] = init.acceleration[ax];
    }
    for k in 0..n - 1 {
        let r = 3 + 3 * k;
        let c = 4 * k;
        let c2 = 4 * (k + 1);
        e[(r, c)] = dt3;
        e[(r, c + 1)] = dt2;
        e[(r, c + 2)] = dt;
        e[(r, c + 3)] = 1.0;
        e[(r, c2 + 3)] = -1.0;
        e[(r + 1, c)] = 3.0 * dt2;
        e[(r + 1, c + 1)] = 2.0 * dt;
        e[(r + 1, c + 2)] = 1.0;
        e[(r + 1, c2 + 2)] = -1.0;
        e[(r + 2, c)] = 6.0 * dt;
        e[(r + 2, c + 1)] = 2.0;
        e[(r + 2, c2 + 1)] = -2.0;
    }
    let r = 3 * n;
    let c = 4 * (n - 1);
    e[(r, c)] = dt3;
    e[(r, c + 1)] = dt2;
    e[(r, c + 2)] = dt;
    e[(r, c + 3)] = 1.0;
    e[(r + 1, c)] = 3.0 * dt2;
    e[(r + 1, c + 1)] = 2.0 * dt;
    e[(r + 1, c + 2)] = 1.0;
    e[(r + 2, c)] = 6.0 * dt;
    e[(r + 2, c + 1)] = 2.0;
    for ax in 0..3 {
        h[ax][r] = fin.position[ax];
        h[ax][r + 1] = fin.velocity[ax];
        h[ax][r + 2] = fin.acceleration[ax];
    }
    Ok(Equalities { e, h })
}

/// Affine parametrization `y = y_p + Z w` of the equality solution set.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationMap {
    pub n: usize,
    pub dt: f64,
    /// Minimum-norm particular solution per axis (length 4N).
    pub particular: [DVector<f64>; 3],
    /// Orthonormal nullspace basis, 4N × (N−3), shared by all axes.
    pub basis: DMatrix<f64>,
}

/// Nullspace basis and pseudo-inverse factors of `E` from one SVD.
pub fn eliminate(eq: &Equalities) -> Result<(DMatrix<f64>, [DVector<f64>; 3]), MiqpError> {
    let (m, nv) = eq.e.shape();
    let mut padded = DMatrix::zeros(nv, nv);
    padded.view_mut((0, 0), (m, nv)).copy_from(&eq.e);
    let svd = SVD::new(padded, true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut order: Vec<usize> = (0..nv).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]).then(a.cmp(b)));
    let smax = svd.singular_values[order[0]];
    let rank_tol = 1e-10 * smax.max(1.0);
    let rank = order.iter().filter(|&&i| svd.singular_values[i] > rank_tol).count();
    if rank != m {
        return Err(MiqpError::RankDeficient { expected: m, found: rank });
    }
    let mut basis = DMatrix::zeros(nv, nv - m);
    for (col, &i) in order[m..].iter().enumerate() {
        basis.set_column(col, &v_t.row(i).transpose());
    }
    let mut particular = [DVector::zeros(nv), DVector::zeros(nv), DVector::zeros(nv)];
    for ax in 0..3 {
        let mut hp = DVector::zeros(nv);
        hp.rows_mut(0, m).copy_from(&eq.h[ax]);
        for &i in &order[..m] {
            let coef = u.column(i).dot(&hp) / svd.singular_values[i];
            particular[ax].axpy(coef, &v_t.row(i).transpose(), 1.0);
        }
    }
    Ok((basis, particular))
}

impl EliminationMap {
    pub fn new(n: usize, dt: f64, init: &BoundaryState, fin: &BoundaryState) -> Result<Self, MiqpError> {
        let eq = build_equalities(n, dt, init, fin)?;
        let (basis, particular) = eliminate(&eq)?;
        Ok(EliminationMap { n, dt, particular, basis })
    }

    pub fn free_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Coefficients `y_p + Z w` for one axis.
    pub fn reconstruct(&self, axis: usize, w: &DVector<f64>) -> DVector<f64> {
        &self.particular[axis] + &self.basis * w
    }
}
