use faer::prelude::*;
use faer::{Mat, Side};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::assembly::assemble;
use crate::error::{Error, Result};
use crate::spaces::Discretization;

/// Dense eigensolves are refused above this many pressure unknowns.
pub const INF_SUP_MAX_PRESSURE_DOFS: usize = 5000;

#[derive(Clone, Debug, Serialize)]
pub struct InfSupReport {
    pub beta: f64,
    /// Second-smallest eigenvalue square root, for spectral-gap context.
    pub next_beta: f64,
    /// Largest `sqrt(lambda)`, an upper bound for `b(v, q) / (|||v||| ||q||)`.
    pub max_beta: f64,
    pub pressure_dofs: usize,
    pub h: f64,
}

/// `beta_h = sqrt(lambda_min)` of `B A^{-1} B^T x = lambda M_p x` on the
/// zero-mean pressures.
pub fn discrete_inf_sup(disc: &Discretization) -> Result<InfSupReport> {
    let dofs = disc.dofs();
    let np = dofs.num_pressure();
    if np > INF_SUP_MAX_PRESSURE_DOFS {
        return Err(Error::Numerical(format!(
            "{np} pressure unknowns exceed the dense eigensolve limit {INF_SUP_MAX_PRESSURE_DOFS}"
        )));
    }
    if np < 2 {
        return Err(Error::Numerical("a single pressure unknown has no zero-mean subspace".into()));
    }
    let sys = assemble(disc, |_| [0.0, 0.0], |_| [0.0, 0.0])?;
    let nf = sys.num_free();

    faer::set_global_parallelism(faer::Par::Seq);
    let a = sys.a.to_faer()?;
    let llt = a.sp_cholesky(Side::Lower).map_err(|e| {
        Error::Numerical(format!("A is not positive definite on the test space: {e:?}"))
    })?;
    // S = B A^{-1} B^T, a block of columns at a time
    let bt = sys.b.transpose();
    let mut s = DMatrix::<f64>::zeros(np, np);
    const CHUNK: usize = 256;
    let mut cols_start = 0;
    while cols_start < np {
        let width = CHUNK.min(np - cols_start);
        let mut x = Mat::<f64>::zeros(nf, width);
        for r in 0..nf {
            for (c, v) in bt.row(r) {
                if (cols_start..cols_start + width).contains(&c) {
                    x[(r, c - cols_start)] = v;
                }
            }
        }
        llt.solve_in_place(x.as_mut());
        for i in 0..np {
            for (col, v) in sys.b.row(i) {
                for j in 0..width {
                    s[(i, cols_start + j)] += v * x[(col, j)];
                }
            }
        }
        cols_start += width;
    }
    s = 0.5 * (&s + s.transpose());

    // C = L^{-1} S L^{-T} with L the block Cholesky factor of M_p, and
    // z = L^T e with e the coefficients of the constant function
    let mut z = nalgebra::DVector::<f64>::zeros(np);
    let mut c = s;
    for cell in 0..dofs.num_cells() {
        let r = dofs.pressure(cell);
        let chol = disc.local_ops(cell).mass_p_cholesky();
        let lc = chol.l();
        let rows = c.rows(r.start, r.len()).into_owned();
        let solved = lc
            .solve_lower_triangular(&rows)
            .ok_or_else(|| Error::Numerical(format!("singular pressure mass factor on cell {cell}")))?;
        c.rows_mut(r.start, r.len()).copy_from(&solved);
        let ec = chol.solve(&nalgebra::DVector::from_column_slice(disc.local_ops(cell).pressure_integrals()));
        z.rows_mut(r.start, r.len()).copy_from(&(lc.transpose() * ec));
    }
    for cell in 0..dofs.num_cells() {
        let r = dofs.pressure(cell);
        let lc = disc.local_ops(cell).mass_p_cholesky().l();
        let cols = c.columns(r.start, r.len()).transpose();
        let solved = lc
            .solve_lower_triangular(&cols)
            .ok_or_else(|| Error::Numerical(format!("singular pressure mass factor on cell {cell}")))?;
        c.columns_mut(r.start, r.len()).copy_from(&solved.transpose());
    }

    // Householder reflection H taking z to a multiple of e_1; H C H restricted
    // to the trailing block is C on the zero-mean subspace
    let mut w = z.clone();
    w[0] += z[0].signum() * z.norm();
    let tau = 2.0 / w.norm_squared();
    let cw = &c * &w;
    let wcw = w.dot(&cw);
    let rc = &c - tau * (&w * cw.transpose() + &cw * w.transpose()) + (tau * tau * wcw) * (&w * w.transpose());
    let reduced = rc.view((1, 1), (np - 1, np - 1)).into_owned();

    let m = Mat::<f64>::from_fn(np - 1, np - 1, |i, j| reduced[(i, j)]);
    let eig = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("dense eigensolve failed: {e:?}")))?;
    let root = |x: f64| x.max(0.0).sqrt();
    Ok(InfSupReport {
        beta: root(eig[0]),
        next_beta: root(*eig.get(1).unwrap_or(&eig[0])),
        max_beta: root(*eig.last().expect("at least one eigenvalue")),
        pressure_dofs: np,
        h: disc.mesh().mesh_size(),
    })
}
