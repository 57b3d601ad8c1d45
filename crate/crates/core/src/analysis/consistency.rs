use faer::prelude::*;
use faer::sparse::linalg::solvers::Llt;
use faer::Side;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ExactSolution;
use crate::assembly::{eval_s, SaddleSystem};
use crate::error::{Error, Result};
use crate::solver::SolveReport;
use crate::spaces::{Discretization, WeakFunction};

/// The three consistency functionals at one test function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConsistencyValues {
    pub ell: f64,
    pub theta: f64,
    pub stab: f64,
    /// `ell - theta + stab`.
    pub phi: f64,
}

/// Edge integrand pieces at one quadrature point of one cell side:
/// `(grad w - Q_h grad w) n` and `(rho - Q_h rho) n`.
struct SideTerms {
    flux: Vec<[f64; 2]>,
    pressure: Vec<[f64; 2]>,
}

fn side_terms(
    disc: &Discretization,
    exact: &impl ExactSolution,
    cell: usize,
    side: usize,
    grad_proj: &[f64],
    p_proj: &[f64],
) -> SideTerms {
    let mesh = disc.mesh();
    let e = mesh.cell_edges(cell)[side];
    let n = mesh.outward_normal(cell, side);
    let np = disc.dofs().pressure_dim();
    let rule = &disc.edge_space(e).rule;
    let mut flux = Vec::with_capacity(rule.len());
    let mut pressure = Vec::with_capacity(rule.len());
    for &p in &rule.points {
        let g = exact.velocity_gradient(p);
        let mut f = [0.0; 2];
        for c in 0..2 {
            for (d, nd) in [n.x, n.y].into_iter().enumerate() {
                let b = 2 * c + d;
                let proj = disc.eval_p_km1(cell, &grad_proj[b * np..(b + 1) * np], p);
                f[c] += (g[c][d] - proj) * nd;
            }
        }
        flux.push(f);
        let rho = exact.pressure(p) - disc.eval_p_km1(cell, p_proj, p);
        pressure.push([rho * n.x, rho * n.y]);
    }
    SideTerms { flux, pressure }
}

/// `ell_w(v)`, `theta_rho(v)` by edge quadrature and `s(Q_h w, v)`.
pub fn consistency_functionals(
    disc: &Discretization,
    exact: &impl ExactSolution,
    v: &WeakFunction,
) -> Result<ConsistencyValues> {
    disc.check_weak(v)?;
    let mesh = disc.mesh();
    let parts: Vec<(f64, f64)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let gp = disc.project_tensor_qh(cell, |p| exact.velocity_gradient(p));
            let pp = disc.project_scalar_qh(cell, |p| exact.pressure(p));
            let mut ell = 0.0;
            let mut theta = 0.0;
            for (side, &e) in mesh.cell_edges(cell).iter().enumerate() {
                let terms = side_terms(disc, exact, cell, side, &gp, &pp);
                let rule = &disc.edge_space(e).rule;
                for q in 0..rule.len() {
                    let v0 = disc.eval_interior(v, cell, rule.points[q]);
                    let vb = disc.eval_boundary(v, e, rule.params[q]);
                    let jump = [v0[0] - vb[0], v0[1] - vb[1]];
                    let w = rule.weights[q];
                    ell += w * (jump[0] * terms.flux[q][0] + jump[1] * terms.flux[q][1]);
                    theta += w * (jump[0] * terms.pressure[q][0] + jump[1] * terms.pressure[q][1]);
                }
            }
            (ell, theta)
        })
        .collect();
    let ell: f64 = parts.iter().map(|p| p.0).sum();
    let theta: f64 = parts.iter().map(|p| p.1).sum();
    let qw = disc.interpolate_qh(|p| exact.velocity(p));
    let stab = eval_s(disc, &qw, v)?;
    Ok(ConsistencyValues {
        ell,
        theta,
        stab,
        phi: ell - theta + stab,
    })
}

/// The functionals as vectors over the global velocity numbering, so that
/// `ell(v) = ell . v`.
fn functional_vectors(
    disc: &Discretization,
    exact: &impl ExactSolution,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mesh = disc.mesh();
    let dofs = disc.dofs();
    let qw = disc.interpolate_qh(|p| exact.velocity(p));
    type CellVectors = (Vec<usize>, Vec<f64>, Vec<f64>, Vec<f64>);
    let local: Vec<CellVectors> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let ops = disc.local_ops(cell);
            let nk = ops.cell_dim();
            let ne = ops.edge_dim();
            let n_local = ops.num_local();
            let gp = disc.project_tensor_qh(cell, |p| exact.velocity_gradient(p));
            let pp = disc.project_scalar_qh(cell, |p| exact.pressure(p));
            let mut ell = vec![0.0; n_local];
            let mut theta = vec![0.0; n_local];
            let basis = disc.basis(cell);
            for (side, &e) in mesh.cell_edges(cell).iter().enumerate() {
                let terms = side_terms(disc, exact, cell, side, &gp, &pp);
                let space = disc.edge_space(e);
                let off = 2 * nk + side * 2 * ne;
                for q in 0..space.rule.len() {
                    let w = space.rule.weights[q];
                    let m = basis.eval(space.rule.points[q]);
                    let phi = space.basis.eval(space.rule.params[q]);
                    for c in 0..2 {
                        let (fl, pr) = (terms.flux[q][c], terms.pressure[q][c]);
                        for i in 0..nk {
                            ell[c * nk + i] += w * m[i] * fl;
                            theta[c * nk + i] += w * m[i] * pr;
                        }
                        for j in 0..ne {
                            ell[off + c * ne + j] -= w * phi[j] * fl;
                            theta[off + c * ne + j] -= w * phi[j] * pr;
                        }
                    }
                }
            }
            let qloc: Vec<f64> = ops.local_dofs().iter().map(|&g| qw.values()[g]).collect();
            let stab = crate::weak_ops::mat_vec(ops.stabilizer(), &qloc);
            (ops.local_dofs().to_vec(), ell, theta, stab)
        })
        .collect();
    let n = dofs.num_velocity();
    let (mut ell, mut theta, mut stab) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (idx, l, t, s) in local {
        for (a, &g) in idx.iter().enumerate() {
            ell[g] += l[a];
            theta[g] += t[a];
            stab[g] += s[a];
        }
    }
    (ell, theta, stab)
}

fn restrict_free(disc: &Discretization, v: &[f64]) -> Vec<f64> {
    disc.dofs().free_dofs().iter().map(|&g| v[g]).collect()
}

fn factor_a(sys: &SaddleSystem) -> Result<Llt<usize, f64>> {
    faer::set_global_parallelism(faer::Par::Seq);
    sys.a
        .to_faer()?
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Numerical(format!("A is not positive definite: {e:?}")))
}

/// `sqrt(r^T A^{-1} r)`, the norm of `r` dual to `|||.|||` on the test space.
fn dual_norm(llt: &Llt<usize, f64>, r: &[f64]) -> f64 {
    let mut x = faer::Mat::<f64>::from_fn(r.len(), 1, |i, _| r[i]);
    llt.solve_in_place(x.as_mut());
    let q: f64 = (0..r.len()).map(|i| r[i] * x[(i, 0)]).sum();
    q.max(0.0).sqrt()
}

/// `sup_v |F(v)| / |||v|||` over the test space for each functional.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConsistencyDualNorms {
    pub ell: f64,
    pub theta: f64,
    pub stab: f64,
    pub h: f64,
}

pub fn consistency_dual_norms(
    disc: &Discretization,
    sys: &SaddleSystem,
    exact: &impl ExactSolution,
) -> Result<ConsistencyDualNorms> {
    let llt = factor_a(sys)?;
    let (ell, theta, stab) = functional_vectors(disc, exact);
    Ok(ConsistencyDualNorms {
        ell: dual_norm(&llt, &restrict_free(disc, &ell)),
        theta: dual_norm(&llt, &restrict_free(disc, &theta)),
        stab: dual_norm(&llt, &restrict_free(disc, &stab)),
        h: disc.mesh().mesh_size(),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorEquationResidual {
    /// Largest `|R(v)| / |||v|||` over the sampled test functions.
    pub momentum_sampled: f64,
    /// `sup_v |R(v)| / |||v|||` over the whole test space.
    pub momentum_dual: f64,
    /// `sup_q |b(e_h, q)| / ||q||` over all of `W_h`.
    pub continuity_dual: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Checks `a(e_h, v) - b(v, eps_h) = phi(v)` and `b(e_h, q) = 0`.
pub fn verify_error_equation(
    disc: &Discretization,
    sys: &SaddleSystem,
    solution: &SolveReport,
    exact: &impl ExactSolution,
    samples: usize,
    seed: u64,
) -> Result<ErrorEquationResidual> {
    let dofs = disc.dofs();
    let qu = disc.interpolate_qh(|p| exact.velocity(p));
    let qp = disc.project_pressure(|p| exact.pressure(p));
    let e = qu.sub(&solution.velocity)?;
    let eps = qp.sub(&solution.pressure)?;

    // a(e_h, .) and b(e_h, .) including any boundary part of e_h
    let nf = dofs.num_free();
    let mut ae = vec![0.0; nf];
    let mut be = vec![0.0; dofs.num_pressure()];
    for cell in 0..disc.mesh().num_cells() {
        let ops = disc.local_ops(cell);
        let loc: Vec<f64> = ops.local_dofs().iter().map(|&g| e.values()[g]).collect();
        let a_loc = crate::weak_ops::mat_vec(ops.stiffness(), &loc);
        for (i, &g) in ops.local_dofs().iter().enumerate() {
            if let Some(f) = dofs.free_index(g) {
                ae[f] += a_loc[i];
            }
        }
        let b_loc = crate::weak_ops::mat_vec(ops.weak_divergence_rhs(), &loc);
        for (beta, row) in dofs.pressure(cell).enumerate() {
            be[row] += b_loc[beta];
        }
    }
    let bt_eps = sys.b.transpose_mul_vec(eps.values());
    let (ell, theta, stab) = functional_vectors(disc, exact);
    let r: Vec<f64> = (0..nf)
        .map(|f| {
            let g = dofs.free_dofs()[f];
            ae[f] - bt_eps[f] - (ell[g] - theta[g] + stab[g])
        })
        .collect();

    let llt = factor_a(sys)?;
    let momentum_dual = dual_norm(&llt, &r);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut momentum_sampled: f64 = 0.0;
    for _ in 0..samples {
        let v: Vec<f64> = (0..nf).map(|_| rng.random_range(-1.0..1.0)).collect();
        let av = sys.a.mul_vec(&v);
        let energy: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        let rv: f64 = v.iter().zip(&r).map(|(a, b)| a * b).sum();
        momentum_sampled = momentum_sampled.max(rv.abs() / energy.sqrt());
    }

    let mut continuity = 0.0;
    for cell in 0..dofs.num_cells() {
        let range = dofs.pressure(cell);
        let rc = DVector::from_column_slice(&be[range]);
        let sol = disc.local_ops(cell).mass_p_cholesky().solve(&rc);
        continuity += rc.dot(&sol);
    }
    Ok(ErrorEquationResidual {
        momentum_sampled,
        momentum_dual,
        continuity_dual: continuity.max(0.0).sqrt(),
        samples,
        seed,
    })
}
