use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::ExactSolution;
use crate::assembly::eval_s;
use crate::error::{Error, Result};
use crate::solver::SolveReport;
use crate::spaces::{Discretization, WeakFunction};

/// Weak gradient on `cell` from its defining identity, evaluated with
/// quadrature of `v0` and `v_b` directly (no cached element matrices).
///
/// Layout matches [`crate::weak_ops::LocalElementOps::weak_gradient`].
pub fn weak_gradient_direct(disc: &Discretization, v: &WeakFunction, cell: usize) -> Result<Vec<f64>> {
    disc.check_weak(v)?;
    let mesh = disc.mesh();
    let basis = disc.basis(cell);
    let np = disc.dofs().pressure_dim();
    let mut mass = DMatrix::<f64>::zeros(np, np);
    let mut rhs = DMatrix::<f64>::zeros(np, 4);
    for (p, w) in disc.cell_rule(cell).iter() {
        let vals = basis.eval(p);
        let grads = basis.grad(p);
        let v0 = disc.eval_interior(v, cell, p);
        for a in 0..np {
            for b in 0..np {
                mass[(a, b)] += w * vals[a] * vals[b];
            }
            for c in 0..2 {
                for d in 0..2 {
                    rhs[(a, 2 * c + d)] -= w * v0[c] * grads[a][d];
                }
            }
        }
    }
    for (s, &e) in mesh.cell_edges(cell).iter().enumerate() {
        let n = mesh.outward_normal(cell, s);
        let n = [n.x, n.y];
        let rule = &disc.edge_space(e).rule;
        for q in 0..rule.len() {
            let vb = disc.eval_boundary(v, e, rule.params[q]);
            let vals = basis.eval(rule.points[q]);
            for a in 0..np {
                for c in 0..2 {
                    for d in 0..2 {
                        rhs[(a, 2 * c + d)] += rule.weights[q] * vb[c] * vals[a] * n[d];
                    }
                }
            }
        }
    }
    let sol = mass
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateCell { cell, reason: "singular P_{k-1} mass matrix".into() })?;
    Ok((0..4).flat_map(|b| sol.column(b).iter().copied().collect::<Vec<_>>()).collect())
}

/// `(sum_T ||grad_w v||_T^2, s(v, v))`.
pub fn triple_bar_parts(disc: &Discretization, v: &WeakFunction) -> Result<(f64, f64)> {
    let np = disc.dofs().pressure_dim();
    let per_cell = (0..disc.mesh().num_cells())
        .into_par_iter()
        .map(|cell| {
            let g = weak_gradient_direct(disc, v, cell)?;
            let mut acc = 0.0;
            for (p, w) in disc.cell_rule(cell).iter() {
                for b in 0..4 {
                    let val = disc.eval_p_km1(cell, &g[b * np..(b + 1) * np], p);
                    acc += w * val * val;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((per_cell.iter().sum(), eval_s(disc, v, v)?))
}

/// `|||v|||`.
pub fn triple_bar_norm(disc: &Discretization, v: &WeakFunction) -> Result<f64> {
    let (g, s) = triple_bar_parts(disc, v)?;
    Ok((g + s).max(0.0).sqrt())
}

/// `|| div_w v ||` over the mesh.
pub fn weak_divergence_norm(disc: &Discretization, v: &WeakFunction) -> Result<f64> {
    let mut total = 0.0;
    for cell in 0..disc.mesh().num_cells() {
        let d = disc.weak_divergence(v, cell)?;
        for (p, w) in disc.cell_rule(cell).iter() {
            let val = disc.eval_p_km1(cell, &d, p);
            total += w * val * val;
        }
    }
    Ok(total.sqrt())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorBundle {
    /// `|||Q_h u - u_h|||`.
    pub triple_bar: f64,
    /// Weak-gradient part of `triple_bar^2`.
    pub triple_bar_gradient_sq: f64,
    /// Stabilizer part of `triple_bar^2`.
    pub triple_bar_stabilizer_sq: f64,
    /// `||Q_0 u - u_0||`.
    pub vel_l2_proj: f64,
    /// `||u - u_0||`.
    pub vel_l2_true: f64,
    /// `||Q_h p - p_h||`.
    pub pres_l2: f64,
    /// `||p - p_h||`.
    pub pres_l2_true: f64,
    pub h: f64,
}

pub fn error_bundle(
    disc: &Discretization,
    exact: &impl ExactSolution,
    solution: &SolveReport,
) -> Result<ErrorBundle> {
    disc.check_weak(&solution.velocity)?;
    disc.check_pressure(&solution.pressure)?;
    let qu = disc.interpolate_qh(|p| exact.velocity(p));
    let qp = disc.project_pressure(|p| exact.pressure(p));
    let e = qu.sub(&solution.velocity)?;
    let (g, s) = triple_bar_parts(disc, &e)?;
    let dofs = disc.dofs();

    let sums = (0..disc.mesh().num_cells())
        .into_par_iter()
        .map(|cell| {
            let mut acc = [0.0; 4];
            let qp_c = &qp.values()[dofs.pressure(cell)];
            let ph_c = &solution.pressure.values()[dofs.pressure(cell)];
            for (p, w) in disc.cell_rule(cell).iter() {
                let u0 = disc.eval_interior(&solution.velocity, cell, p);
                let q0 = disc.eval_interior(&qu, cell, p);
                let ue = exact.velocity(p);
                let ph = disc.eval_p_km1(cell, ph_c, p);
                let qpv = disc.eval_p_km1(cell, qp_c, p);
                acc[0] += w * ((q0[0] - u0[0]).powi(2) + (q0[1] - u0[1]).powi(2));
                acc[1] += w * ((ue[0] - u0[0]).powi(2) + (ue[1] - u0[1]).powi(2));
                acc[2] += w * (qpv - ph).powi(2);
                acc[3] += w * (exact.pressure(p) - ph).powi(2);
            }
            acc
        })
        .collect::<Vec<_>>();
    let mut tot = [0.0; 4];
    for a in sums {
        for i in 0..4 {
            tot[i] += a[i];
        }
    }
    Ok(ErrorBundle {
        triple_bar: (g + s).max(0.0).sqrt(),
        triple_bar_gradient_sq: g,
        triple_bar_stabilizer_sq: s,
        vel_l2_proj: tot[0].sqrt(),
        vel_l2_true: tot[1].sqrt(),
        pres_l2: tot[2].sqrt(),
        pres_l2_true: tot[3].sqrt(),
        h: disc.mesh().mesh_size(),
    })
}
