//! Element-local weak gradient, weak divergence and stabilizer.
//!
//! Everything here acts on the local coefficient vector of one cell, laid
//! out as `[v0_x, v0_y, (vb_x, vb_y) for each side in loop order]`. Tensor
//! outputs use row `(2c + d) * np + beta` for the `(c, d)` entry tested
//! against the `beta`-th pressure basis function.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::basis::{poly_dim, CellBasis};
use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;
use crate::quadrature::QuadratureRule;
use crate::spaces::{DofMap, EdgeSpace};

#[derive(Clone, Debug)]
pub struct LocalElementOps {
    cell: usize,
    nk: usize,
    np: usize,
    ne: usize,
    num_sides: usize,
    h: f64,
    mass_k: DMatrix<f64>,
    mass_k_chol: Cholesky<f64, Dyn>,
    mass_p: DMatrix<f64>,
    mass_p_chol: Cholesky<f64, Dyn>,
    pressure_integrals: Vec<f64>,
    grad_rhs: DMatrix<f64>,
    grad: DMatrix<f64>,
    div_rhs: DMatrix<f64>,
    div: DMatrix<f64>,
    stab: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    local_dofs: Vec<usize>,
}

fn factor(m: &DMatrix<f64>, cell: usize, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| Error::DegenerateCell {
        cell,
        reason: format!("{what} mass matrix is not positive definite"),
    })
}

impl LocalElementOps {
    pub fn build(
        mesh: &PolygonalMesh,
        cell: usize,
        basis: &CellBasis,
        rule: &QuadratureRule,
        edges: &[EdgeSpace],
        dofs: &DofMap,
    ) -> Result<Self> {
        let k = dofs.degree();
        let nk = basis.dim();
        let np = poly_dim(k - 1);
        let ne = dofs.edge_dim();
        let sides = mesh.cell_edges(cell);
        let num_sides = sides.len();
        let n_local = 2 * nk + num_sides * 2 * ne;
        let h = mesh.cell_diameter(cell);

        let mut mass_k = DMatrix::zeros(nk, nk);
        let mut pressure_integrals = vec![0.0; np];
        let mut grad_rhs = DMatrix::zeros(4 * np, n_local);
        let mut div_rhs = DMatrix::zeros(np, n_local);
        let mut vals = vec![0.0; nk];
        let mut grads = vec![[0.0; 2]; nk];
        for (p, w) in rule.iter() {
            basis.eval_into(p, &mut vals);
            basis.grad_into(p, &mut grads);
            for i in 0..nk {
                for j in 0..nk {
                    mass_k[(i, j)] += w * vals[i] * vals[j];
                }
            }
            for beta in 0..np {
                pressure_integrals[beta] += w * vals[beta];
            }
            // -(v0, div q): the (c, d) entry of q = m_beta pairs v0_c with d_d m_beta
            for c in 0..2 {
                for d in 0..2 {
                    for beta in 0..np {
                        let row = (2 * c + d) * np + beta;
                        let g = grads[beta][d];
                        for i in 0..nk {
                            grad_rhs[(row, c * nk + i)] -= w * vals[i] * g;
                        }
                    }
                }
            }
            // -(v0, grad phi)
            for beta in 0..np {
                for c in 0..2 {
                    let g = grads[beta][c];
                    for i in 0..nk {
                        div_rhs[(beta, c * nk + i)] -= w * vals[i] * g;
                    }
                }
            }
        }
        mass_k = 0.5 * (&mass_k + mass_k.transpose());
        let mass_k_chol = factor(&mass_k, cell, "P_k")?;
        let mass_p = mass_k.view((0, 0), (np, np)).into_owned();
        let mass_p_chol = factor(&mass_p, cell, "P_{k-1}")?;

        let mut stab = DMatrix::zeros(n_local, n_local);
        let mut phi = vec![0.0; ne];
        for (s, &e) in sides.iter().enumerate() {
            let edge = &edges[e];
            let normal = mesh.outward_normal(cell, s);
            let n = [normal.x, normal.y];
            let off = 2 * nk + s * 2 * ne;
            // C[j, i] = <phi_j, m_i>_e
            let mut trace = DMatrix::zeros(ne, nk);
            for q in 0..edge.rule.len() {
                let w = edge.rule.weights[q];
                let p = edge.rule.points[q];
                edge.basis.eval_into(edge.rule.params[q], &mut phi);
                basis.eval_into(p, &mut vals);
                for j in 0..ne {
                    for i in 0..nk {
                        trace[(j, i)] += w * phi[j] * vals[i];
                    }
                }
                for c in 0..2 {
                    for d in 0..2 {
                        for beta in 0..np {
                            let row = (2 * c + d) * np + beta;
                            let t = w * vals[beta] * n[d];
                            for j in 0..ne {
                                grad_rhs[(row, off + c * ne + j)] += t * phi[j];
                            }
                        }
                    }
                }
                for beta in 0..np {
                    for c in 0..2 {
                        let t = w * vals[beta] * n[c];
                        for j in 0..ne {
                            div_rhs[(beta, off + c * ne + j)] += t * phi[j];
                        }
                    }
                }
            }
            let proj = edge.mass_chol.solve(&trace);
            for c in 0..2 {
                let mut jump = DMatrix::zeros(ne, n_local);
                jump.view_mut((0, c * nk), (ne, nk)).copy_from(&proj);
                for j in 0..ne {
                    jump[(j, off + c * ne + j)] = -1.0;
                }
                stab += (jump.transpose() * &edge.mass * &jump) / h;
            }
        }

        let mut grad = DMatrix::zeros(4 * np, n_local);
        for b in 0..4 {
            let block = grad_rhs.view((b * np, 0), (np, n_local)).into_owned();
            grad.view_mut((b * np, 0), (np, n_local))
                .copy_from(&mass_p_chol.solve(&block));
        }
        let div = mass_p_chol.solve(&div_rhs);

        stab = 0.5 * (&stab + stab.transpose());
        let mut stiffness = grad_rhs.transpose() * &grad + &stab;
        stiffness = 0.5 * (&stiffness + stiffness.transpose());

        Ok(LocalElementOps {
            cell,
            nk,
            np,
            ne,
            num_sides,
            h,
            mass_k,
            mass_k_chol,
            mass_p,
            mass_p_chol,
            pressure_integrals,
            grad_rhs,
            grad,
            div_rhs,
            div,
            stab,
            stiffness,
            local_dofs: dofs.local_velocity_indices(mesh, cell),
        })
    }

    pub fn cell(&self) -> usize {
        self.cell
    }

    pub fn num_local(&self) -> usize {
        self.local_dofs.len()
    }

    pub fn num_sides(&self) -> usize {
        self.num_sides
    }

    pub fn pressure_dim(&self) -> usize {
        self.np
    }

    pub fn cell_dim(&self) -> usize {
        self.nk
    }

    pub fn edge_dim(&self) -> usize {
        self.ne
    }

    pub fn diameter(&self) -> f64 {
        self.h
    }

    /// Mass matrix of `P_k(T)`.
    pub fn mass_k(&self) -> &DMatrix<f64> {
        &self.mass_k
    }

    pub fn mass_k_cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.mass_k_chol
    }

    /// Mass matrix of `P_{k-1}(T)`; its blocks also serve the tensor space.
    pub fn mass_p(&self) -> &DMatrix<f64> {
        &self.mass_p
    }

    pub fn mass_p_cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.mass_p_chol
    }

    /// `int_T m_beta` for the pressure basis.
    pub fn pressure_integrals(&self) -> &[f64] {
        &self.pressure_integrals
    }

    /// `G_T`.
    pub fn weak_gradient(&self) -> &DMatrix<f64> {
        &self.grad
    }

    /// Right-hand side of the weak-gradient equation, `M G_T`.
    pub fn weak_gradient_rhs(&self) -> &DMatrix<f64> {
        &self.grad_rhs
    }

    /// `D_T`.
    pub fn weak_divergence(&self) -> &DMatrix<f64> {
        &self.div
    }

    /// `M_p D_T`, the local block of `b(v, q) = q^T (M_p D_T) v`.
    pub fn weak_divergence_rhs(&self) -> &DMatrix<f64> {
        &self.div_rhs
    }

    /// `S_T`.
    pub fn stabilizer(&self) -> &DMatrix<f64> {
        &self.stab
    }

    /// Local matrix of `a(., .)`.
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// Global velocity indices of the local coefficients.
    pub fn local_dofs(&self) -> &[usize] {
        &self.local_dofs
    }

    fn check_len(&self, got: usize, what: &str) -> Result<()> {
        if got != self.num_local() {
            return Err(Error::Contract(format!(
                "{what} on cell {} expects {} local coefficients, got {got}",
                self.cell,
                self.num_local()
            )));
        }
        Ok(())
    }

    pub fn apply_weak_gradient(&self, local: &[f64]) -> Result<Vec<f64>> {
        self.check_len(local.len(), "weak gradient")?;
        Ok(mat_vec(&self.grad, local))
    }

    pub fn apply_weak_divergence(&self, local: &[f64]) -> Result<Vec<f64>> {
        self.check_len(local.len(), "weak divergence")?;
        Ok(mat_vec(&self.div, local))
    }

    /// `s_T(v, w)` from the cached matrix.
    pub fn stabilizer_form(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        self.check_len(v.len(), "stabilizer")?;
        self.check_len(w.len(), "stabilizer")?;
        let sw = mat_vec(&self.stab, w);
        Ok(v.iter().zip(&sw).map(|(a, b)| a * b).sum())
    }
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for (o, &mij) in out.iter_mut().zip(m.column(j).iter()) {
            *o += mij * xj;
        }
    }
    out
}
