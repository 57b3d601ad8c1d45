//! The discrete spaces and the local L2 projections onto them.
//!
//! A [`Discretization`] bundles a mesh, the degree `k`, the degree-of-freedom
//! numbering and every per-cell and per-edge cache (bases, quadrature rules,
//! factored mass matrices and the local weak operators). It is immutable once
//! built and can be shared across threads.

mod dofs;
mod functions;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

pub use dofs::DofMap;
pub use functions::{PressureFunction, WeakFunction};

use crate::basis::{CellBasis, EdgeBasis};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::PolygonalMesh;
use crate::quadrature::{edge_quadrature, polygon_quadrature, EdgeQuadrature, QuadratureRule};
use crate::weak_ops::LocalElementOps;

/// Vector field `R^2 -> R^2`.
pub trait VectorField: Fn(Point) -> [f64; 2] + Sync {}
impl<F: Fn(Point) -> [f64; 2] + Sync> VectorField for F {}

/// Scalar field `R^2 -> R`.
pub trait ScalarField: Fn(Point) -> f64 + Sync {}
impl<F: Fn(Point) -> f64 + Sync> ScalarField for F {}

/// Tensor field `R^2 -> R^{2x2}`, row `c` holding the gradient of component `c`.
pub trait TensorField: Fn(Point) -> [[f64; 2]; 2] + Sync {}
impl<F: Fn(Point) -> [[f64; 2]; 2] + Sync> TensorField for F {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DiscretizationOptions {
    /// Polynomial degree integrated exactly on cells; `None` means `2k + 2`.
    pub cell_exactness: Option<u32>,
    /// Polynomial degree integrated exactly on edges; `None` means `2k + 1`.
    pub edge_exactness: Option<u32>,
    /// Orthonormalize cell bases (useful from `k = 4` on).
    pub orthonormal: bool,
}

impl DiscretizationOptions {
    pub fn with_exactness(cell: u32, edge: u32) -> Self {
        DiscretizationOptions {
            cell_exactness: Some(cell),
            edge_exactness: Some(edge),
            orthonormal: false,
        }
    }
}

/// Per-edge basis, quadrature and factored mass matrix.
#[derive(Clone, Debug)]
pub struct EdgeSpace {
    pub basis: EdgeBasis,
    /// Rule along the canonical orientation of the edge.
    pub rule: EdgeQuadrature,
    pub mass: DMatrix<f64>,
    pub mass_chol: Cholesky<f64, Dyn>,
}

impl EdgeSpace {
    fn new(mesh: &PolygonalMesh, e: usize, degree: usize, exactness: u32) -> Result<Self> {
        let (a, b) = mesh.edge_points(e);
        let rule = edge_quadrature(a, b, exactness)?;
        let basis = EdgeBasis::new(degree);
        let n = basis.dim();
        let mut mass = DMatrix::zeros(n, n);
        let mut phi = vec![0.0; n];
        for q in 0..rule.len() {
            basis.eval_into(rule.params[q], &mut phi);
            for i in 0..n {
                for j in 0..n {
                    mass[(i, j)] += rule.weights[q] * phi[i] * phi[j];
                }
            }
        }
        let mass_chol = Cholesky::new(mass.clone()).ok_or_else(|| {
            Error::Geometry(format!("edge {e} has a singular mass matrix"))
        })?;
        Ok(EdgeSpace { basis, rule, mass, mass_chol })
    }
}

#[derive(Clone, Debug)]
pub struct Discretization {
    mesh: PolygonalMesh,
    degree: usize,
    options: DiscretizationOptions,
    cell_exactness: u32,
    edge_exactness: u32,
    dofs: DofMap,
    bases: Vec<CellBasis>,
    rules: Vec<QuadratureRule>,
    edges: Vec<EdgeSpace>,
    ops: Vec<LocalElementOps>,
}

impl Discretization {
    pub fn new(mesh: PolygonalMesh, degree: usize) -> Result<Self> {
        Self::with_options(mesh, degree, DiscretizationOptions::default())
    }

    pub fn with_options(
        mesh: PolygonalMesh,
        degree: usize,
        options: DiscretizationOptions,
    ) -> Result<Self> {
        if degree == 0 || degree > 8 {
            return Err(Error::Config(format!(
                "velocity degree k = {degree} is outside the supported range 1..=8"
            )));
        }
        let k = degree as u32;
        let cell_exactness = options.cell_exactness.unwrap_or(2 * k + 2);
        let edge_exactness = options.edge_exactness.unwrap_or(2 * k + 1);
        if cell_exactness < 2 * k || edge_exactness < 2 * k - 1 {
            return Err(Error::Config(format!(
                "quadrature exactness ({cell_exactness}, {edge_exactness}) is below (2k, 2k-1) for k = {degree}"
            )));
        }
        let dofs = DofMap::new(&mesh, degree);

        let edges = (0..mesh.num_edges())
            .into_par_iter()
            .map(|e| EdgeSpace::new(&mesh, e, degree - 1, edge_exactness))
            .collect::<Result<Vec<_>>>()?;

        let cells = (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let pts = mesh.cell_points(c);
                let center = mesh.cell_centroid(c);
                let scale = mesh.cell_diameter(c);
                let rule = polygon_quadrature(&pts, center, cell_exactness)?;
                let basis = if options.orthonormal {
                    CellBasis::orthonormalized(degree, center, scale, &rule)
                } else {
                    CellBasis::scaled_monomials(degree, center, scale)
                };
                let ops = LocalElementOps::build(&mesh, c, &basis, &rule, &edges, &dofs)?;
                Ok((basis, rule, ops))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut bases = Vec::with_capacity(cells.len());
        let mut rules = Vec::with_capacity(cells.len());
        let mut ops = Vec::with_capacity(cells.len());
        for (b, r, o) in cells {
            bases.push(b);
            rules.push(r);
            ops.push(o);
        }
        Ok(Discretization {
            mesh,
            degree,
            options,
            cell_exactness,
            edge_exactness,
            dofs,
            bases,
            rules,
            edges,
            ops,
        })
    }

    pub fn mesh(&self) -> &PolygonalMesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn options(&self) -> DiscretizationOptions {
        self.options
    }

    /// `(cell, edge)` quadrature exactness in use.
    pub fn exactness(&self) -> (u32, u32) {
        (self.cell_exactness, self.edge_exactness)
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn basis(&self, c: usize) -> &CellBasis {
        &self.bases[c]
    }

    pub fn cell_rule(&self, c: usize) -> &QuadratureRule {
        &self.rules[c]
    }

    pub fn edge_space(&self, e: usize) -> &EdgeSpace {
        &self.edges[e]
    }

    pub fn local_ops(&self, c: usize) -> &LocalElementOps {
        &self.ops[c]
    }

    pub fn all_local_ops(&self) -> &[LocalElementOps] {
        &self.ops
    }

    pub(crate) fn check_weak(&self, v: &WeakFunction) -> Result<()> {
        if v.len() != self.dofs.num_velocity() || v.degree() != self.degree {
            return Err(Error::Contract(format!(
                "weak function (degree {}, {} coefficients) does not match the discretization (degree {}, {})",
                v.degree(),
                v.len(),
                self.degree,
                self.dofs.num_velocity()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_pressure(&self, q: &PressureFunction) -> Result<()> {
        if q.len() != self.dofs.num_pressure() || q.degree() != self.degree {
            return Err(Error::Contract(format!(
                "pressure function ({} coefficients) does not match the discretization ({})",
                q.len(),
                self.dofs.num_pressure()
            )));
        }
        Ok(())
    }

    /// Local coefficient vector of `v` on cell `c`.
    pub fn local_coefficients(&self, v: &WeakFunction, c: usize) -> Result<Vec<f64>> {
        self.check_weak(v)?;
        Ok(self.ops[c].local_dofs().iter().map(|&g| v.values()[g]).collect())
    }

    /// Weak gradient of `v` on cell `c` as tensor coefficients.
    pub fn weak_gradient(&self, v: &WeakFunction, c: usize) -> Result<Vec<f64>> {
        self.ops[c].apply_weak_gradient(&self.local_coefficients(v, c)?)
    }

    /// Weak divergence of `v` on cell `c` as `P_{k-1}` coefficients.
    pub fn weak_divergence(&self, v: &WeakFunction, c: usize) -> Result<Vec<f64>> {
        self.ops[c].apply_weak_divergence(&self.local_coefficients(v, c)?)
    }

    // ---- evaluation -----------------------------------------------------

    /// `v0` on cell `c` at `p`.
    pub fn eval_interior(&self, v: &WeakFunction, c: usize, p: Point) -> [f64; 2] {
        let vals = self.bases[c].eval(p);
        let mut out = [0.0; 2];
        for (comp, o) in out.iter_mut().enumerate() {
            let r = self.dofs.cell_component(c, comp);
            *o = vals.iter().zip(&v.values()[r]).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `grad v0` on cell `c` at `p`, row `comp` holding `grad v0_comp`.
    pub fn eval_interior_gradient(&self, v: &WeakFunction, c: usize, p: Point) -> [[f64; 2]; 2] {
        let g = self.bases[c].grad(p);
        let mut out = [[0.0; 2]; 2];
        for (comp, row) in out.iter_mut().enumerate() {
            let r = self.dofs.cell_component(c, comp);
            for (gi, &ci) in g.iter().zip(&v.values()[r]) {
                row[0] += gi[0] * ci;
                row[1] += gi[1] * ci;
            }
        }
        out
    }

    /// `v_b` on edge `e` at reference coordinate `t`.
    pub fn eval_boundary(&self, v: &WeakFunction, e: usize, t: f64) -> [f64; 2] {
        let phi = self.edges[e].basis.eval(t);
        let mut out = [0.0; 2];
        for (comp, o) in out.iter_mut().enumerate() {
            let r = self.dofs.edge_component(e, comp);
            *o = phi.iter().zip(&v.values()[r]).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Value of the `P_{k-1}` polynomial with coefficients `coeffs` on cell `c`.
    pub fn eval_p_km1(&self, c: usize, coeffs: &[f64], p: Point) -> f64 {
        let vals = self.bases[c].eval(p);
        vals.iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn eval_pressure(&self, q: &PressureFunction, c: usize, p: Point) -> f64 {
        self.eval_p_km1(c, &q.values()[self.dofs.pressure(c)], p)
    }

    /// `int_Omega q`.
    pub fn pressure_integral(&self, q: &PressureFunction) -> f64 {
        (0..self.mesh.num_cells())
            .map(|c| {
                let r = self.dofs.pressure(c);
                self.ops[c]
                    .pressure_integrals()
                    .iter()
                    .zip(&q.values()[r])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum()
    }

    // ---- projections ----------------------------------------------------

    /// `Q_0 f` on cell `c`: `[x coefficients, y coefficients]`.
    pub fn project_q0(&self, c: usize, f: impl VectorField) -> Vec<f64> {
        let basis = &self.bases[c];
        let nk = basis.dim();
        let mut rhs = DMatrix::zeros(nk, 2);
        let mut vals = vec![0.0; nk];
        for (p, w) in self.rules[c].iter() {
            basis.eval_into(p, &mut vals);
            let fv = f(p);
            for i in 0..nk {
                rhs[(i, 0)] += w * fv[0] * vals[i];
                rhs[(i, 1)] += w * fv[1] * vals[i];
            }
        }
        let sol = self.ops[c].mass_k_cholesky().solve(&rhs);
        sol.column(0).iter().chain(sol.column(1).iter()).copied().collect()
    }

    /// `Q_b f` on edge `e`: `[x coefficients, y coefficients]`.
    pub fn project_qb(&self, e: usize, f: impl VectorField) -> Vec<f64> {
        let edge = &self.edges[e];
        let ne = edge.basis.dim();
        let mut rhs = DMatrix::zeros(ne, 2);
        let mut phi = vec![0.0; ne];
        for q in 0..edge.rule.len() {
            edge.basis.eval_into(edge.rule.params[q], &mut phi);
            let fv = f(edge.rule.points[q]);
            let w = edge.rule.weights[q];
            for j in 0..ne {
                rhs[(j, 0)] += w * fv[0] * phi[j];
                rhs[(j, 1)] += w * fv[1] * phi[j];
            }
        }
        let sol = edge.mass_chol.solve(&rhs);
        sol.column(0).iter().chain(sol.column(1).iter()).copied().collect()
    }

    /// Component-wise `P_{k-1}` projection of a tensor field on cell `c`.
    pub fn project_tensor_qh(&self, c: usize, g: impl TensorField) -> Vec<f64> {
        let ops = &self.ops[c];
        let np = ops.pressure_dim();
        let basis = &self.bases[c];
        let mut rhs = DMatrix::zeros(np, 4);
        let mut vals = vec![0.0; basis.dim()];
        for (p, w) in self.rules[c].iter() {
            basis.eval_into(p, &mut vals);
            let gv = g(p);
            for beta in 0..np {
                for cc in 0..2 {
                    for d in 0..2 {
                        rhs[(beta, 2 * cc + d)] += w * gv[cc][d] * vals[beta];
                    }
                }
            }
        }
        let sol = ops.mass_p_cholesky().solve(&rhs);
        (0..4).flat_map(|b| sol.column(b).iter().copied().collect::<Vec<_>>()).collect()
    }

    /// `P_{k-1}` projection of a scalar field on cell `c`.
    pub fn project_scalar_qh(&self, c: usize, rho: impl ScalarField) -> Vec<f64> {
        let ops = &self.ops[c];
        let np = ops.pressure_dim();
        let basis = &self.bases[c];
        let mut rhs = DVector::zeros(np);
        let mut vals = vec![0.0; basis.dim()];
        for (p, w) in self.rules[c].iter() {
            basis.eval_into(p, &mut vals);
            let r = rho(p);
            for beta in 0..np {
                rhs[beta] += w * r * vals[beta];
            }
        }
        ops.mass_p_cholesky().solve(&rhs).iter().copied().collect()
    }

    /// `Q_h u = {Q_0 u, Q_b u}` on the whole mesh.
    pub fn interpolate_qh(&self, u: impl VectorField) -> WeakFunction {
        let mut v = WeakFunction::zeros(&self.dofs);
        let cells: Vec<Vec<f64>> = (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|c| self.project_q0(c, &u))
            .collect();
        let edges: Vec<Vec<f64>> = (0..self.mesh.num_edges())
            .into_par_iter()
            .map(|e| self.project_qb(e, &u))
            .collect();
        let vals = v.values_mut();
        for (c, block) in cells.into_iter().enumerate() {
            vals[self.dofs.cell_velocity(c)].copy_from_slice(&block);
        }
        for (e, block) in edges.into_iter().enumerate() {
            vals[self.dofs.edge_velocity(e)].copy_from_slice(&block);
        }
        v
    }

    /// `Q_h p` cell by cell.
    pub fn project_pressure(&self, p: impl ScalarField) -> PressureFunction {
        let blocks: Vec<Vec<f64>> = (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|c| self.project_scalar_qh(c, &p))
            .collect();
        PressureFunction::from_values(&self.dofs, blocks.concat())
            .expect("block sizes follow the dof map")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshFamily};

    fn unit_square(k: usize) -> Discretization {
        Discretization::new(generate_mesh(MeshFamily::UniformQuad, 1).unwrap(), k).unwrap()
    }

    #[test]
    fn q0_of_x_squared_is_best_linear_fit() {
        let d = unit_square(1);
        let c = d.project_q0(0, |p: Point| [p.x * p.x, 0.0]);
        // x - 1/6 in the scaled basis centred at (1/2, 1/2) with h = sqrt 2
        let h = 2f64.sqrt();
        let p = Point::new(0.3, 0.8);
        let val = c[0] + c[1] * (p.x - 0.5) / h + c[2] * (p.y - 0.5) / h;
        assert!((val - (p.x - 1.0 / 6.0)).abs() < 1e-14);
        assert!(c[3..].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn qb_of_s_squared_on_unit_edge() {
        let d = unit_square(2);
        // edge 0 runs from (0,0) to (1,0), so s = x
        let (a, b) = d.mesh().edge_points(0);
        assert_eq!((a, b), (Point::new(0.0, 0.0), Point::new(1.0, 0.0)));
        let c = d.project_qb(0, |p: Point| [p.x * p.x, 0.0]);
        let v = d.eval_boundary(&{
            let mut w = WeakFunction::zeros(d.dofs());
            w.values_mut()[d.dofs().edge_velocity(0)].copy_from_slice(&c);
            w
        }, 0, 0.2);
        let s = 0.6;
        assert!((v[0] - (s - 1.0 / 6.0)).abs() < 1e-14);
    }

    #[test]
    fn mean_projections() {
        let d = unit_square(1);
        assert!((d.project_scalar_qh(0, |p: Point| p.x)[0] - 0.5).abs() < 1e-15);
        assert!((d.project_scalar_qh(0, |_| 7.0)[0] - 7.0).abs() < 1e-14);
        let t = d.project_tensor_qh(0, |p: Point| [[2.0 * p.x, 0.0], [0.0, 0.0]]);
        assert!((t[0] - 1.0).abs() < 1e-14 && t[1..].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn degree_zero_rejected() {
        let m = generate_mesh(MeshFamily::UniformQuad, 1).unwrap();
        assert!(matches!(Discretization::new(m, 0), Err(Error::Config(_))));
    }
}
