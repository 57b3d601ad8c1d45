//! Global matrices of the saddle-point problem and matrix-free forms.
//!
//! Unknowns on boundary edges are fixed to `Q_b g` and eliminated, so the
//! assembled `A` and `B` act on the free numbering of [`DofMap`].

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::sparse::CsrMatrix;
use crate::spaces::{
    Discretization, DofMap, PressureFunction, VectorField, WeakFunction,
};
use crate::weak_ops::mat_vec;

/// Relative tolerance on the net boundary flux of `g`.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SaddleSystem {
    /// `a(., .)` on the free velocity unknowns.
    pub a: CsrMatrix,
    /// `b(v, q)` with rows indexed by pressure unknowns.
    pub b: CsrMatrix,
    /// `int_Omega` of each pressure basis function.
    pub c: Vec<f64>,
    /// Per-cell pressure mass matrices.
    pub pressure_mass: Vec<DMatrix<f64>>,
    pub rhs_u: Vec<f64>,
    pub rhs_p: Vec<f64>,
    /// Weak function carrying `Q_b g` on boundary edges and zero elsewhere.
    pub lift: WeakFunction,
    pub dofs: DofMap,
    /// Net flux `int_{boundary} g . n` found during assembly.
    pub boundary_flux: f64,
}

impl SaddleSystem {
    pub fn num_free(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_pressure(&self) -> usize {
        self.b.nrows()
    }

    /// Full weak function from values on the free unknowns.
    pub fn expand(&self, free: &[f64]) -> Result<WeakFunction> {
        let mut v = WeakFunction::from_free(&self.dofs, free)?;
        for (x, l) in v.values_mut().iter_mut().zip(self.lift.values()) {
            *x += *l;
        }
        Ok(v)
    }

    /// Writes `A`, `B` in coordinate format and the vectors one value per
    /// line into `dir`.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write_matrix = |name: &str, m: &CsrMatrix| -> Result<()> {
            let path = dir.join(name);
            let mut buf = Vec::new();
            m.write_coordinate(&mut buf).map_err(|e| Error::io(&path, e))?;
            fs::write(&path, buf).map_err(|e| Error::io(&path, e))
        };
        let write_vector = |name: &str, v: &[f64]| -> Result<()> {
            let path = dir.join(name);
            let text: String = v.iter().map(|x| format!("{x:?}\n")).collect();
            fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        write_matrix("A.coo", &self.a)?;
        write_matrix("B.coo", &self.b)?;
        write_vector("c.txt", &self.c)?;
        write_vector("rhs_u.txt", &self.rhs_u)?;
        write_vector("rhs_p.txt", &self.rhs_p)
    }
}

/// Net outflow of `g` through the boundary, with the magnitude `int |g . n|`.
pub fn boundary_flux(disc: &Discretization, g: impl VectorField) -> (f64, f64) {
    let mesh = disc.mesh();
    let mut net = 0.0;
    let mut abs = 0.0;
    for e in mesh.boundary_edges() {
        let cell = mesh.edge(e).left;
        let side = mesh.side_of(cell, e).expect("boundary edge belongs to its cell");
        let n = mesh.outward_normal(cell, side);
        let rule = &disc.edge_space(e).rule;
        for (&p, &w) in rule.points.iter().zip(&rule.weights) {
            let gv = g(p);
            let flux = gv[0] * n.x + gv[1] * n.y;
            net += w * flux;
            abs += w * flux.abs();
        }
    }
    (net, abs)
}

/// `Q_b g` on boundary edges, zero elsewhere.
pub fn boundary_lift(disc: &Discretization, g: impl VectorField) -> WeakFunction {
    let dofs = disc.dofs();
    let mut lift = WeakFunction::zeros(dofs);
    for e in disc.mesh().boundary_edges() {
        let block = disc.project_qb(e, &g);
        lift.values_mut()[dofs.edge_velocity(e)].copy_from_slice(&block);
    }
    lift
}

struct CellContribution {
    a: Vec<(usize, usize, f64)>,
    b: Vec<(usize, usize, f64)>,
    rhs_u: Vec<(usize, f64)>,
    rhs_p: Vec<(usize, f64)>,
}

pub fn assemble(disc: &Discretization, f: impl VectorField, g: impl VectorField) -> Result<SaddleSystem> {
    let (flux, magnitude) = boundary_flux(disc, &g);
    let tolerance = COMPATIBILITY_TOLERANCE * magnitude.max(1.0);
    if !(flux.abs() <= tolerance) {
        return Err(Error::Compatibility { flux, tolerance });
    }
    let dofs = disc.dofs();
    let lift = boundary_lift(disc, &g);
    let mesh = disc.mesh();

    let parts: Vec<CellContribution> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let ops = disc.local_ops(cell);
            let local = ops.local_dofs();
            let stiff = ops.stiffness();
            let div = ops.weak_divergence_rhs();
            let prange = dofs.pressure(cell);
            let free: Vec<Option<usize>> = local.iter().map(|&g| dofs.free_index(g)).collect();
            let lifted: Vec<f64> = local.iter().map(|&g| lift.values()[g]).collect();
            let has_lift = lifted.iter().any(|&x| x != 0.0);

            let mut out = CellContribution {
                a: Vec::with_capacity(local.len() * local.len()),
                b: Vec::with_capacity(prange.len() * local.len()),
                rhs_u: Vec::new(),
                rhs_p: Vec::new(),
            };
            for (i, fi) in free.iter().enumerate() {
                let Some(fi) = *fi else { continue };
                for (j, fj) in free.iter().enumerate() {
                    if let Some(fj) = *fj {
                        out.a.push((fi, fj, stiff[(i, j)]));
                    }
                }
            }
            for (beta, row) in prange.clone().enumerate() {
                for (j, fj) in free.iter().enumerate() {
                    if let Some(fj) = *fj {
                        out.b.push((row, fj, div[(beta, j)]));
                    }
                }
            }

            let load = interior_load(disc, cell, &f);
            for (i, &val) in load.iter().enumerate() {
                let fi = free[i].expect("interior unknowns are always free");
                out.rhs_u.push((fi, val));
            }
            if has_lift {
                let au = mat_vec(stiff, &lifted);
                for (i, fi) in free.iter().enumerate() {
                    if let Some(fi) = *fi {
                        out.rhs_u.push((fi, -au[i]));
                    }
                }
                let bu = mat_vec(div, &lifted);
                for (beta, row) in prange.enumerate() {
                    out.rhs_p.push((row, -bu[beta]));
                }
            }
            out
        })
        .collect();

    let nf = dofs.num_free();
    let np = dofs.num_pressure();
    let mut a_trip = Vec::new();
    let mut b_trip = Vec::new();
    let mut rhs_u = vec![0.0; nf];
    let mut rhs_p = vec![0.0; np];
    for part in parts {
        a_trip.extend(part.a);
        b_trip.extend(part.b);
        for (i, v) in part.rhs_u {
            rhs_u[i] += v;
        }
        for (i, v) in part.rhs_p {
            rhs_p[i] += v;
        }
    }
    let mut c = vec![0.0; np];
    for cell in 0..mesh.num_cells() {
        c[dofs.pressure(cell)].copy_from_slice(disc.local_ops(cell).pressure_integrals());
    }
    Ok(SaddleSystem {
        a: CsrMatrix::from_triplets(nf, nf, a_trip)?,
        b: CsrMatrix::from_triplets(np, nf, b_trip)?,
        c,
        pressure_mass: (0..mesh.num_cells())
            .map(|cell| disc.local_ops(cell).mass_p().clone())
            .collect(),
        rhs_u,
        rhs_p,
        lift,
        dofs: dofs.clone(),
        boundary_flux: flux,
    })
}

/// `(f, v0)_T` for every interior basis function of `cell`.
fn interior_load(disc: &Discretization, cell: usize, f: &impl VectorField) -> Vec<f64> {
    let basis = disc.basis(cell);
    let nk = basis.dim();
    let mut out = vec![0.0; 2 * nk];
    let mut vals = vec![0.0; nk];
    for (p, w) in disc.cell_rule(cell).iter() {
        basis.eval_into(p, &mut vals);
        let fv = f(p);
        for i in 0..nk {
            out[i] += w * fv[0] * vals[i];
            out[nk + i] += w * fv[1] * vals[i];
        }
    }
    out
}

/// Contraction of two tensor coefficient vectors on one cell: `int_T G : H`.
fn tensor_inner(disc: &Discretization, cell: usize, g: &[f64], h: &[f64]) -> f64 {
    let np = disc.local_ops(cell).pressure_dim();
    let mut total = 0.0;
    for (p, w) in disc.cell_rule(cell).iter() {
        for b in 0..4 {
            let gv = disc.eval_p_km1(cell, &g[b * np..(b + 1) * np], p);
            let hv = disc.eval_p_km1(cell, &h[b * np..(b + 1) * np], p);
            total += w * gv * hv;
        }
    }
    total
}

/// `s(v, w)` by edge quadrature of the projected jumps.
pub fn eval_s(disc: &Discretization, v: &WeakFunction, w: &WeakFunction) -> Result<f64> {
    disc.check_weak(v)?;
    disc.check_weak(w)?;
    let mesh = disc.mesh();
    let total = (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let h = mesh.cell_diameter(cell);
            let mut acc = 0.0;
            for &e in mesh.cell_edges(cell) {
                let jv = projected_jump(disc, v, cell, e);
                let jw = projected_jump(disc, w, cell, e);
                let space = disc.edge_space(e);
                for q in 0..space.rule.len() {
                    let t = space.rule.params[q];
                    let a = eval_edge_poly(disc, e, &jv, t);
                    let b = eval_edge_poly(disc, e, &jw, t);
                    acc += space.rule.weights[q] * (a[0] * b[0] + a[1] * b[1]);
                }
            }
            acc / h
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total)
}

/// Edge coefficients of `Q_b(v0|_e) - v_b` seen from `cell`.
pub(crate) fn projected_jump(disc: &Discretization, v: &WeakFunction, cell: usize, e: usize) -> Vec<f64> {
    let trace = disc.project_qb(e, |p: Point| disc.eval_interior(v, cell, p));
    let vb = &v.values()[disc.dofs().edge_velocity(e)];
    trace.iter().zip(vb).map(|(a, b)| a - b).collect()
}

pub(crate) fn eval_edge_poly(disc: &Discretization, e: usize, coeffs: &[f64], t: f64) -> [f64; 2] {
    let phi = disc.edge_space(e).basis.eval(t);
    let ne = phi.len();
    let x = phi.iter().zip(&coeffs[..ne]).map(|(a, b)| a * b).sum();
    let y = phi.iter().zip(&coeffs[ne..]).map(|(a, b)| a * b).sum();
    [x, y]
}

/// `a(v, w)` evaluated cell by cell without the assembled matrix.
pub fn eval_a(disc: &Discretization, v: &WeakFunction, w: &WeakFunction) -> Result<f64> {
    disc.check_weak(v)?;
    disc.check_weak(w)?;
    let grads: Vec<Result<f64>> = (0..disc.mesh().num_cells())
        .into_par_iter()
        .map(|cell| {
            let gv = disc.weak_gradient(v, cell)?;
            let gw = disc.weak_gradient(w, cell)?;
            Ok(tensor_inner(disc, cell, &gv, &gw))
        })
        .collect();
    let mut total = 0.0;
    for g in grads {
        total += g?;
    }
    Ok(total + eval_s(disc, v, w)?)
}

/// `b(v, q) = (div_w v, q)`.
pub fn eval_b(disc: &Discretization, v: &WeakFunction, q: &PressureFunction) -> Result<f64> {
    disc.check_weak(v)?;
    disc.check_pressure(q)?;
    let dofs = disc.dofs();
    let mut total = 0.0;
    for cell in 0..disc.mesh().num_cells() {
        let div = disc.weak_divergence(v, cell)?;
        let qc = &q.values()[dofs.pressure(cell)];
        for (p, w) in disc.cell_rule(cell).iter() {
            total += w * disc.eval_p_km1(cell, &div, p) * disc.eval_p_km1(cell, qc, p);
        }
    }
    Ok(total)
}
