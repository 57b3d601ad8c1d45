use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ExactSolution;
use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::spaces::{Discretization, WeakFunction};

/// Best-approximation errors of the local L2 projections.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ProjectionErrors {
    /// `||u - Q_0 u||`.
    pub velocity: f64,
    /// `||grad u - Q_h grad u||`.
    pub gradient: f64,
    /// `||p - Q_h p||`.
    pub pressure: f64,
    pub h: f64,
}

pub fn projection_errors(disc: &Discretization, exact: &impl ExactSolution) -> ProjectionErrors {
    let np = disc.dofs().pressure_dim();
    let nk = disc.dofs().cell_dim();
    let sums: Vec<[f64; 3]> = (0..disc.mesh().num_cells())
        .into_par_iter()
        .map(|cell| {
            let q0 = disc.project_q0(cell, |p| exact.velocity(p));
            let qg = disc.project_tensor_qh(cell, |p| exact.velocity_gradient(p));
            let qp = disc.project_scalar_qh(cell, |p| exact.pressure(p));
            let basis = disc.basis(cell);
            let mut acc = [0.0; 3];
            for (p, w) in disc.cell_rule(cell).iter() {
                let m = basis.eval(p);
                let u = exact.velocity(p);
                let g = exact.velocity_gradient(p);
                for c in 0..2 {
                    let uh: f64 = (0..nk).map(|i| q0[c * nk + i] * m[i]).sum();
                    acc[0] += w * (u[c] - uh).powi(2);
                    for d in 0..2 {
                        let b = 2 * c + d;
                        let gh: f64 = (0..np).map(|i| qg[b * np + i] * m[i]).sum();
                        acc[1] += w * (g[c][d] - gh).powi(2);
                    }
                }
                let ph: f64 = (0..np).map(|i| qp[i] * m[i]).sum();
                acc[2] += w * (exact.pressure(p) - ph).powi(2);
            }
            acc
        })
        .collect();
    let mut tot = [0.0; 3];
    for a in sums {
        for i in 0..3 {
            tot[i] += a[i];
        }
    }
    ProjectionErrors {
        velocity: tot[0].sqrt(),
        gradient: tot[1].sqrt(),
        pressure: tot[2].sqrt(),
        h: disc.mesh().mesh_size(),
    }
}

/// Largest `||g||_e^2 / (h_T^{-1} ||g||_T^2 + h_T ||grad g||_T^2)` over
/// random `g` in `P_k(T)`, every cell and every side.
pub fn trace_inequality_ratio(disc: &Discretization, samples: usize, seed: u64) -> f64 {
    let nk = disc.dofs().cell_dim();
    let mesh = disc.mesh();
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (cell as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let basis = disc.basis(cell);
            let h = mesh.cell_diameter(cell);
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let coef: Vec<f64> = (0..nk).map(|_| rng.random_range(-1.0..1.0)).collect();
                let value = |p| basis.eval(p).iter().zip(&coef).map(|(m, c)| m * c).sum::<f64>();
                let (mut l2, mut h1) = (0.0, 0.0);
                for (p, w) in disc.cell_rule(cell).iter() {
                    let g = basis.grad(p);
                    let gx: f64 = g.iter().zip(&coef).map(|(d, c)| d[0] * c).sum();
                    let gy: f64 = g.iter().zip(&coef).map(|(d, c)| d[1] * c).sum();
                    l2 += w * value(p).powi(2);
                    h1 += w * (gx * gx + gy * gy);
                }
                let denom = l2 / h + h * h1;
                for &e in mesh.cell_edges(cell) {
                    let trace = disc.edge_space(e).rule.integrate(|p| value(p).powi(2));
                    worst = worst.max(trace / denom);
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Largest `sum_T ||grad v_0||_T^2 / |||v|||^2` over random `v` in the test
/// space, with `|||v|||^2` taken from the assembled matrix.
pub fn gradient_energy_ratio(
    disc: &Discretization,
    sys: &SaddleSystem,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let dofs = disc.dofs();
    if sys.num_free() != dofs.num_free() {
        return Err(Error::Contract("system and discretization disagree on the test space".into()));
    }
    let nk = dofs.cell_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let free: Vec<f64> = (0..dofs.num_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let energy: f64 = free.iter().zip(sys.a.mul_vec(&free)).map(|(a, b)| a * b).sum();
        let v = WeakFunction::from_free(dofs, &free)?;
        let grad: f64 = (0..disc.mesh().num_cells())
            .into_par_iter()
            .map(|cell| {
                let basis = disc.basis(cell);
                let mut acc = 0.0;
                for (p, w) in disc.cell_rule(cell).iter() {
                    let g = basis.grad(p);
                    for comp in 0..2 {
                        let coef = &v.values()[dofs.cell_component(cell, comp)];
                        let gx: f64 = (0..nk).map(|i| g[i][0] * coef[i]).sum();
                        let gy: f64 = (0..nk).map(|i| g[i][1] * coef[i]).sum();
                        acc += w * (gx * gx + gy * gy);
                    }
                }
                acc
            })
            .sum();
        worst = worst.max(grad / energy);
    }
    Ok(worst)
}
