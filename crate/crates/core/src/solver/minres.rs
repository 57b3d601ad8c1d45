//! Preconditioned MINRES for the symmetric indefinite system.
//!
//! The preconditioner is block diagonal and symmetric positive definite:
//! the diagonal of `A` on velocities, the cell pressure mass matrices on
//! pressures, and `|Omega|` on the multiplier.

use nalgebra::{Cholesky, DVector, Dyn};

use super::norm;
use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub struct MinresOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final preconditioned residual relative to the initial one.
    pub preconditioned_residual: f64,
}

struct BlockPreconditioner {
    velocity: Vec<f64>,
    pressure: Vec<(std::ops::Range<usize>, Cholesky<f64, Dyn>)>,
    multiplier: f64,
}

impl BlockPreconditioner {
    fn new(sys: &SaddleSystem) -> Result<Self> {
        let velocity = (0..sys.num_free())
            .map(|i| {
                let d = sys.a.get(i, i);
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(Error::Solver(format!("non-positive diagonal {d:e} in row {i} of A")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let dofs = &sys.dofs;
        let mut pressure = Vec::with_capacity(dofs.num_cells());
        for (cell, m) in sys.pressure_mass.iter().enumerate() {
            let chol = Cholesky::new(m.clone()).ok_or_else(|| {
                Error::Solver(format!("pressure mass block of cell {cell} is not positive definite"))
            })?;
            pressure.push((dofs.pressure(cell), chol));
        }
        let area: f64 = (0..dofs.num_cells()).map(|cell| sys.c[dofs.pressure(cell).start]).sum();
        Ok(BlockPreconditioner {
            velocity,
            pressure,
            multiplier: 1.0 / area,
        })
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let nf = self.velocity.len();
        let mut z = vec![0.0; v.len()];
        for i in 0..nf {
            z[i] = self.velocity[i] * v[i];
        }
        for (range, chol) in &self.pressure {
            let rhs = DVector::from_iterator(range.len(), range.clone().map(|i| v[nf + i]));
            let sol = chol.solve(&rhs);
            for (a, i) in range.clone().enumerate() {
                z[nf + i] = sol[a];
            }
        }
        let last = v.len() - 1;
        z[last] = self.multiplier * v[last];
        z
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn minres(
    sys: &SaddleSystem,
    k: &CsrMatrix,
    b: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<MinresOutcome> {
    let n = b.len();
    let prec = BlockPreconditioner::new(sys)?;
    let mut x = vec![0.0; n];
    if norm(b) == 0.0 {
        return Ok(MinresOutcome {
            solution: x,
            iterations: 0,
            preconditioned_residual: 0.0,
        });
    }

    let mut v_prev = vec![0.0; n];
    let mut v = b.to_vec();
    let mut z = prec.apply(&v);
    let mut gamma = dot(&z, &v).sqrt();
    let gamma0 = gamma;
    let mut gamma_prev = 1.0;
    let mut eta = gamma;
    let (mut s_prev, mut s) = (0.0, 0.0);
    let (mut c_prev, mut c) = (1.0, 1.0);
    let mut w_prev = vec![0.0; n];
    let mut w = vec![0.0; n];

    for it in 1..=max_iterations {
        for zi in z.iter_mut() {
            *zi /= gamma;
        }
        let az = k.mul_vec(&z);
        let delta = dot(&az, &z);
        let v_next: Vec<f64> = (0..n)
            .map(|i| az[i] - (delta / gamma) * v[i] - (gamma / gamma_prev) * v_prev[i])
            .collect();
        let z_next = prec.apply(&v_next);
        let gamma_next = dot(&z_next, &v_next).max(0.0).sqrt();

        let alpha0 = c * delta - c_prev * s * gamma;
        let alpha1 = (alpha0 * alpha0 + gamma_next * gamma_next).sqrt();
        let alpha2 = s * delta + c_prev * c * gamma;
        let alpha3 = s_prev * gamma;
        if alpha1 == 0.0 {
            return Err(Error::Solver(format!("MINRES broke down at iteration {it}")));
        }
        c_prev = c;
        s_prev = s;
        c = alpha0 / alpha1;
        s = gamma_next / alpha1;

        let w_next: Vec<f64> = (0..n)
            .map(|i| (z[i] - alpha3 * w_prev[i] - alpha2 * w[i]) / alpha1)
            .collect();
        for i in 0..n {
            x[i] += c * eta * w_next[i];
        }
        eta *= -s;

        w_prev = std::mem::replace(&mut w, w_next);
        v_prev = std::mem::replace(&mut v, v_next);
        z = z_next;
        gamma_prev = gamma;
        gamma = gamma_next;

        let rel = eta.abs() / gamma0;
        if rel <= tolerance || gamma == 0.0 {
            return Ok(MinresOutcome {
                solution: x,
                iterations: it,
                preconditioned_residual: rel,
            });
        }
    }
    Err(Error::Solver(format!(
        "MINRES did not reach {tolerance:e} in {max_iterations} iterations (at {:e})",
        eta.abs() / gamma0
    )))
}
