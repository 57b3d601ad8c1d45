//! Solution of the assembled saddle-point system.
//!
//! The unknowns `(u, p, lambda)` satisfy the symmetric system
//!
//! ```text
//! [  A  -B^T  0 ] [ u      ]   [  rhs_u ]
//! [ -B   0    c ] [ p      ] = [ -rhs_p ]
//! [  0   c^T  0 ] [ lambda ]   [  0     ]
//! ```
//!
//! where the last row fixes the pressure mean and `lambda` vanishes for
//! compatible boundary data.

mod condense;
mod minres;

use std::time::Instant;

use faer::prelude::*;
use serde::Serialize;

pub use condense::{condense, recover_interior, CondensedSystem};
pub use minres::{minres, MinresOutcome};

use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::spaces::{PressureFunction, WeakFunction};

/// Largest accepted relative algebraic residual.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Sparse LU of the full system.
    Direct,
    /// Sparse LU of the system with cell-interior velocities eliminated.
    Condensed,
    /// Preconditioned MINRES.
    Minres,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Iterative refinement sweeps after a direct solve.
    pub refinement_steps: usize,
    pub minres_tolerance: f64,
    pub minres_max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: SolverMethod::Direct,
            refinement_steps: 2,
            minres_tolerance: 1e-12,
            minres_max_iterations: 20_000,
        }
    }
}

impl SolverOptions {
    pub fn with_method(method: SolverMethod) -> Self {
        SolverOptions {
            method,
            ..SolverOptions::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveStats {
    pub method: SolverMethod,
    /// Size of the system actually factored or iterated on.
    pub unknowns: usize,
    pub nonzeros: usize,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub velocity: WeakFunction,
    pub pressure: PressureFunction,
    pub multiplier: f64,
    /// `|| K x - r || / || r ||` for the full system (absolute when `r = 0`).
    pub relative_residual: f64,
    /// Momentum rows only, relative to `|| rhs_u ||`.
    pub momentum_residual: f64,
    /// Continuity rows only, absolute.
    pub continuity_residual: f64,
    /// `int_Omega p_h`.
    pub pressure_mean: f64,
    pub stats: SolveStats,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct ReportLine {
    method: SolverMethod,
    unknowns: usize,
    nonzeros: usize,
    iterations: usize,
    relative_residual: f64,
    momentum_residual: f64,
    continuity_residual: f64,
    pressure_mean: f64,
    multiplier: f64,
    wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<usize>,
}

impl SolveReport {
    /// One JSON object summarising the solve (solution vectors omitted).
    pub fn to_json_line(&self, level: Option<usize>) -> String {
        let line = ReportLine {
            method: self.stats.method,
            unknowns: self.stats.unknowns,
            nonzeros: self.stats.nonzeros,
            iterations: self.stats.iterations,
            relative_residual: self.relative_residual,
            momentum_residual: self.momentum_residual,
            continuity_residual: self.continuity_residual,
            pressure_mean: self.pressure_mean,
            multiplier: self.multiplier,
            wall_time_s: self.wall_time_s,
            level,
        };
        serde_json::to_string(&line).expect("report fields serialize")
    }
}

/// The symmetric matrix of the saddle-point system.
pub fn kkt_matrix(sys: &SaddleSystem) -> Result<CsrMatrix> {
    let nf = sys.num_free();
    let np = sys.num_pressure();
    let n = nf + np + 1;
    let mut t = Vec::with_capacity(sys.a.nnz() + 2 * sys.b.nnz() + 2 * np);
    t.extend(sys.a.triplets());
    for (r, c, v) in sys.b.triplets() {
        t.push((nf + r, c, -v));
        t.push((c, nf + r, -v));
    }
    for (i, &ci) in sys.c.iter().enumerate() {
        t.push((nf + i, nf + np, ci));
        t.push((nf + np, nf + i, ci));
    }
    CsrMatrix::from_triplets(n, n, t)
}

pub fn kkt_rhs(sys: &SaddleSystem) -> Vec<f64> {
    let mut r = sys.rhs_u.clone();
    r.extend(sys.rhs_p.iter().map(|x| -x));
    r.push(0.0);
    r
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn residual(k: &CsrMatrix, x: &[f64], r: &[f64]) -> Vec<f64> {
    k.mul_vec(x).iter().zip(r).map(|(a, b)| b - a).collect()
}

fn relative(res: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        res / scale
    } else {
        res
    }
}

/// Sparse LU solve with iterative refinement; deterministic (sequential).
pub(crate) fn lu_solve(k: &CsrMatrix, r: &[f64], refinement: usize) -> Result<Vec<f64>> {
    faer::set_global_parallelism(faer::Par::Seq);
    let n = k.nrows();
    let mat = k.to_faer()?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::Solver(format!("sparse LU of a {n} x {n} system failed: {e:?}")))?;
    let rhs = faer::Col::<f64>::from_fn(n, |i| r[i]);
    let sol = lu.solve(&rhs);
    let mut x: Vec<f64> = (0..n).map(|i| sol[i]).collect();
    for _ in 0..refinement {
        let res = residual(k, &x, r);
        let col = faer::Col::<f64>::from_fn(n, |i| res[i]);
        let dx = lu.solve(&col);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += dx[i];
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver(format!(
            "the {n} x {n} system is singular (non-finite solution)"
        )));
    }
    Ok(x)
}

pub fn solve(sys: &SaddleSystem) -> Result<SolveReport> {
    solve_with(sys, &SolverOptions::default())
}

pub fn solve_with(sys: &SaddleSystem, options: &SolverOptions) -> Result<SolveReport> {
    let start = Instant::now();
    if sys.num_free() == 0 {
        return Err(Error::Solver(
            "the velocity test space is empty (every unknown lies on the boundary)".into(),
        ));
    }
    let k = kkt_matrix(sys)?;
    let r = kkt_rhs(sys);
    let (x, stats) = match options.method {
        SolverMethod::Direct => {
            let x = lu_solve(&k, &r, options.refinement_steps)?;
            let stats = SolveStats {
                method: SolverMethod::Direct,
                unknowns: k.nrows(),
                nonzeros: k.nnz(),
                iterations: 1 + options.refinement_steps,
            };
            (x, stats)
        }
        SolverMethod::Condensed => {
            let reduced = condense(sys)?;
            let y = lu_solve(&reduced.matrix, &reduced.rhs, options.refinement_steps)?;
            let x = recover_interior(&reduced, &y)?;
            let stats = SolveStats {
                method: SolverMethod::Condensed,
                unknowns: reduced.matrix.nrows(),
                nonzeros: reduced.matrix.nnz(),
                iterations: 1 + options.refinement_steps,
            };
            (x, stats)
        }
        SolverMethod::Minres => {
            let out = minres(
                sys,
                &k,
                &r,
                options.minres_tolerance,
                options.minres_max_iterations,
            )?;
            let stats = SolveStats {
                method: SolverMethod::Minres,
                unknowns: k.nrows(),
                nonzeros: k.nnz(),
                iterations: out.iterations,
            };
            (out.solution, stats)
        }
    };

    let nf = sys.num_free();
    let np = sys.num_pressure();
    let res = residual(&k, &x, &r);
    let relative_residual = relative(norm(&res), norm(&r));
    if !(relative_residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Solver(format!(
            "relative residual {relative_residual:e} exceeds {RESIDUAL_TOLERANCE:e} ({:?}, {} unknowns)",
            stats.method, stats.unknowns
        )));
    }
    let momentum_residual = relative(norm(&res[..nf]), norm(&sys.rhs_u));
    let continuity_residual = norm(&res[nf..nf + np]);
    let velocity = sys.expand(&x[..nf])?;
    let pressure = PressureFunction::from_values(&sys.dofs, x[nf..nf + np].to_vec())?;
    let pressure_mean = sys.c.iter().zip(pressure.values()).map(|(a, b)| a * b).sum();
    Ok(SolveReport {
        velocity,
        pressure,
        multiplier: x[nf + np],
        relative_residual,
        momentum_residual,
        continuity_residual,
        pressure_mean,
        stats,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
