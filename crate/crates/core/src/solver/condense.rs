//! Elimination of the cell-interior velocity unknowns.
//!
//! Interior unknowns of one cell couple only to each other, to the edges
//! of that cell and to its pressure block, so the saddle-point matrix can be
//! reduced cell by cell with a dense Cholesky of each interior block.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use super::{kkt_matrix, kkt_rhs};
use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

struct CellBlock {
    interior: std::ops::Range<usize>,
    /// Reduced indices coupled to this cell's interior unknowns.
    coupled: Vec<usize>,
    factor: Cholesky<f64, Dyn>,
    /// `K_tY` restricted to `coupled`.
    coupling: DMatrix<f64>,
    load: DVector<f64>,
}

/// Schur complement on edge, pressure and multiplier unknowns.
pub struct CondensedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    num_interior: usize,
    blocks: Vec<CellBlock>,
}

impl CondensedSystem {
    /// Number of eliminated unknowns.
    pub fn num_interior(&self) -> usize {
        self.num_interior
    }

    pub fn num_reduced(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn condense(sys: &SaddleSystem) -> Result<CondensedSystem> {
    let k = kkt_matrix(sys)?;
    let r = kkt_rhs(sys);
    let dofs = &sys.dofs;
    let ni = dofs.num_interior();
    let n = k.nrows();
    let m = n - ni;

    let blocks: Vec<CellBlock> = (0..dofs.num_cells())
        .into_par_iter()
        .map(|cell| {
            let interior = dofs.cell_velocity(cell);
            let nb = interior.len();
            let mut coupled: Vec<usize> = interior
                .clone()
                .flat_map(|i| k.row(i).filter(|&(c, _)| c >= ni).map(|(c, _)| c - ni).collect::<Vec<_>>())
                .collect();
            coupled.sort_unstable();
            coupled.dedup();
            let mut ktt = DMatrix::zeros(nb, nb);
            let mut kty = DMatrix::zeros(nb, coupled.len());
            for (a, i) in interior.clone().enumerate() {
                for (c, v) in k.row(i) {
                    if interior.contains(&c) {
                        ktt[(a, c - interior.start)] = v;
                    } else if c >= ni {
                        let pos = coupled.binary_search(&(c - ni)).expect("collected above");
                        kty[(a, pos)] = v;
                    } else {
                        return Err(Error::Contract(format!(
                            "interior unknown {i} couples to interior unknown {c} of another cell"
                        )));
                    }
                }
            }
            let factor = Cholesky::new(ktt).ok_or_else(|| Error::DegenerateCell {
                cell,
                reason: "interior velocity block is not positive definite".into(),
            })?;
            let load = DVector::from_iterator(nb, interior.clone().map(|i| r[i]));
            Ok(CellBlock {
                interior,
                coupled,
                factor,
                coupling: kty,
                load,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for i in ni..n {
        for (c, v) in k.row(i) {
            if c >= ni {
                triplets.push((i - ni, c - ni, v));
            }
        }
    }
    let mut rhs: Vec<f64> = r[ni..].to_vec();
    type Update = (Vec<(usize, usize, f64)>, Vec<(usize, f64)>);
    let updates: Vec<Update> = blocks
        .par_iter()
        .map(|b| {
            let x = b.factor.solve(&b.coupling);
            let schur = b.coupling.transpose() * &x;
            let y = b.factor.solve(&b.load);
            let ry = b.coupling.transpose() * y;
            let mut t = Vec::with_capacity(b.coupled.len() * b.coupled.len());
            for (a, &ia) in b.coupled.iter().enumerate() {
                for (c, &ic) in b.coupled.iter().enumerate() {
                    t.push((ia, ic, -schur[(a, c)]));
                }
            }
            let rr = b.coupled.iter().enumerate().map(|(a, &ia)| (ia, -ry[a])).collect();
            (t, rr)
        })
        .collect();
    for (t, rr) in updates {
        triplets.extend(t);
        for (i, v) in rr {
            rhs[i] += v;
        }
    }
    Ok(CondensedSystem {
        matrix: CsrMatrix::from_triplets(m, m, triplets)?,
        rhs,
        num_interior: ni,
        blocks,
    })
}

/// Full unknown vector `(u, p, lambda)` from the reduced solution `y`.
pub fn recover_interior(sys: &CondensedSystem, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != sys.num_reduced() {
        return Err(Error::Contract(format!(
            "reduced solution needs {} entries, got {}",
            sys.num_reduced(),
            y.len()
        )));
    }
    let mut x = vec![0.0; sys.num_interior + y.len()];
    x[sys.num_interior..].copy_from_slice(y);
    for b in &sys.blocks {
        let yc = DVector::from_iterator(b.coupled.len(), b.coupled.iter().map(|&i| y[i]));
        let u = b.factor.solve(&(&b.load - &b.coupling * yc));
        x[b.interior.clone()].copy_from_slice(u.as_slice());
    }
    Ok(x)
}
