use serde::Serialize;

use super::DofMap;
use crate::error::{Error, Result};

/// Coefficients of a weak function `{v0, v_b}` in [`DofMap`] order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakFunction {
    degree: usize,
    values: Vec<f64>,
}

impl WeakFunction {
    pub fn zeros(dofs: &DofMap) -> Self {
        WeakFunction {
            degree: dofs.degree(),
            values: vec![0.0; dofs.num_velocity()],
        }
    }

    pub fn from_values(dofs: &DofMap, values: Vec<f64>) -> Result<Self> {
        if values.len() != dofs.num_velocity() {
            return Err(Error::Contract(format!(
                "weak function needs {} coefficients, got {}",
                dofs.num_velocity(),
                values.len()
            )));
        }
        Ok(WeakFunction {
            degree: dofs.degree(),
            values,
        })
    }

    /// Embeds a vector on the free unknowns (zero boundary values).
    pub fn from_free(dofs: &DofMap, free: &[f64]) -> Result<Self> {
        if free.len() != dofs.num_free() {
            return Err(Error::Contract(format!(
                "free vector needs {} entries, got {}",
                dofs.num_free(),
                free.len()
            )));
        }
        let mut v = WeakFunction::zeros(dofs);
        for (&g, &x) in dofs.free_dofs().iter().zip(free) {
            v.values[g] = x;
        }
        Ok(v)
    }

    /// Restriction to the free unknowns.
    pub fn free_values(&self, dofs: &DofMap) -> Vec<f64> {
        dofs.free_dofs().iter().map(|&g| self.values[g]).collect()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// True when every boundary-edge coefficient is exactly zero.
    pub fn vanishes_on_boundary(&self, dofs: &DofMap) -> bool {
        (0..dofs.num_edges())
            .filter(|&e| dofs.is_boundary_edge(e))
            .all(|e| self.values[dofs.edge_velocity(e)].iter().all(|&x| x == 0.0))
    }

    /// `self - other`.
    pub fn sub(&self, other: &WeakFunction) -> Result<WeakFunction> {
        if self.values.len() != other.values.len() || self.degree != other.degree {
            return Err(Error::Contract("weak functions live on different spaces".into()));
        }
        Ok(WeakFunction {
            degree: self.degree,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Coefficients of a piecewise `P_{k-1}` pressure, cell by cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureFunction {
    degree: usize,
    values: Vec<f64>,
}

impl PressureFunction {
    pub fn zeros(dofs: &DofMap) -> Self {
        PressureFunction {
            degree: dofs.degree(),
            values: vec![0.0; dofs.num_pressure()],
        }
    }

    pub fn from_values(dofs: &DofMap, values: Vec<f64>) -> Result<Self> {
        if values.len() != dofs.num_pressure() {
            return Err(Error::Contract(format!(
                "pressure needs {} coefficients, got {}",
                dofs.num_pressure(),
                values.len()
            )));
        }
        Ok(PressureFunction {
            degree: dofs.degree(),
            values,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sub(&self, other: &PressureFunction) -> Result<PressureFunction> {
        if self.values.len() != other.values.len() {
            return Err(Error::Contract("pressures live on different spaces".into()));
        }
        Ok(PressureFunction {
            degree: self.degree,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}
