use std::ops::Range;

use serde::Serialize;

use crate::basis::poly_dim;
use crate::mesh::PolygonalMesh;

/// Global numbering of the velocity and pressure unknowns.
///
/// Velocity: all cell-interior blocks first (`2 dim P_k` per cell,
/// component-major), then one block of `2 dim P_{k-1}(e)` per edge.
/// Pressure: `dim P_{k-1}` per cell. Edge blocks are single-valued; both
/// neighbours of an interior edge reference the same block.
///
/// The free numbering (the test space with zero boundary values) keeps the
/// interior blocks at the same indices and appends the interior-edge
/// blocks in edge order.
#[derive(Clone, Debug, Serialize)]
pub struct DofMap {
    degree: usize,
    cell_dim: usize,
    edge_dim: usize,
    pressure_dim: usize,
    num_cells: usize,
    num_edges: usize,
    boundary_edge: Vec<bool>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &PolygonalMesh, degree: usize) -> Self {
        assert!(degree >= 1, "the velocity degree must be at least 1");
        let cell_dim = poly_dim(degree);
        let edge_dim = degree;
        let pressure_dim = poly_dim(degree - 1);
        let num_cells = mesh.num_cells();
        let num_edges = mesh.num_edges();
        let boundary_edge: Vec<bool> = mesh.edges().iter().map(|e| e.is_boundary()).collect();

        let n_vel = 2 * cell_dim * num_cells + 2 * edge_dim * num_edges;
        let mut free_index = vec![None; n_vel];
        let mut free_dofs = Vec::with_capacity(n_vel);
        for (g, slot) in free_index.iter_mut().enumerate().take(2 * cell_dim * num_cells) {
            *slot = Some(g);
            free_dofs.push(g);
        }
        for e in 0..num_edges {
            if boundary_edge[e] {
                continue;
            }
            let start = 2 * cell_dim * num_cells + 2 * edge_dim * e;
            for g in start..start + 2 * edge_dim {
                free_index[g] = Some(free_dofs.len());
                free_dofs.push(g);
            }
        }
        DofMap {
            degree,
            cell_dim,
            edge_dim,
            pressure_dim,
            num_cells,
            num_edges,
            boundary_edge,
            free_index,
            free_dofs,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `dim P_k(T)`.
    pub fn cell_dim(&self) -> usize {
        self.cell_dim
    }

    /// `dim P_{k-1}(e)`.
    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    /// `dim P_{k-1}(T)`.
    pub fn pressure_dim(&self) -> usize {
        self.pressure_dim
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn num_velocity(&self) -> usize {
        2 * self.cell_dim * self.num_cells + 2 * self.edge_dim * self.num_edges
    }

    /// Number of cell-interior velocity unknowns.
    pub fn num_interior(&self) -> usize {
        2 * self.cell_dim * self.num_cells
    }

    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn num_pressure(&self) -> usize {
        self.pressure_dim * self.num_cells
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    /// Interior block of cell `c`, component `comp`.
    pub fn cell_component(&self, c: usize, comp: usize) -> Range<usize> {
        let s = 2 * self.cell_dim * c + comp * self.cell_dim;
        s..s + self.cell_dim
    }

    pub fn cell_velocity(&self, c: usize) -> Range<usize> {
        let s = 2 * self.cell_dim * c;
        s..s + 2 * self.cell_dim
    }

    pub fn edge_component(&self, e: usize, comp: usize) -> Range<usize> {
        let s = self.num_interior() + 2 * self.edge_dim * e + comp * self.edge_dim;
        s..s + self.edge_dim
    }

    pub fn edge_velocity(&self, e: usize) -> Range<usize> {
        let s = self.num_interior() + 2 * self.edge_dim * e;
        s..s + 2 * self.edge_dim
    }

    pub fn pressure(&self, c: usize) -> Range<usize> {
        let s = self.pressure_dim * c;
        s..s + self.pressure_dim
    }

    /// Free index of a global velocity unknown, `None` on boundary edges.
    pub fn free_index(&self, global: usize) -> Option<usize> {
        self.free_index[global]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Global velocity indices touched by cell `c`: interior block, then
    /// each side's edge block in loop order.
    pub fn local_velocity_indices(&self, mesh: &PolygonalMesh, c: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.cell_velocity(c).collect();
        for &e in mesh.cell_edges(c) {
            out.extend(self.edge_velocity(e));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshFamily};

    #[test]
    fn counts_on_quad_mesh() {
        let m = generate_mesh(MeshFamily::UniformQuad, 2).unwrap();
        let d = DofMap::new(&m, 2);
        assert_eq!(d.num_velocity(), 2 * 6 * 4 + 2 * 2 * 12);
        assert_eq!(d.num_pressure(), 3 * 4);
        // 4 interior edges on a 2x2 grid
        assert_eq!(d.num_free(), 2 * 6 * 4 + 2 * 2 * 4);
        for (f, &g) in d.free_dofs().iter().enumerate() {
            assert_eq!(d.free_index(g), Some(f));
        }
    }

    #[test]
    fn every_index_in_exactly_one_block() {
        let m = generate_mesh(MeshFamily::UniformTriangle, 2).unwrap();
        let d = DofMap::new(&m, 1);
        let mut hits = vec![0; d.num_velocity()];
        for c in 0..m.num_cells() {
            for g in d.cell_velocity(c) {
                hits[g] += 1;
            }
        }
        for e in 0..m.num_edges() {
            for g in d.edge_velocity(e) {
                hits[g] += 1;
            }
        }
        assert!(hits.iter().all(|&h| h == 1));

        let mut refs = vec![0; m.num_edges()];
        for c in 0..m.num_cells() {
            for &e in m.cell_edges(c) {
                refs[e] += 1;
            }
        }
        for e in 0..m.num_edges() {
            assert_eq!(refs[e], if d.is_boundary_edge(e) { 1 } else { 2 });
        }
    }
}
