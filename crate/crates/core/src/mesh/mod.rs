//! Polygonal meshes of planar domains.
//!
//! A [`PolygonalMesh`] is built from a vertex list and counter-clockwise
//! vertex loops. Edges are derived from the loops and stored once with a
//! canonical orientation (lower vertex index first); outward normals are
//! computed per cell side on demand, so no sign convention is stored.

mod generate;
mod io;
mod regularity;
mod voronoi;

use std::collections::HashMap;

pub use generate::{generate_mesh, generate_mesh_with, refine_sequence, MeshFamily, MeshOptions};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh, MESH_HEADER};
pub use regularity::{shape_regularity, ShapeRegularityReport};

use crate::error::{Error, Result};
use crate::geometry::{polygon_centroid, segments_intersect, signed_area, Point};

/// An edge with its canonical vertex pair `vertices[0] < vertices[1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// Lowest-index incident cell.
    pub left: usize,
    /// The other incident cell, `None` on the domain boundary.
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// A conforming partition of a planar domain into simple polygons.
#[derive(Clone, Debug)]
pub struct PolygonalMesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    /// `cell_edges[c][s]` is the edge under side `s`, which runs from
    /// `cells[c][s]` to `cells[c][s + 1]`.
    cell_edges: Vec<Vec<usize>>,
    cell_diameter: Vec<f64>,
    cell_centroid: Vec<Point>,
    cell_area: Vec<f64>,
    mesh_size: f64,
}

impl PolygonalMesh {
    /// Builds and validates a mesh.
    ///
    /// Every cell must be a simple, counter-clockwise polygon with positive
    /// area; every edge must be used by at most two cells, in opposite
    /// directions.
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Validation("mesh has no cells".into()));
        }
        for (c, cell) in cells.iter().enumerate() {
            validate_loop(c, cell, &vertices)?;
        }

        // (lo, hi) -> (edge index); uses per edge recorded as (cell, forward)
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut uses: Vec<Vec<(usize, bool)>> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let mut sides = Vec::with_capacity(cell.len());
            for s in 0..cell.len() {
                let a = cell[s];
                let b = cell[(s + 1) % cell.len()];
                let key = (a.min(b), a.max(b));
                let e = *lookup.entry(key).or_insert_with(|| {
                    uses.push(Vec::new());
                    uses.len() - 1
                });
                uses[e].push((c, a < b));
                sides.push(e);
            }
            cell_edges.push(sides);
        }

        let mut keys = vec![(0, 0); uses.len()];
        for (k, &e) in &lookup {
            keys[e] = *k;
        }
        let mut edges = Vec::with_capacity(uses.len());
        for (e, u) in uses.iter().enumerate() {
            let (lo, hi) = keys[e];
            match u.as_slice() {
                [(c, _)] => edges.push(Edge {
                    vertices: [lo, hi],
                    left: *c,
                    right: None,
                }),
                [(c0, f0), (c1, f1)] => {
                    if f0 == f1 {
                        return Err(Error::Validation(format!(
                            "edge ({lo}, {hi}) is traversed in the same direction by cells {c0} and {c1}"
                        )));
                    }
                    if c0 == c1 {
                        return Err(Error::Validation(format!(
                            "cell {c0} uses edge ({lo}, {hi}) twice"
                        )));
                    }
                    edges.push(Edge {
                        vertices: [lo, hi],
                        left: *c0.min(c1),
                        right: Some(*c0.max(c1)),
                    })
                }
                more => {
                    let owners: Vec<usize> = more.iter().map(|u| u.0).collect();
                    return Err(Error::Validation(format!(
                        "edge ({lo}, {hi}) is shared by {} cells {:?}",
                        more.len(),
                        owners
                    )));
                }
            }
        }

        let mut cell_diameter = Vec::with_capacity(cells.len());
        let mut cell_centroid = Vec::with_capacity(cells.len());
        let mut cell_area = Vec::with_capacity(cells.len());
        for cell in &cells {
            let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            let mut diam: f64 = 0.0;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    diam = diam.max(pts[i].distance(pts[j]));
                }
            }
            cell_diameter.push(diam);
            cell_centroid.push(polygon_centroid(&pts));
            cell_area.push(signed_area(&pts));
        }
        let mesh_size = cell_diameter.iter().cloned().fold(0.0, f64::max);

        Ok(PolygonalMesh {
            vertices,
            cells,
            edges,
            cell_edges,
            cell_diameter,
            cell_centroid,
            cell_area,
            mesh_size,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge indices of the sides of cell `c`, in loop order.
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cells[c].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        self.cell_diameter[c]
    }

    pub fn cell_centroid(&self, c: usize) -> Point {
        self.cell_centroid[c]
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        self.cell_area[c]
    }

    /// `h = max_T h_T`.
    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    pub fn total_area(&self) -> f64 {
        self.cell_area.iter().sum()
    }

    /// Endpoints of edge `e` in canonical order.
    pub fn edge_points(&self, e: usize) -> (Point, Point) {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[a], self.vertices[b])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let (a, b) = self.edge_points(e);
        a.distance(b)
    }

    /// Endpoints of side `s` of cell `c`, in the cell's loop direction.
    pub fn side_points(&self, c: usize, s: usize) -> (Point, Point) {
        let cell = &self.cells[c];
        (
            self.vertices[cell[s]],
            self.vertices[cell[(s + 1) % cell.len()]],
        )
    }

    /// Outward unit normal of side `s` of cell `c`.
    pub fn outward_normal(&self, c: usize, s: usize) -> Point {
        let (a, b) = self.side_points(c, s);
        let t = b - a;
        let len = t.norm();
        Point::new(t.y / len, -t.x / len)
    }

    /// Position of edge `e` among the sides of cell `c`.
    pub fn side_of(&self, c: usize, e: usize) -> Option<usize> {
        self.cell_edges[c].iter().position(|&x| x == e)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_boundary())
            .map(|(i, _)| i)
    }

    /// Cells with at least one boundary side.
    pub fn touches_boundary(&self, c: usize) -> bool {
        self.cell_edges[c].iter().any(|&e| self.edges[e].is_boundary())
    }
}

fn validate_loop(c: usize, cell: &[usize], vertices: &[Point]) -> Result<()> {
    if cell.len() < 3 {
        return Err(Error::Validation(format!(
            "cell {c} has {} vertices, need at least 3",
            cell.len()
        )));
    }
    for &v in cell {
        if v >= vertices.len() {
            return Err(Error::Validation(format!(
                "cell {c} references missing vertex {v} (mesh has {})",
                vertices.len()
            )));
        }
    }
    for i in 0..cell.len() {
        for j in i + 1..cell.len() {
            if cell[i] == cell[j] {
                return Err(Error::Validation(format!(
                    "cell {c} repeats vertex {}",
                    cell[i]
                )));
            }
        }
    }
    let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
    let area = signed_area(&pts);
    if !(area > 0.0) {
        return Err(Error::Validation(format!(
            "cell {c} has non-positive signed area {area:e} (loops must be counter-clockwise)"
        )));
    }
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            // skip adjacent sides, which share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return Err(Error::Validation(format!(
                    "cell {c} is self-intersecting (sides {i} and {j})"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_pair() -> (Vec<Point>, Vec<Vec<usize>>) {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 1.0),
        ];
        (v, vec![vec![0, 1, 4, 3], vec![1, 2, 5, 4]])
    }

    #[test]
    fn two_squares_share_one_edge() {
        let (v, c) = square_pair();
        let m = PolygonalMesh::new(v, c).unwrap();
        assert_eq!(m.num_edges(), 7);
        let interior: Vec<&Edge> = m.edges().iter().filter(|e| !e.is_boundary()).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].vertices, [1, 4]);
        let e = m.cell_edges(0)[1];
        let s0 = m.side_of(0, e).unwrap();
        let s1 = m.side_of(1, e).unwrap();
        let n0 = m.outward_normal(0, s0);
        let n1 = m.outward_normal(1, s1);
        assert_eq!(n0, Point::new(1.0, 0.0));
        assert_eq!(n1, Point::new(-1.0, 0.0));
    }

    #[test]
    fn clockwise_cell_rejected() {
        let (v, mut c) = square_pair();
        c[0].reverse();
        assert!(matches!(PolygonalMesh::new(v, c), Err(Error::Validation(_))));
    }

    #[test]
    fn bowtie_rejected() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.5, -1.0),
            Point::new(0.0, 1.0),
        ];
        let err = PolygonalMesh::new(v, vec![vec![0, 1, 2, 3, 4]]).unwrap_err();
        assert!(err.to_string().contains("self-intersecting") || err.to_string().contains("area"));
    }

    #[test]
    fn missing_vertex_rejected() {
        let (v, mut c) = square_pair();
        c[1][2] = 17;
        let err = PolygonalMesh::new(v, c).unwrap_err();
        assert!(err.to_string().contains("missing vertex 17"));
    }
}
