//! Voronoi diagrams of point sets clipped to the unit square.
//!
//! Each cell is obtained by clipping the square against the bisector
//! half-planes of nearby generators; the neighbourhood is grown until every
//! generator that could still cut the cell has been tried. Cell vertices are
//! then merged across cells with a small tolerance so that neighbouring cells
//! share vertex indices exactly.

use std::collections::HashMap;

use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::geometry::Point;

const MERGE_TOLERANCE: f64 = 1e-9;

pub(super) fn clipped_voronoi(generators: &[Point], spacing: f64) -> Result<PolygonalMesh> {
    let buckets = BucketGrid::new(generators, spacing);
    let square = vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ];

    let mut polygons = Vec::with_capacity(generators.len());
    for (i, &g) in generators.iter().enumerate() {
        let mut ring = 2;
        let poly = loop {
            let mut poly = square.clone();
            for j in buckets.within_ring(g, ring) {
                if j == i {
                    continue;
                }
                poly = clip_half_plane(&poly, g, generators[j]);
                if poly.len() < 3 {
                    return Err(Error::Geometry(format!(
                        "Voronoi cell of generator {i} vanished while clipping"
                    )));
                }
            }
            let radius = poly.iter().map(|p| p.distance(g)).fold(0.0, f64::max);
            // generators outside the ring are at least ring * spacing away
            if 2.0 * radius <= ring as f64 * spacing || ring >= buckets.extent() {
                break poly;
            }
            ring += 1;
        };
        polygons.push(poly);
    }

    let tol = MERGE_TOLERANCE * spacing.min(1.0);
    let mut merger = VertexMerger::new(tol);
    let mut cells = Vec::with_capacity(polygons.len());
    for poly in &polygons {
        let mut ids: Vec<usize> = poly.iter().map(|&p| merger.insert(p)).collect();
        ids.dedup();
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        cells.push(ids);
    }
    PolygonalMesh::new(merger.points, cells)
}

/// Sutherland-Hodgman step keeping the side of the bisector closer to `keep`.
fn clip_half_plane(poly: &[Point], keep: Point, other: Point) -> Vec<Point> {
    let d = other - keep;
    let m = keep.midpoint(other);
    let side = |p: Point| (p - m).dot(d);
    let scale = d.norm() * d.norm();
    let eps = 1e-14 * scale;

    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let sp = side(p);
        let sq = side(q);
        let p_in = sp <= eps;
        let q_in = sq <= eps;
        if p_in {
            out.push(p);
        }
        if (p_in && sq > eps && sp < -eps) || (!p_in && q_in && sq < -eps) {
            let t = sp / (sp - sq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

struct BucketGrid {
    size: f64,
    cols: usize,
    rows: usize,
    members: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(points: &[Point], size: f64) -> Self {
        let cols = ((1.0 / size).ceil() as usize).max(1);
        let rows = cols;
        let mut members = vec![Vec::new(); cols * rows];
        let mut grid = BucketGrid {
            size,
            cols,
            rows,
            members: Vec::new(),
        };
        for (i, &p) in points.iter().enumerate() {
            let (c, r) = grid.locate(p);
            members[r * cols + c].push(i);
        }
        grid.members = members;
        grid
    }

    fn extent(&self) -> usize {
        self.cols.max(self.rows)
    }

    fn locate(&self, p: Point) -> (usize, usize) {
        let c = ((p.x / self.size).floor().max(0.0) as usize).min(self.cols - 1);
        let r = ((p.y / self.size).floor().max(0.0) as usize).min(self.rows - 1);
        (c, r)
    }

    fn within_ring(&self, p: Point, ring: usize) -> impl Iterator<Item = usize> + '_ {
        let (c, r) = self.locate(p);
        let c0 = c.saturating_sub(ring);
        let c1 = (c + ring).min(self.cols - 1);
        let r0 = r.saturating_sub(ring);
        let r1 = (r + ring).min(self.rows - 1);
        (r0..=r1).flat_map(move |rr| {
            (c0..=c1).flat_map(move |cc| self.members[rr * self.cols + cc].iter().copied())
        })
    }
}

struct VertexMerger {
    tol: f64,
    bucket: f64,
    points: Vec<Point>,
    index: HashMap<(i64, i64), Vec<usize>>,
}

impl VertexMerger {
    fn new(tol: f64) -> Self {
        VertexMerger {
            tol,
            bucket: 4.0 * tol,
            points: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        (
            (p.x / self.bucket).floor() as i64,
            (p.y / self.bucket).floor() as i64,
        )
    }

    fn insert(&mut self, p: Point) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.index.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        if self.points[id].distance(p) <= self.tol {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.index.entry((kx, ky)).or_default().push(id);
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_square_by_vertical_bisector() {
        let sq = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let out = clip_half_plane(&sq, Point::new(0.25, 0.5), Point::new(0.75, 0.5));
        let area = crate::geometry::signed_area(&out);
        assert!((area - 0.5).abs() < 1e-15);
        assert!(out.iter().all(|p| p.x <= 0.5 + 1e-15));
    }

    #[test]
    fn regular_grid_of_generators_gives_squares() {
        let n = 3;
        let h = 1.0 / n as f64;
        let mut g = Vec::new();
        for j in 0..n {
            for i in 0..n {
                g.push(Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
            }
        }
        let m = clipped_voronoi(&g, h).unwrap();
        assert_eq!(m.num_cells(), 9);
        assert_eq!(m.num_vertices(), 16);
        for c in 0..9 {
            assert!((m.cell_area(c) - h * h).abs() < 1e-14);
        }
    }
}
