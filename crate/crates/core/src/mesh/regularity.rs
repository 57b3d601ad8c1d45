use serde::Serialize;

use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::geometry::{orient, Point};

/// Shape-regularity proxies per cell.
///
/// The scheme runs on any valid mesh; these numbers are reported so a study
/// can warn about badly shaped cells, not to reject them.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeRegularityReport {
    /// `h_T / r_T` with `r_T` the radius of the largest inscribed disk.
    pub aspect: Vec<f64>,
    /// Shortest side over `h_T`.
    pub min_edge_ratio: Vec<f64>,
    /// Longest side over `h_T`.
    pub max_edge_ratio: Vec<f64>,
    pub max_aspect: f64,
    pub min_aspect: f64,
    pub global_min_edge_ratio: f64,
    pub global_max_edge_ratio: f64,
    pub threshold: f64,
    /// Cells whose aspect exceeds `threshold`.
    pub flagged: Vec<usize>,
}

pub fn shape_regularity(mesh: &PolygonalMesh, threshold: f64) -> Result<ShapeRegularityReport> {
    let n = mesh.num_cells();
    let mut aspect = Vec::with_capacity(n);
    let mut min_edge_ratio = Vec::with_capacity(n);
    let mut max_edge_ratio = Vec::with_capacity(n);
    for c in 0..n {
        let pts = mesh.cell_points(c);
        let h = mesh.cell_diameter(c);
        let r = inradius(&pts);
        if !(mesh.cell_area(c) > 0.0) || !(r > 0.0) {
            return Err(Error::Validation(format!("cell {c} is degenerate (zero area)")));
        }
        aspect.push(h / r);
        let lens: Vec<f64> = mesh
            .cell_edges(c)
            .iter()
            .map(|&e| mesh.edge_length(e) / h)
            .collect();
        min_edge_ratio.push(lens.iter().cloned().fold(f64::INFINITY, f64::min));
        max_edge_ratio.push(lens.iter().cloned().fold(0.0, f64::max));
    }
    let flagged = (0..n).filter(|&c| aspect[c] > threshold).collect();
    Ok(ShapeRegularityReport {
        max_aspect: aspect.iter().cloned().fold(0.0, f64::max),
        min_aspect: aspect.iter().cloned().fold(f64::INFINITY, f64::min),
        global_min_edge_ratio: min_edge_ratio.iter().cloned().fold(f64::INFINITY, f64::min),
        global_max_edge_ratio: max_edge_ratio.iter().cloned().fold(0.0, f64::max),
        aspect,
        min_edge_ratio,
        max_edge_ratio,
        threshold,
        flagged,
    })
}

fn is_convex(pts: &[Point]) -> bool {
    let n = pts.len();
    (0..n).all(|i| orient(pts[i], pts[(i + 1) % n], pts[(i + 2) % n]) >= 0.0)
}

/// Radius of the largest disk inside the polygon.
///
/// Convex cells: the optimum of `max r s.t. dist(x, side_i) >= r` sits at a
/// point equidistant from three side lines, so all triples are enumerated.
/// Non-convex cells fall back to a refined sampling of the distance to the
/// boundary.
pub(crate) fn inradius(pts: &[Point]) -> f64 {
    if is_convex(pts) {
        convex_inradius(pts)
    } else {
        sampled_inradius(pts)
    }
}

fn convex_inradius(pts: &[Point]) -> f64 {
    let n = pts.len();
    // inward unit normal a_i and offset b_i: a_i . x - b_i >= 0 inside
    let lines: Vec<(Point, f64)> = (0..n)
        .map(|i| {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            let t = q - p;
            let a = Point::new(-t.y, t.x) * (1.0 / t.norm());
            (a, a.dot(p))
        })
        .collect();
    let slack = |x: Point| {
        lines
            .iter()
            .map(|(a, b)| a.dot(x) - b)
            .fold(f64::INFINITY, f64::min)
    };
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                // a . x - r = b for the three lines
                let rows = [lines[i], lines[j], lines[k]];
                let m = nalgebra::Matrix3::new(
                    rows[0].0.x, rows[0].0.y, -1.0,
                    rows[1].0.x, rows[1].0.y, -1.0,
                    rows[2].0.x, rows[2].0.y, -1.0,
                );
                let rhs = nalgebra::Vector3::new(rows[0].1, rows[1].1, rows[2].1);
                if let Some(sol) = m.lu().solve(&rhs) {
                    let x = Point::new(sol[0], sol[1]);
                    let r = sol[2];
                    if r > best && slack(x) >= r * (1.0 - 1e-10) {
                        best = r;
                    }
                }
            }
        }
    }
    best
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let t = b - a;
    let s = ((p - a).dot(t) / t.dot(t)).clamp(0.0, 1.0);
    p.distance(a + t * s)
}

fn contains(pts: &[Point], p: Point) -> bool {
    let n = pts.len();
    let mut inside = false;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn sampled_inradius(pts: &[Point]) -> f64 {
    let n = pts.len();
    let dist = |p: Point| {
        if !contains(pts, p) {
            return 0.0;
        }
        (0..n)
            .map(|i| point_segment_distance(p, pts[i], pts[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    };
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let samples = 40;
    let mut best = (0.0, lo.midpoint(hi));
    for i in 0..=samples {
        for j in 0..=samples {
            let p = Point::new(
                lo.x + (hi.x - lo.x) * i as f64 / samples as f64,
                lo.y + (hi.y - lo.y) * j as f64 / samples as f64,
            );
            let d = dist(p);
            if d > best.0 {
                best = (d, p);
            }
        }
    }
    // local pattern search around the best sample
    let mut step = (hi.x - lo.x).max(hi.y - lo.y) / samples as f64;
    while step > 1e-6 * (hi.x - lo.x).max(hi.y - lo.y) {
        let mut improved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let p = best.1 + Point::new(dx, dy) * step;
            let d = dist(p);
            if d > best.0 {
                best = (d, p);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_inradius() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert!((inradius(&sq) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rectangle_inradius_is_half_short_side() {
        let r = [
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(3.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert!((inradius(&r) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn l_shape_sampled() {
        // three unit squares; the largest disk touches both outer walls and
        // the reentrant corner, so its radius is 2 - sqrt(2)
        let l = [
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        let r = inradius(&l);
        let exact = 2.0 - 2f64.sqrt();
        assert!(r <= exact + 1e-12 && r >= 0.99 * exact, "r = {r}");
    }
}
