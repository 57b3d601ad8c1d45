//! Quadrature on segments, triangles and polygons.
//!
//! Polygons are split into triangles (a fan from the centroid, or ear
//! clipping when the fan is not valid) and each triangle carries a collapsed
//! Gauss-Legendre product rule. All weights are positive.

use crate::error::{Error, Result};
use crate::geometry::{orient, signed_area, Point};

/// A 2D rule on a cell.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub exactness: u32,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// A rule on a straight edge from `start` to `end`.
///
/// `params` are the reference coordinates `t` in `[-1, 1]`, with `t = -1`
/// at `start`.
#[derive(Clone, Debug)]
pub struct EdgeQuadrature {
    pub points: Vec<Point>,
    pub params: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: u32,
    pub length: f64,
}

impl EdgeQuadrature {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule on a segment, exact for polynomials of degree `exactness`.
pub fn edge_quadrature(start: Point, end: Point, exactness: u32) -> Result<EdgeQuadrature> {
    let length = start.distance(end);
    if !(length > 0.0) {
        return Err(Error::Geometry("zero-length edge".into()));
    }
    let n = (exactness as usize + 2) / 2;
    let (t, w) = gauss_legendre(n);
    let mid = start.midpoint(end);
    let half = (end - start) * 0.5;
    Ok(EdgeQuadrature {
        points: t.iter().map(|&s| mid + half * s).collect(),
        params: t,
        weights: w.iter().map(|&wi| wi * 0.5 * length).collect(),
        exactness,
        length,
    })
}

/// Collapsed-coordinate product rule on a triangle.
///
/// The square `[0,1]^2` is mapped onto the triangle by
/// `x = a + u (b - a) + u v (c - b)`, whose Jacobian `2|T| u` is absorbed in
/// the weights.
pub fn triangle_quadrature(a: Point, b: Point, c: Point, exactness: u32) -> QuadratureRule {
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        exactness,
    };
    push_triangle(&mut rule, a, b, c);
    rule
}

fn push_triangle(rule: &mut QuadratureRule, a: Point, b: Point, c: Point) {
    let d = rule.exactness as usize;
    let nu = (d + 3) / 2; // u carries one extra degree from the Jacobian
    let nv = (d + 2) / 2;
    let (tu, wu) = gauss_legendre(nu);
    let (tv, wv) = gauss_legendre(nv);
    let jac = orient(a, b, c).abs();
    for (&su, &au) in tu.iter().zip(&wu) {
        let u = 0.5 * (su + 1.0);
        for (&sv, &av) in tv.iter().zip(&wv) {
            let v = 0.5 * (sv + 1.0);
            rule.points.push(a + (b - a) * u + (c - b) * (u * v));
            rule.weights.push(0.25 * au * av * u * jac);
        }
    }
}

/// Rule on a simple polygon given as a counter-clockwise loop.
pub fn polygon_quadrature(pts: &[Point], centroid: Point, exactness: u32) -> Result<QuadratureRule> {
    let triangles = triangulate(pts, centroid)?;
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        exactness,
    };
    for [a, b, c] in triangles {
        push_triangle(&mut rule, a, b, c);
    }
    Ok(rule)
}

/// Fan from the centroid when every fan triangle is positively oriented,
/// ear clipping otherwise.
pub fn triangulate(pts: &[Point], centroid: Point) -> Result<Vec<[Point; 3]>> {
    let n = pts.len();
    let area = signed_area(pts);
    let tiny = 1e-14 * area.abs();
    let fan_ok = (0..n).all(|i| orient(centroid, pts[i], pts[(i + 1) % n]) > tiny);
    if fan_ok {
        return Ok((0..n)
            .map(|i| [centroid, pts[i], pts[(i + 1) % n]])
            .collect());
    }
    ear_clip(pts)
}

fn ear_clip(pts: &[Point]) -> Result<Vec<[Point; 3]>> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut out = Vec::with_capacity(pts.len().saturating_sub(2));
    let inside = |p: Point, a: Point, b: Point, c: Point| {
        orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
    };
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for i in 0..m {
            let ia = idx[(i + m - 1) % m];
            let ib = idx[i];
            let ic = idx[(i + 1) % m];
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            if orient(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                j != ia && j != ib && j != ic && inside(pts[j], a, b, c)
            });
            if !blocked {
                out.push([a, b, c]);
                idx.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::Geometry(
                "polygon could not be triangulated (no ear found)".into(),
            ));
        }
    }
    let (a, b, c) = (pts[idx[0]], pts[idx[1]], pts[idx[2]]);
    if orient(a, b, c) <= 0.0 {
        return Err(Error::Geometry("degenerate final ear".into()));
    }
    out.push([a, b, c]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]
    }

    #[test]
    fn gauss_legendre_integrates_up_to_2n_minus_1() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn unit_square_integrals() {
        let sq = unit_square();
        let rule = polygon_quadrature(&sq, Point::new(0.5, 0.5), 4).unwrap();
        assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-14);
        assert!((rule.integrate(|p| p.x * p.x * p.y) - 1.0 / 6.0).abs() < 1e-14);
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn edge_rules() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let r = edge_quadrature(a, b, 3).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r.integrate(|_| 1.0) - 1.0).abs() < 1e-15);
        assert!((r.integrate(|p| p.x.powi(3)) - 0.25).abs() < 1e-15);

        let c = Point::new(3.0, 4.0);
        let r = edge_quadrature(a, c, 2).unwrap();
        let len = 5.0;
        let s2: f64 = r
            .params
            .iter()
            .zip(&r.weights)
            .map(|(&t, &w)| w * (0.5 * (t + 1.0) * len).powi(2))
            .sum();
        assert!((s2 - len.powi(3) / 3.0).abs() < 1e-12);
        assert!(matches!(edge_quadrature(a, a, 2), Err(Error::Geometry(_))));
    }

    #[test]
    fn nonconvex_polygon_falls_back_to_ear_clipping() {
        // a thin "C" whose centroid lies outside the polygon
        let c = vec![
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(3.0, 0.5),
            Point::new(0.5, 0.5),
            Point::new(0.5, 2.5),
            Point::new(3.0, 2.5),
            Point::new(3.0, 3.0),
            Point::new(0.0, 3.0),
        ];
        let area = signed_area(&c);
        let centroid = crate::geometry::polygon_centroid(&c);
        let tris = triangulate(&c, centroid).unwrap();
        let total: f64 = tris.iter().map(|t| 0.5 * orient(t[0], t[1], t[2])).sum();
        assert!((total - area).abs() < 1e-13);
        let rule = polygon_quadrature(&c, centroid, 2).unwrap();
        assert!((rule.integrate(|_| 1.0) - area).abs() < 1e-13);
    }
}
