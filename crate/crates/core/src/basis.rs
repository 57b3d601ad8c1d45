//! Polynomial bases on cells and edges.
//!
//! Cells use scaled monomials `((x - x_T) / h_T)^a ((y - y_T) / h_T)^b`,
//! ordered by total degree, so the first `dim P_r` functions of a degree-`k`
//! basis span `P_r` for every `r <= k`. Edges use Legendre polynomials in the
//! reference coordinate `t` in `[-1, 1]` running along the edge's canonical
//! orientation.

use nalgebra::DMatrix;

use crate::geometry::Point;
use crate::quadrature::QuadratureRule;

/// `dim P_r` in two variables.
pub const fn poly_dim(r: usize) -> usize {
    (r + 1) * (r + 2) / 2
}

/// Exponent pairs of the scaled monomials up to total degree `r`.
pub fn monomial_exponents(r: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(poly_dim(r));
    for total in 0..=r as u32 {
        for b in 0..=total {
            out.push((total - b, b));
        }
    }
    out
}

/// Basis of `P_k(T)` on one cell.
#[derive(Clone, Debug)]
pub struct CellBasis {
    degree: usize,
    center: Point,
    scale: f64,
    exponents: Vec<(u32, u32)>,
    /// Optional lower-triangular change of basis, `phi_i = sum_j T_ij m_j`.
    transform: Option<DMatrix<f64>>,
}

impl CellBasis {
    pub fn scaled_monomials(degree: usize, center: Point, scale: f64) -> Self {
        assert!(degree < 16, "cell bases are limited to degree 15");
        CellBasis {
            degree,
            center,
            scale,
            exponents: monomial_exponents(degree),
            transform: None,
        }
    }

    /// Gram-Schmidt (in degree order) with respect to the L2 product of
    /// `rule`; the leading functions still span each `P_r`.
    pub fn orthonormalized(degree: usize, center: Point, scale: f64, rule: &QuadratureRule) -> Self {
        let raw = CellBasis::scaled_monomials(degree, center, scale);
        let n = raw.dim();
        let mut mass = DMatrix::<f64>::zeros(n, n);
        let mut vals = vec![0.0; n];
        for (p, w) in rule.iter() {
            raw.eval_into(p, &mut vals);
            for i in 0..n {
                for j in 0..n {
                    mass[(i, j)] += w * vals[i] * vals[j];
                }
            }
        }
        let l = mass
            .cholesky()
            .expect("monomial mass matrix is positive definite on a valid cell")
            .l();
        let inv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("triangular factor is invertible");
        CellBasis {
            transform: Some(inv),
            ..raw
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_orthonormalized(&self) -> bool {
        self.transform.is_some()
    }

    fn monomials_into(&self, p: Point, out: &mut [f64]) {
        let xi = (p.x - self.center.x) / self.scale;
        let eta = (p.y - self.center.y) / self.scale;
        let k = self.degree;
        let mut px = [1.0; 16];
        let mut py = [1.0; 16];
        for d in 1..=k {
            px[d] = px[d - 1] * xi;
            py[d] = py[d - 1] * eta;
        }
        for (o, &(a, b)) in out.iter_mut().zip(&self.exponents) {
            *o = px[a as usize] * py[b as usize];
        }
    }

    fn monomial_grads_into(&self, p: Point, out: &mut [[f64; 2]]) {
        let xi = (p.x - self.center.x) / self.scale;
        let eta = (p.y - self.center.y) / self.scale;
        let k = self.degree;
        let mut px = [1.0; 16];
        let mut py = [1.0; 16];
        for d in 1..=k {
            px[d] = px[d - 1] * xi;
            py[d] = py[d - 1] * eta;
        }
        let inv = 1.0 / self.scale;
        for (o, &(a, b)) in out.iter_mut().zip(&self.exponents) {
            let (a, b) = (a as usize, b as usize);
            let dx = if a == 0 { 0.0 } else { a as f64 * px[a - 1] * py[b] * inv };
            let dy = if b == 0 { 0.0 } else { b as f64 * px[a] * py[b - 1] * inv };
            *o = [dx, dy];
        }
    }

    /// Values of all basis functions at `p`.
    pub fn eval_into(&self, p: Point, out: &mut [f64]) {
        match &self.transform {
            None => self.monomials_into(p, out),
            Some(t) => {
                let n = self.dim();
                let mut m = vec![0.0; n];
                self.monomials_into(p, &mut m);
                for i in 0..n {
                    out[i] = (0..=i).map(|j| t[(i, j)] * m[j]).sum();
                }
            }
        }
    }

    pub fn eval(&self, p: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(p, &mut out);
        out
    }

    /// Gradients of all basis functions at `p` (chain rule factor `1/h_T`
    /// included).
    pub fn grad_into(&self, p: Point, out: &mut [[f64; 2]]) {
        match &self.transform {
            None => self.monomial_grads_into(p, out),
            Some(t) => {
                let n = self.dim();
                let mut g = vec![[0.0; 2]; n];
                self.monomial_grads_into(p, &mut g);
                for i in 0..n {
                    let mut acc = [0.0; 2];
                    for j in 0..=i {
                        acc[0] += t[(i, j)] * g[j][0];
                        acc[1] += t[(i, j)] * g[j][1];
                    }
                    out[i] = acc;
                }
            }
        }
    }

    pub fn grad(&self, p: Point) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.dim()];
        self.grad_into(p, &mut out);
        out
    }

    /// Values at many points: row `q` holds the basis at `points[q]`.
    pub fn eval_points(&self, points: &[Point]) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(points.len(), n);
        let mut row = vec![0.0; n];
        for (q, &p) in points.iter().enumerate() {
            self.eval_into(p, &mut row);
            for i in 0..n {
                m[(q, i)] = row[i];
            }
        }
        m
    }

    /// Gradients at many points, one `[d/dx, d/dy]` list per point.
    pub fn grad_points(&self, points: &[Point]) -> Vec<Vec<[f64; 2]>> {
        points.iter().map(|&p| self.grad(p)).collect()
    }
}

/// Legendre basis of `P_r(e)` in the edge coordinate `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeBasis {
    degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        EdgeBasis { degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        out[0] = 1.0;
        if self.degree >= 1 {
            out[1] = t;
        }
        for j in 2..=self.degree {
            let jf = j as f64;
            out[j] = ((2.0 * jf - 1.0) * t * out[j - 1] - (jf - 1.0) * out[j - 2]) / jf;
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims() {
        assert_eq!(poly_dim(0), 1);
        assert_eq!(poly_dim(1), 3);
        assert_eq!(poly_dim(3), 10);
        assert_eq!(monomial_exponents(2), vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
    }

    #[test]
    fn linear_basis_at_centroid() {
        let c = Point::new(0.3, 0.7);
        let b = CellBasis::scaled_monomials(1, c, 0.25);
        assert_eq!(b.eval(c), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_carries_inverse_scale() {
        let b = CellBasis::scaled_monomials(2, Point::new(0.5, 0.5), 0.2);
        for p in [Point::new(0.1, 0.9), Point::new(0.6, 0.4)] {
            let g = b.grad(p);
            assert!((g[1][0] - 5.0).abs() < 1e-14 && g[1][1] == 0.0);
        }
    }

    #[test]
    fn legendre_values() {
        let e = EdgeBasis::new(3);
        let v = e.eval(0.5);
        assert!((v[2] - (3.0 * 0.25 - 1.0) / 2.0).abs() < 1e-15);
        assert!((v[3] - (5.0 * 0.125 - 3.0 * 0.5) / 2.0).abs() < 1e-15);
        assert_eq!(e.eval(1.0), vec![1.0; 4]);
    }
}
