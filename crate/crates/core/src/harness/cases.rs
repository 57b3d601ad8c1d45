//! Manufactured solutions on the unit square.
//!
//! Every case has a divergence-free velocity, a zero-mean pressure and a
//! body force written out by hand; [`verify_case`] checks the hand
//! derivation against finite differences.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::ExactSolution;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{generate_mesh, MeshFamily};
use crate::spaces::DiscretizationOptions;

type Vector = fn(Point) -> [f64; 2];
type Tensor = fn(Point) -> [[f64; 2]; 2];
type Scalar = fn(Point) -> f64;

/// Total degrees of a polynomial case, used to pick exact quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PolynomialDegrees {
    pub velocity: u32,
    pub pressure: u32,
    pub force: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub description: &'static str,
    pub regularity: &'static str,
    /// Smallest `k` for which the scheme reproduces the case exactly.
    pub exact_from_degree: Option<usize>,
    pub polynomial: Option<PolynomialDegrees>,
    velocity: Vector,
    gradient: Tensor,
    pressure: Scalar,
    force: Vector,
}

impl ManufacturedCase {
    pub fn body_force(&self, p: Point) -> [f64; 2] {
        (self.force)(p)
    }

    /// The same case with a different body force (for negative controls).
    pub fn with_force(mut self, force: Vector) -> Self {
        self.force = force;
        self
    }

    pub fn is_exact_for(&self, degree: usize) -> bool {
        self.exact_from_degree.is_some_and(|k| degree >= k)
    }

    /// Quadrature for degree `k`: exact for every integral of a polynomial
    /// case, and generous for smooth ones.
    pub fn discretization_options(&self, degree: usize) -> DiscretizationOptions {
        let k = degree as u32;
        let (cell, edge) = match self.polynomial {
            Some(d) => (
                (2 * k + 2).max(d.velocity + k).max(d.force + k),
                (2 * k + 1).max(d.velocity + k).max(d.pressure + k),
            ),
            None => ((2 * k + 2).max(12), (2 * k + 1).max(12)),
        };
        DiscretizationOptions::with_exactness(cell, edge)
    }
}

impl ExactSolution for ManufacturedCase {
    fn velocity(&self, p: Point) -> [f64; 2] {
        (self.velocity)(p)
    }

    fn velocity_gradient(&self, p: Point) -> [[f64; 2]; 2] {
        (self.gradient)(p)
    }

    fn pressure(&self, p: Point) -> f64 {
        (self.pressure)(p)
    }
}

// Stream functions psi(x, y) = a(x) a(y) give u = (a(x) a'(y), -a'(x) a(y)).
fn quartic(t: f64) -> [f64; 4] {
    [
        t * t * (1.0 - t).powi(2),
        2.0 * t - 6.0 * t * t + 4.0 * t.powi(3),
        2.0 - 12.0 * t + 12.0 * t * t,
        -12.0 + 24.0 * t,
    ]
}

fn sine_squared(t: f64) -> [f64; 4] {
    let (s, c) = (2.0 * PI * t).sin_cos();
    [
        (PI * t).sin().powi(2),
        PI * s,
        2.0 * PI * PI * c,
        -4.0 * PI.powi(3) * s,
    ]
}

fn stream_velocity(a: fn(f64) -> [f64; 4], p: Point) -> [f64; 2] {
    let (ax, ay) = (a(p.x), a(p.y));
    [ax[0] * ay[1], -ax[1] * ay[0]]
}

fn stream_gradient(a: fn(f64) -> [f64; 4], p: Point) -> [[f64; 2]; 2] {
    let (ax, ay) = (a(p.x), a(p.y));
    [
        [ax[1] * ay[1], ax[0] * ay[2]],
        [-ax[2] * ay[0], -ax[1] * ay[1]],
    ]
}

fn stream_minus_laplacian(a: fn(f64) -> [f64; 4], p: Point) -> [f64; 2] {
    let (ax, ay) = (a(p.x), a(p.y));
    [
        -(ax[2] * ay[1] + ax[0] * ay[3]),
        ax[3] * ay[0] + ax[1] * ay[2],
    ]
}

const CASES: &[ManufacturedCase] = &[
    ManufacturedCase {
        name: "poly-exact-k1",
        description: "rigid rotation u = (y, -x), p = 0, f = 0",
        regularity: "polynomial",
        exact_from_degree: Some(1),
        polynomial: Some(PolynomialDegrees { velocity: 1, pressure: 0, force: 0 }),
        velocity: |p| [p.y, -p.x],
        gradient: |_| [[0.0, 1.0], [-1.0, 0.0]],
        pressure: |_| 0.0,
        force: |_| [0.0, 0.0],
    },
    ManufacturedCase {
        name: "rotation-linear-pressure",
        description: "u = (y, -x), p = x - 1/2, f = (1, 0)",
        regularity: "polynomial",
        exact_from_degree: Some(2),
        polynomial: Some(PolynomialDegrees { velocity: 1, pressure: 1, force: 0 }),
        velocity: |p| [p.y, -p.x],
        gradient: |_| [[0.0, 1.0], [-1.0, 0.0]],
        pressure: |p| p.x - 0.5,
        force: |_| [1.0, 0.0],
    },
    ManufacturedCase {
        name: "poly-quadratic",
        description: "u = (x^2, -2xy), p = x + y - 1, f = (-1, 1)",
        regularity: "polynomial",
        exact_from_degree: Some(2),
        polynomial: Some(PolynomialDegrees { velocity: 2, pressure: 1, force: 0 }),
        velocity: |p| [p.x * p.x, -2.0 * p.x * p.y],
        gradient: |p| [[2.0 * p.x, 0.0], [-2.0 * p.y, -2.0 * p.x]],
        pressure: |p| p.x + p.y - 1.0,
        force: |_| [-1.0, 1.0],
    },
    ManufacturedCase {
        name: "stream-quartic",
        description: "u = curl psi, psi = x^2(1-x)^2 y^2(1-y)^2, p = x^3 - 1/4",
        regularity: "polynomial of degree 7, not reproduced for k <= 6",
        exact_from_degree: Some(7),
        polynomial: Some(PolynomialDegrees { velocity: 7, pressure: 3, force: 5 }),
        velocity: |p| stream_velocity(quartic, p),
        gradient: |p| stream_gradient(quartic, p),
        pressure: |p| p.x.powi(3) - 0.25,
        force: |p| {
            let l = stream_minus_laplacian(quartic, p);
            [l[0] + 3.0 * p.x * p.x, l[1]]
        },
    },
    ManufacturedCase {
        name: "sine-vortex",
        description: "u = curl psi, psi = sin^2(pi x) sin^2(pi y), p = cos(pi x) cos(pi y)",
        regularity: "analytic",
        exact_from_degree: None,
        polynomial: None,
        velocity: |p| stream_velocity(sine_squared, p),
        gradient: |p| stream_gradient(sine_squared, p),
        pressure: |p| (PI * p.x).cos() * (PI * p.y).cos(),
        force: |p| {
            let l = stream_minus_laplacian(sine_squared, p);
            [
                l[0] - PI * (PI * p.x).sin() * (PI * p.y).cos(),
                l[1] - PI * (PI * p.x).cos() * (PI * p.y).sin(),
            ]
        },
    },
];

pub fn list_cases() -> &'static [ManufacturedCase] {
    CASES
}

pub fn find_case(name: &str) -> Result<ManufacturedCase> {
    CASES.iter().find(|c| c.name == name).copied().ok_or_else(|| {
        let names: Vec<&str> = CASES.iter().map(|c| c.name).collect();
        Error::Config(format!(
            "unknown case `{name}`; registered cases: {}",
            names.join(", ")
        ))
    })
}

/// Outcome of [`verify_case`]; every entry is a worst case over the samples.
#[derive(Clone, Debug, Serialize)]
pub struct CaseCheck {
    pub name: String,
    pub max_divergence: f64,
    pub pressure_mean: f64,
    pub max_gradient_defect: f64,
    pub max_force_defect: f64,
    pub samples: usize,
    pub seed: u64,
}

pub const DIVERGENCE_TOLERANCE: f64 = 1e-12;
pub const MEAN_TOLERANCE: f64 = 1e-10;
pub const FINITE_DIFFERENCE_TOLERANCE: f64 = 1e-5;
pub const FINITE_DIFFERENCE_STEP: f64 = 1e-5;

fn central<const N: usize>(f: impl Fn(Point) -> [f64; N], p: Point, dir: Point, h: f64) -> [f64; N] {
    let plus = f(Point::new(p.x + h * dir.x, p.y + h * dir.y));
    let minus = f(Point::new(p.x - h * dir.x, p.y - h * dir.y));
    std::array::from_fn(|i| (plus[i] - minus[i]) / (2.0 * h))
}

pub fn verify_case(case: &ManufacturedCase, samples: usize, seed: u64) -> Result<CaseCheck> {
    let h = FINITE_DIFFERENCE_STEP;
    let e = [Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut div, mut grad_defect, mut force_defect) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let p = Point::new(rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
        let g = case.velocity_gradient(p);
        div = div.max((g[0][0] + g[1][1]).abs());

        let scale = 1.0 + g.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for d in 0..2 {
            let du = central(|q| case.velocity(q), p, e[d], h);
            for c in 0..2 {
                grad_defect = grad_defect.max((du[c] - g[c][d]).abs() / scale);
            }
        }

        // -Laplace u from differences of the analytic gradient, grad p from p
        let mut lap = [0.0; 2];
        for d in 0..2 {
            let dg = central(
                |q| {
                    let g = case.velocity_gradient(q);
                    [g[0][d], g[1][d]]
                },
                p,
                e[d],
                h,
            );
            for c in 0..2 {
                lap[c] += dg[c];
            }
        }
        let dp: [f64; 2] = std::array::from_fn(|d| central(|q| [case.pressure(q)], p, e[d], h)[0]);
        let f = case.body_force(p);
        let fscale = 1.0 + f[0].abs().max(f[1].abs());
        for c in 0..2 {
            force_defect = force_defect.max((f[c] - (-lap[c] + dp[c])).abs() / fscale);
        }
    }

    let mesh = generate_mesh(MeshFamily::UniformQuad, 8)?;
    let mut mean = 0.0;
    for c in 0..mesh.num_cells() {
        let rule = crate::quadrature::polygon_quadrature(&mesh.cell_points(c), mesh.cell_centroid(c), 20)?;
        mean += rule.integrate(|q| case.pressure(q));
    }

    let check = CaseCheck {
        name: case.name.to_string(),
        max_divergence: div,
        pressure_mean: mean,
        max_gradient_defect: grad_defect,
        max_force_defect: force_defect,
        samples,
        seed,
    };
    let fail = |reason: String| {
        Err(Error::CaseDefinition {
            case: case.name.to_string(),
            reason,
        })
    };
    if div > DIVERGENCE_TOLERANCE {
        return fail(format!("divergence {div:e} exceeds {DIVERGENCE_TOLERANCE:e}"));
    }
    if mean.abs() > MEAN_TOLERANCE {
        return fail(format!("pressure mean {mean:e} exceeds {MEAN_TOLERANCE:e}"));
    }
    if grad_defect > FINITE_DIFFERENCE_TOLERANCE {
        return fail(format!(
            "velocity gradient differs from finite differences by {grad_defect:e}"
        ));
    }
    if force_defect > FINITE_DIFFERENCE_TOLERANCE {
        return fail(format!(
            "body force differs from -Laplace u + grad p by {force_defect:e}"
        ));
    }
    Ok(check)
}
