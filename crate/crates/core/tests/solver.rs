//! Whole-pipeline checks of the discrete Stokes solve.

use wgstokes::assembly::{assemble, eval_a, eval_b};
use wgstokes::geometry::Point;
use wgstokes::mesh::{generate_mesh, MeshFamily};
use wgstokes::solver::{condense, solve, solve_with, SolverMethod, SolverOptions};
use wgstokes::spaces::{Discretization, DiscretizationOptions, PressureFunction};
use wgstokes::Error;

fn disc(family: MeshFamily, n: usize, k: usize) -> Discretization {
    let exact = 2 * k as u32 + 4;
    Discretization::with_options(
        generate_mesh(family, n).unwrap(),
        k,
        DiscretizationOptions::with_exactness(exact, exact),
    )
    .unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn zero_data_gives_zero_solution() {
    let d = disc(MeshFamily::UniformQuad, 3, 1);
    let sys = assemble(&d, |_| [0.0, 0.0], |_| [0.0, 0.0]).unwrap();
    assert!(sys.rhs_u.iter().chain(&sys.rhs_p).all(|&x| x == 0.0));
    let r = solve(&sys).unwrap();
    assert_eq!(r.velocity.max_abs(), 0.0);
    assert_eq!(r.pressure.max_abs(), 0.0);
}

#[test]
fn constant_velocity_is_reproduced() {
    let d = disc(MeshFamily::PerturbedPolygon, 4, 2);
    let sys = assemble(&d, |_| [0.0, 0.0], |_| [0.3, -1.2]).unwrap();
    let r = solve(&sys).unwrap();
    let q = d.interpolate_qh(|_| [0.3, -1.2]);
    assert!(max_diff(r.velocity.values(), q.values()) < 1e-10);
    assert!(r.pressure.max_abs() < 1e-10);
}

#[test]
fn quadratic_stokes_solution_is_exact() {
    // u = (x^2, -2xy), p = x + y - 1, f = -lap u + grad p = (-1, 1)
    let u = |p: Point| [p.x * p.x, -2.0 * p.x * p.y];
    let pr = |p: Point| p.x + p.y - 1.0;
    for family in [MeshFamily::UniformQuad, MeshFamily::PerturbedPolygon, MeshFamily::Hexagonal] {
        let d = disc(family, 4, 2);
        let sys = assemble(&d, |_| [-1.0, 1.0], u).unwrap();
        let r = solve(&sys).unwrap();
        let qu = d.interpolate_qh(u);
        let qp = d.project_pressure(pr);
        assert!(max_diff(r.velocity.values(), qu.values()) < 1e-9, "{family}");
        assert!(max_diff(r.pressure.values(), qp.values()) < 1e-9, "{family}");
        assert!(r.pressure_mean.abs() < 1e-12);
        assert!(r.multiplier.abs() < 1e-9);
    }
}

#[test]
fn incompatible_boundary_data_rejected() {
    let d = disc(MeshFamily::UniformQuad, 2, 1);
    let err = assemble(&d, |_| [0.0, 0.0], |p: Point| [p.x, 0.0]).unwrap_err();
    assert!(matches!(err, Error::Compatibility { .. }));
}

#[test]
fn assembled_forms_match_matrix_free() {
    let d = disc(MeshFamily::PerturbedPolygon, 3, 2);
    let sys = assemble(&d, |_| [0.0, 0.0], |_| [0.0, 0.0]).unwrap();
    let dofs = d.dofs();
    let mut seed = 1u64;
    let mut rnd = move || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    for _ in 0..5 {
        let vf: Vec<f64> = (0..dofs.num_free()).map(|_| rnd()).collect();
        let wf: Vec<f64> = (0..dofs.num_free()).map(|_| rnd()).collect();
        let qv: Vec<f64> = (0..dofs.num_pressure()).map(|_| rnd()).collect();
        let v = sys.expand(&vf).unwrap();
        let w = sys.expand(&wf).unwrap();
        let q = PressureFunction::from_values(dofs, qv.clone()).unwrap();
        let aw = sys.a.mul_vec(&wf);
        let assembled: f64 = vf.iter().zip(&aw).map(|(a, b)| a * b).sum();
        let free = eval_a(&d, &v, &w).unwrap();
        assert!((assembled - free).abs() <= 1e-12 * assembled.abs().max(1.0), "{assembled} vs {free}");
        let bv = sys.b.mul_vec(&vf);
        let assembled_b: f64 = qv.iter().zip(&bv).map(|(a, b)| a * b).sum();
        let free_b = eval_b(&d, &v, &q).unwrap();
        assert!((assembled_b - free_b).abs() <= 1e-12 * assembled_b.abs().max(1.0));
    }
}

#[test]
fn condensed_and_minres_match_direct() {
    let u = |p: Point| {
        let (s, c) = (std::f64::consts::PI * p.x).sin_cos();
        let (t, e) = (std::f64::consts::PI * p.y).sin_cos();
        [s * s * 2.0 * t * e, -2.0 * s * c * t * t]
    };
    let d = disc(MeshFamily::UniformQuad, 4, 1);
    let sys = assemble(&d, |p: Point| [p.y, p.x * p.x], u).unwrap();
    let direct = solve(&sys).unwrap();
    let cond = solve_with(&sys, &SolverOptions::with_method(SolverMethod::Condensed)).unwrap();
    assert!(max_diff(direct.velocity.values(), cond.velocity.values()) < 1e-9);
    assert!(max_diff(direct.pressure.values(), cond.pressure.values()) < 1e-9);
    let reduced = condense(&sys).unwrap();
    let dofs = d.dofs();
    assert_eq!(
        reduced.num_reduced(),
        dofs.num_free() - dofs.num_interior() + dofs.num_pressure() + 1
    );
    let it = solve_with(&sys, &SolverOptions::with_method(SolverMethod::Minres)).unwrap();
    assert!(max_diff(direct.velocity.values(), it.velocity.values()) < 1e-8);
    assert!(it.stats.iterations > 1);
}
