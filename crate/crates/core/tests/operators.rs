//! Weak gradient, weak divergence and stabilizer on small meshes, checked
//! against closed-form values.

use nalgebra::SymmetricEigen;
use wgstokes::geometry::Point;
use wgstokes::mesh::{generate_mesh, generate_mesh_with, MeshFamily, MeshOptions};
use wgstokes::spaces::{Discretization, DiscretizationOptions, WeakFunction};

fn unit_square(k: usize) -> Discretization {
    Discretization::new(generate_mesh(MeshFamily::UniformQuad, 1).unwrap(), k).unwrap()
}

/// Mean of the tensor coefficients' constant part; on P_0 they are the values.
fn p0_gradient(d: &Discretization, v: &WeakFunction) -> Vec<f64> {
    d.weak_gradient(v, 0).unwrap()
}

#[test]
fn constants_are_annihilated() {
    for k in 1..=3 {
        let m = generate_mesh_with(MeshFamily::PerturbedPolygon, 3, &MeshOptions::default()).unwrap();
        let d = Discretization::new(m, k).unwrap();
        let v = d.interpolate_qh(|_| [1.5, -0.25]);
        for c in 0..d.mesh().num_cells() {
            let g = d.weak_gradient(&v, c).unwrap();
            let dv = d.weak_divergence(&v, c).unwrap();
            assert!(g.iter().chain(&dv).all(|x| x.abs() < 1e-12), "k={k} c={c}");
        }
    }
}

#[test]
fn linear_field_gradient_is_exact() {
    for k in 1..=3 {
        let d = unit_square(k);
        let v = d.interpolate_qh(|p: Point| [p.x, 0.0]);
        let g = p0_gradient(&d, &v);
        let np = d.local_ops(0).pressure_dim();
        let expected = [1.0, 0.0, 0.0, 0.0];
        for b in 0..4 {
            assert!((g[b * np] - expected[b]).abs() < 1e-13, "k={k} block {b}");
            assert!(g[b * np + 1..(b + 1) * np].iter().all(|x| x.abs() < 1e-13));
        }
        let w = d.interpolate_qh(|p: Point| [p.x, p.y]);
        let div = d.weak_divergence(&w, 0).unwrap();
        assert!((div[0] - 2.0).abs() < 1e-13);
    }
}

#[test]
fn quadratic_field_on_p0() {
    // Oracle: (grad_w v, q) = int_T d/dx(x^2) * q = int_0^1 2x dx = 1 for q = 1, |T| = 1.
    let d = unit_square(1);
    let v = d.interpolate_qh(|p: Point| [p.x * p.x, 0.0]);
    let g = p0_gradient(&d, &v);
    assert!((g[0] - 1.0).abs() < 1e-14);
    assert!(g[1..].iter().all(|x| x.abs() < 1e-14));
    let div = d.weak_divergence(&v, 0).unwrap();
    assert!((div[0] - 1.0).abs() < 1e-14);
}

#[test]
fn single_edge_stabilizer_energy() {
    // v0 = 0 and v_b = (1, 0) on one side: h^-1 * int_e 1 = L / h.
    let m = generate_mesh(MeshFamily::UniformQuad, 2).unwrap();
    let d = Discretization::new(m, 1).unwrap();
    let ops = d.local_ops(0);
    let mut v = vec![0.0; ops.num_local()];
    let nk = ops.cell_dim();
    v[2 * nk] = 1.0; // side 0, x component, constant Legendre mode
    let e = d.mesh().cell_edges(0)[0];
    let expected = d.mesh().edge_length(e) / d.mesh().cell_diameter(0);
    let s = ops.stabilizer_form(&v, &v).unwrap();
    assert!((s - expected).abs() < 1e-14, "{s} vs {expected}");
}

#[test]
fn stabilizer_symmetric_psd_and_kills_traces() {
    let m = generate_mesh(MeshFamily::Hexagonal, 4).unwrap();
    for k in 1..=3 {
        let d = Discretization::new(m.clone(), k).unwrap();
        for c in 0..d.mesh().num_cells() {
            let s = d.local_ops(c).stabilizer();
            let asym = (s - s.transpose()).abs().max();
            assert!(asym <= 1e-14 * s.abs().max());
            let eig = SymmetricEigen::new(s.clone()).eigenvalues;
            assert!(eig.min() >= -1e-12);
        }
        let v = d.interpolate_qh(|p: Point| [p.x.powi(k as i32) - p.y, p.x * p.y.powi(k as i32 - 1)]);
        for c in 0..d.mesh().num_cells() {
            let loc = d.local_coefficients(&v, c).unwrap();
            let ops = d.local_ops(c);
            let s = ops.stabilizer_form(&loc, &loc).unwrap();
            let scale = ops.stabilizer().abs().max() * loc.iter().map(|x| x * x).sum::<f64>();
            assert!(s.abs() <= 1e-14 * scale, "k={k} c={c} s={s}");
        }
    }
}

#[test]
fn divergence_is_trace_of_gradient() {
    let m = generate_mesh(MeshFamily::PerturbedPolygon, 4).unwrap();
    let d = Discretization::new(m, 2).unwrap();
    for c in 0..d.mesh().num_cells() {
        let ops = d.local_ops(c);
        let np = ops.pressure_dim();
        let g = ops.weak_gradient();
        let dv = ops.weak_divergence();
        for beta in 0..np {
            for j in 0..ops.num_local() {
                let tr = g[(beta, j)] + g[(3 * np + beta, j)];
                assert!((tr - dv[(beta, j)]).abs() < 1e-10 * (1.0 + dv[(beta, j)].abs()));
            }
        }
    }
}

#[test]
fn commutativity_for_cubic_field() {
    // v = (x^3 y, x), k = 2
    let m = generate_mesh(MeshFamily::UniformQuad, 4).unwrap();
    let d = Discretization::with_options(m, 2, DiscretizationOptions::with_exactness(12, 12)).unwrap();
    let v = d.interpolate_qh(|p: Point| [p.x.powi(3) * p.y, p.x]);
    for c in 0..d.mesh().num_cells() {
        let lhs = d.weak_gradient(&v, c).unwrap();
        let rhs = d.project_tensor_qh(c, |p: Point| {
            [[3.0 * p.x * p.x * p.y, p.x.powi(3)], [1.0, 0.0]]
        });
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
        let ldiv = d.weak_divergence(&v, c).unwrap();
        let rdiv = d.project_scalar_qh(c, |p: Point| 3.0 * p.x * p.x * p.y);
        for (a, b) in ldiv.iter().zip(&rdiv) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn apply_checks_dimensions() {
    let d = unit_square(1);
    let ops = d.local_ops(0);
    assert!(ops.apply_weak_gradient(&[0.0; 3]).is_err());
    let zero = vec![0.0; ops.num_local()];
    assert!(ops.apply_weak_divergence(&zero).unwrap().iter().all(|&x| x == 0.0));
}
