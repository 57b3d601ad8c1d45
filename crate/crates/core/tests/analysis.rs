//! Norms, the inf-sup constant, consistency functionals and the error
//! equation, each checked against a second computation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wgstokes::analysis::{
    consistency_dual_norms, consistency_functionals, discrete_inf_sup, error_bundle, fit_rates, fit_slope,
    gradient_energy_ratio, trace_inequality_ratio, triple_bar_norm, triple_bar_parts, verify_error_equation,
    ExactSolution, Rate,
};
use wgstokes::assembly::{assemble, eval_a};
use wgstokes::harness::find_case;
use wgstokes::mesh::{generate_mesh, generate_mesh_with, MeshFamily, MeshOptions};
use wgstokes::solver::solve;
use wgstokes::spaces::{Discretization, WeakFunction};

fn disc(family: MeshFamily, n: usize, k: usize) -> Discretization {
    let mesh = generate_mesh_with(family, n, &MeshOptions::default()).unwrap();
    Discretization::new(mesh, k).unwrap()
}

fn random_free(d: &Discretization, rng: &mut ChaCha8Rng) -> (Vec<f64>, WeakFunction) {
    let free: Vec<f64> = (0..d.dofs().num_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v = WeakFunction::from_free(d.dofs(), &free).unwrap();
    (free, v)
}

#[test]
fn triple_bar_matches_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (family, k) in [(MeshFamily::UniformQuad, 1), (MeshFamily::PerturbedPolygon, 2)] {
        let d = disc(family, 4, k);
        let sys = assemble(&d, |_| [0.0; 2], |_| [0.0; 2]).unwrap();
        for _ in 0..10 {
            let (free, v) = random_free(&d, &mut rng);
            let quad: f64 = free.iter().zip(sys.a.mul_vec(&free)).map(|(a, b)| a * b).sum();
            let norm = triple_bar_norm(&d, &v).unwrap();
            assert!((norm * norm - quad).abs() <= 1e-12 * quad, "{family} k={k}");
            let direct = eval_a(&d, &v, &v).unwrap();
            assert!((direct - quad).abs() <= 1e-12 * quad);
        }
    }
    let d = disc(MeshFamily::UniformQuad, 2, 1);
    assert_eq!(triple_bar_norm(&d, &WeakFunction::zeros(d.dofs())).unwrap(), 0.0);
}

#[test]
fn energy_matrix_is_positive_definite() {
    for family in [MeshFamily::UniformQuad, MeshFamily::Hexagonal] {
        let d = disc(family, 3, 1);
        let sys = assemble(&d, |_| [0.0; 2], |_| [0.0; 2]).unwrap();
        let eig = SymmetricEigen::new(sys.a.to_dense());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min > 1e-6, "{family}: smallest eigenvalue {min:e}");
    }
}

/// `beta_h` by a dense generalized eigenproblem on an explicit basis of the
/// zero-mean pressures, sharing nothing with the library routine beyond the
/// assembled blocks.
fn dense_inf_sup(d: &Discretization) -> f64 {
    let sys = assemble(d, |_| [0.0; 2], |_| [0.0; 2]).unwrap();
    let a = sys.a.to_dense();
    let b = sys.b.to_dense();
    let np = b.nrows();
    let mut m = DMatrix::zeros(np, np);
    for cell in 0..d.mesh().num_cells() {
        let r = d.dofs().pressure(cell);
        m.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&sys.pressure_mass[cell]);
    }
    let s = &b * a.cholesky().unwrap().solve(&b.transpose());
    // columns of z span { q : c . q = 0 }
    let c = DVector::from_vec(sys.c.clone());
    let svd = c.transpose().svd(false, true);
    let vt = svd.v_t.unwrap();
    let full = nalgebra::linalg::QR::new(DMatrix::from_fn(np, np, |i, j| {
        if j == 0 { vt[(0, i)] } else if i == j { 1.0 } else { 0.0 }
    }))
    .q();
    let z = full.columns(1, np - 1).into_owned();
    let sz = z.transpose() * &s * &z;
    let mz = z.transpose() * &m * &z;
    let l = mz.cholesky().unwrap().l();
    let li = l.clone().try_inverse().unwrap();
    let sym = &li * sz * li.transpose();
    let eig = SymmetricEigen::new(0.5 * (&sym + sym.transpose()));
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min).sqrt()
}

#[test]
fn inf_sup_matches_dense_oracle() {
    for (family, k) in [
        (MeshFamily::UniformQuad, 1),
        (MeshFamily::PerturbedPolygon, 1),
        (MeshFamily::Hexagonal, 2),
    ] {
        let d = disc(family, 4, k);
        let got = discrete_inf_sup(&d).unwrap();
        let want = dense_inf_sup(&d);
        assert!((got.beta - want).abs() < 1e-10, "{family}: {} vs {want}", got.beta);
        assert!(got.beta > 0.01 && got.beta <= got.next_beta && got.next_beta <= got.max_beta);
    }
}

#[test]
fn functionals_vanish_on_polynomial_data() {
    let case = find_case("poly-quadratic").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mesh = generate_mesh_with(MeshFamily::PerturbedPolygon, 3, &MeshOptions::default()).unwrap();
    let d = Discretization::with_options(mesh, 2, case.discretization_options(2)).unwrap();
    for _ in 0..5 {
        let (_, v) = random_free(&d, &mut rng);
        let f = consistency_functionals(&d, &case, &v).unwrap();
        for x in [f.ell, f.theta, f.stab, f.phi] {
            assert!(x.abs() < 1e-12, "{f:?}");
        }
    }
}

#[test]
fn sampled_functionals_never_exceed_dual_norms() {
    let case = find_case("sine-vortex").unwrap();
    let d = Discretization::with_options(
        generate_mesh(MeshFamily::UniformQuad, 4).unwrap(),
        1,
        case.discretization_options(1),
    )
    .unwrap();
    let sys = assemble(&d, |p| case.body_force(p), |p| case.velocity(p)).unwrap();
    let dual = consistency_dual_norms(&d, &sys, &case).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut seen = [0.0f64; 3];
    for _ in 0..20 {
        let (_, v) = random_free(&d, &mut rng);
        let f = consistency_functionals(&d, &case, &v).unwrap();
        let n = triple_bar_norm(&d, &v).unwrap();
        for (s, x) in seen.iter_mut().zip([f.ell, f.theta, f.stab]) {
            *s = s.max(x.abs() / n);
        }
    }
    for (s, dn) in seen.iter().zip([dual.ell, dual.theta, dual.stab]) {
        assert!(*s <= dn * (1.0 + 1e-10), "sampled {s:e} above dual norm {dn:e}");
        assert!(*s > 0.0);
    }
}

#[test]
fn error_equation_holds_for_smooth_data() {
    let case = find_case("sine-vortex").unwrap();
    let d = Discretization::with_options(
        generate_mesh(MeshFamily::UniformQuad, 8).unwrap(),
        1,
        case.discretization_options(1),
    )
    .unwrap();
    let sys = assemble(&d, |p| case.body_force(p), |p| case.velocity(p)).unwrap();
    let sol = solve(&sys).unwrap();
    let r = verify_error_equation(&d, &sys, &sol, &case, 50, 17).unwrap();
    assert!(r.momentum_sampled <= r.momentum_dual * (1.0 + 1e-10));
    assert!(r.momentum_dual < 1e-9, "{r:?}");
    assert!(r.continuity_dual < 1e-9, "{r:?}");
    assert_eq!((r.samples, r.seed), (50, 17));
}

#[test]
fn zero_solution_errors_are_projection_norms() {
    let case = find_case("stream-quartic").unwrap();
    let d = disc(MeshFamily::UniformQuad, 4, 1);
    let sys = assemble(&d, |_| [0.0; 2], |_| [0.0; 2]).unwrap();
    let zero = solve(&sys).unwrap();
    let bundle = error_bundle(&d, &case, &zero).unwrap();
    let qu = d.interpolate_qh(|p| case.velocity(p));
    let want = triple_bar_norm(&d, &qu).unwrap();
    assert!((bundle.triple_bar - want).abs() < 1e-12 * want);
    let (g, s) = triple_bar_parts(&d, &qu).unwrap();
    assert!((bundle.triple_bar_gradient_sq - g).abs() < 1e-14 && (bundle.triple_bar_stabilizer_sq - s).abs() < 1e-14);
    assert!(
        (bundle.triple_bar.powi(2) - bundle.triple_bar_gradient_sq - bundle.triple_bar_stabilizer_sq).abs() < 1e-14
    );
    let qp = d.project_pressure(|p| case.pressure(p));
    let mut p2 = 0.0;
    for c in 0..d.mesh().num_cells() {
        p2 += d.cell_rule(c).integrate(|p| d.eval_pressure(&qp, c, p).powi(2));
    }
    assert!((bundle.pres_l2 - p2.sqrt()).abs() < 1e-13);
}

#[test]
fn noisy_power_law_slopes() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 1..=3 {
        let h: Vec<f64> = (0..4).map(|j| 0.25 / 2f64.powi(j)).collect();
        let e: Vec<f64> = h.iter().map(|x| 2.5 * x.powi(k) * (1.0 + rng.random_range(-0.01..0.01))).collect();
        match fit_rates(&h, &e).unwrap() {
            Rate::Fitted { slope, pairwise } => {
                assert!((slope - k as f64).abs() < 0.05);
                assert_eq!(pairwise.len(), 3);
            }
            Rate::Exact => panic!("noisy errors are not exact"),
        }
        assert!((fit_slope(&h, &h.iter().map(|x| x.powi(k)).collect::<Vec<_>>()).unwrap() - k as f64).abs() < 1e-12);
    }
}

#[test]
fn trace_and_gradient_ratios_do_not_grow() {
    for family in [MeshFamily::UniformQuad, MeshFamily::PerturbedPolygon] {
        let coarse = disc(family, 4, 2);
        let fine = disc(family, 8, 2);
        let tc = trace_inequality_ratio(&coarse, 20, 1);
        let tf = trace_inequality_ratio(&fine, 20, 1);
        assert!(tc.is_finite() && tf < 2.0 * tc.max(1.0), "{family}: trace {tc} -> {tf}");
        let sc = assemble(&coarse, |_| [0.0; 2], |_| [0.0; 2]).unwrap();
        let sf = assemble(&fine, |_| [0.0; 2], |_| [0.0; 2]).unwrap();
        let gc = gradient_energy_ratio(&coarse, &sc, 100, 2).unwrap();
        let gf = gradient_energy_ratio(&fine, &sf, 100, 2).unwrap();
        assert!(gc > 0.0 && gf < 10.0 * gc, "{family}: gradient ratio {gc} -> {gf}");
    }
}
