//! Topology, geometry and I/O of the generated mesh families.

use wgstokes::mesh::{
    generate_mesh, generate_mesh_with, parse_mesh, refine_sequence, save_mesh, load_mesh, shape_regularity,
    write_mesh, MeshFamily, MeshOptions, PolygonalMesh,
};
use wgstokes::Error;

fn all_meshes() -> Vec<(MeshFamily, PolygonalMesh)> {
    MeshFamily::ALL
        .iter()
        .flat_map(|&f| [3, 6].map(move |n| (f, generate_mesh(f, n).unwrap())))
        .collect()
}

#[test]
fn euler_relation_and_area() {
    for (family, m) in all_meshes() {
        let euler = m.num_vertices() as i64 - m.num_edges() as i64 + m.num_cells() as i64;
        assert_eq!(euler, 1, "{family}");
        let area: f64 = (0..m.num_cells()).map(|c| m.cell_area(c)).sum();
        assert!((area - 1.0).abs() < 1e-12, "{family}: {area}");
    }
}

#[test]
fn interior_normals_are_opposite() {
    for (family, m) in all_meshes() {
        for (e, edge) in m.edges().iter().enumerate() {
            let Some(right) = edge.right else { continue };
            let nl = m.outward_normal(edge.left, m.side_of(edge.left, e).unwrap());
            let nr = m.outward_normal(right, m.side_of(right, e).unwrap());
            assert!((nl.x + nr.x).abs() < 1e-15 && (nl.y + nr.y).abs() < 1e-15, "{family} edge {e}");
            assert!((nl.norm() - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn every_side_is_an_edge_once() {
    for (family, m) in all_meshes() {
        let mut uses = vec![0usize; m.num_edges()];
        for c in 0..m.num_cells() {
            assert_eq!(m.cell_edges(c).len(), m.cell(c).len());
            for &e in m.cell_edges(c) {
                uses[e] += 1;
            }
        }
        for (e, edge) in m.edges().iter().enumerate() {
            assert_eq!(uses[e], if edge.is_boundary() { 1 } else { 2 }, "{family} edge {e}");
            assert!(edge.vertices[0] < edge.vertices[1]);
        }
    }
}

#[test]
fn hexagonal_interior_cells_are_hexagons() {
    let m = generate_mesh(MeshFamily::Hexagonal, 4).unwrap();
    for c in (0..m.num_cells()).filter(|&c| !m.touches_boundary(c)) {
        assert_eq!(m.cell(c).len(), 6, "cell {c}");
    }
    let area: f64 = (0..m.num_cells()).map(|c| m.cell_area(c)).sum();
    assert!((area - 1.0).abs() < 1e-12);
}

#[test]
fn perturbed_cells_are_mostly_polygons() {
    let m = generate_mesh(MeshFamily::PerturbedPolygon, 8).unwrap();
    let many = (0..m.num_cells()).filter(|&c| m.cell(c).len() >= 5).count();
    assert!(2 * many > m.num_cells(), "{many} of {} cells have five or more sides", m.num_cells());
}

#[test]
fn refinement_halves_mesh_size() {
    for family in MeshFamily::ALL {
        let seq = refine_sequence(family, 4, 3, &MeshOptions::default()).unwrap();
        for w in seq.windows(2) {
            let ratio = w[1].mesh_size() / w[0].mesh_size();
            assert!((0.4..=0.6).contains(&ratio), "{family}: ratio {ratio}");
        }
    }
    let quads = refine_sequence(MeshFamily::UniformQuad, 4, 3, &MeshOptions::default()).unwrap();
    assert_eq!(quads.iter().map(|m| m.num_cells()).collect::<Vec<_>>(), [16, 64, 256]);
}

#[test]
fn perturbed_meshes_depend_only_on_seed() {
    let opts = MeshOptions { seed: 42, jitter: 0.3 };
    let a = write_mesh(&generate_mesh_with(MeshFamily::PerturbedPolygon, 5, &opts).unwrap());
    let b = write_mesh(&generate_mesh_with(MeshFamily::PerturbedPolygon, 5, &opts).unwrap());
    assert_eq!(a, b);
    let other = MeshOptions { seed: 43, ..opts };
    assert_ne!(a, write_mesh(&generate_mesh_with(MeshFamily::PerturbedPolygon, 5, &other).unwrap()));
}

#[test]
fn regularity_is_uniform_on_structured_meshes() {
    for (family, want) in [
        (MeshFamily::UniformQuad, 2.0 * 2f64.sqrt()),
        (MeshFamily::UniformTriangle, 2.0 + 2.0 * 2f64.sqrt()),
    ] {
        let r = shape_regularity(&generate_mesh(family, 4).unwrap(), 100.0).unwrap();
        for a in &r.aspect {
            assert!((a - want).abs() < 1e-9, "{family}: {a} vs {want}");
        }
        assert!(r.flagged.is_empty());
    }
    let p = shape_regularity(&generate_mesh(MeshFamily::PerturbedPolygon, 8).unwrap(), 1.0).unwrap();
    assert!(p.max_aspect.is_finite() && p.max_aspect >= p.min_aspect);
    assert_eq!(p.flagged.len(), p.aspect.len());
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (family, m) in all_meshes() {
        let path = dir.path().join(format!("{family}.mesh"));
        save_mesh(&m, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.vertices(), m.vertices(), "{family}");
        assert_eq!(back.cells(), m.cells());
        assert_eq!(back.edges(), m.edges());
    }
}

#[test]
fn inconsistent_files_are_rejected() {
    let missing = "wgmesh 2d v1\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 5\n";
    assert!(matches!(parse_mesh(missing), Err(Error::Validation(_))));
    // three triangles share the edge (0, 1)
    let shared = "wgmesh 2d v1\nvertices 5\n0 0\n1 0\n0.5 1\n0.5 -1\n0.5 2\ncells 3\n0 1 2\n1 0 3\n0 1 4\n";
    assert!(matches!(parse_mesh(shared), Err(Error::Validation(_))));
    match parse_mesh("wgmesh 2d v1\nvertices 1\n0 zero\n") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
}
