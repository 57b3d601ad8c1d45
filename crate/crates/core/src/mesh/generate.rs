use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::voronoi::clipped_voronoi;
use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Built-in mesh families on the unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeshFamily {
    /// `n x n` squares, each split along its lower-left to upper-right diagonal.
    UniformTriangle,
    /// `n x n` squares.
    UniformQuad,
    /// Clipped Voronoi cells of a jittered `n x n` grid of generators.
    PerturbedPolygon,
    /// Clipped Voronoi cells of a staggered lattice with `n` rows; interior
    /// cells are hexagons.
    Hexagonal,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 4] = [
        MeshFamily::UniformTriangle,
        MeshFamily::UniformQuad,
        MeshFamily::PerturbedPolygon,
        MeshFamily::Hexagonal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::UniformTriangle => "uniform-triangle",
            MeshFamily::UniformQuad => "uniform-quad",
            MeshFamily::PerturbedPolygon => "perturbed-polygon",
            MeshFamily::Hexagonal => "hexagonal",
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeshFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = MeshFamily::ALL.iter().map(|f| f.name()).collect();
                Error::Config(format!(
                    "unknown mesh family `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Knobs for the randomized families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshOptions {
    pub seed: u64,
    /// Generator jitter as a fraction of the grid spacing.
    pub jitter: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions {
            seed: 20_130_101,
            jitter: 0.2,
        }
    }
}

pub fn generate_mesh(family: MeshFamily, n: usize) -> Result<PolygonalMesh> {
    generate_mesh_with(family, n, &MeshOptions::default())
}

pub fn generate_mesh_with(
    family: MeshFamily,
    n: usize,
    options: &MeshOptions,
) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(Error::Config("subdivision count n must be at least 1".into()));
    }
    if !(0.0..0.5).contains(&options.jitter) {
        return Err(Error::Config(format!(
            "jitter {} must lie in [0, 0.5)",
            options.jitter
        )));
    }
    match family {
        MeshFamily::UniformQuad => uniform_quad(n),
        MeshFamily::UniformTriangle => uniform_triangle(n),
        MeshFamily::PerturbedPolygon => perturbed_polygon(n, options),
        MeshFamily::Hexagonal => hexagonal(n),
    }
}

/// Meshes with `n = n0 * 2^j` for `j = 0..levels`.
///
/// Randomized families use `seed + j` at level `j`.
pub fn refine_sequence(
    family: MeshFamily,
    n0: usize,
    levels: usize,
    options: &MeshOptions,
) -> Result<Vec<PolygonalMesh>> {
    if levels < 2 {
        return Err(Error::Config(format!(
            "a refinement sequence needs at least 2 levels, got {levels}"
        )));
    }
    (0..levels)
        .map(|j| {
            let opts = MeshOptions {
                seed: options.seed.wrapping_add(j as u64),
                ..*options
            };
            generate_mesh_with(family, n0 << j, &opts)
        })
        .collect()
}

fn grid_vertices(n: usize) -> Vec<Point> {
    let h = 1.0 / n as f64;
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push(Point::new(i as f64 * h, j as f64 * h));
        }
    }
    v
}

fn uniform_quad(n: usize) -> Result<PolygonalMesh> {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolygonalMesh::new(grid_vertices(n), cells)
}

fn uniform_triangle(n: usize) -> Result<PolygonalMesh> {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolygonalMesh::new(grid_vertices(n), cells)
}

fn perturbed_polygon(n: usize, options: &MeshOptions) -> Result<PolygonalMesh> {
    let h = 1.0 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut generators = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let dx = options.jitter * rng.random_range(-1.0..=1.0);
            let dy = options.jitter * rng.random_range(-1.0..=1.0);
            generators.push(Point::new(
                (i as f64 + 0.5 + dx) * h,
                (j as f64 + 0.5 + dy) * h,
            ));
        }
    }
    clipped_voronoi(&generators, h)
}

fn hexagonal(n: usize) -> Result<PolygonalMesh> {
    let h = 1.0 / n as f64;
    let mut generators = Vec::new();
    for j in 0..n {
        let y = (j as f64 + 0.5) * h;
        if j % 2 == 0 {
            for i in 0..n {
                generators.push(Point::new((i as f64 + 0.5) * h, y));
            }
        } else {
            for i in 0..=n {
                generators.push(Point::new(i as f64 * h, y));
            }
        }
    }
    clipped_voronoi(&generators, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_2x2_counts() {
        let m = generate_mesh(MeshFamily::UniformQuad, 2).unwrap();
        assert_eq!((m.num_cells(), m.num_edges(), m.num_vertices()), (4, 12, 9));
        for c in 0..4 {
            assert_eq!(m.cell_diameter(c), 2f64.sqrt() / 2.0);
        }
    }

    #[test]
    fn triangle_1_counts() {
        let m = generate_mesh(MeshFamily::UniformTriangle, 1).unwrap();
        assert_eq!((m.num_cells(), m.num_edges(), m.num_vertices()), (2, 5, 4));
    }

    #[test]
    fn zero_subdivisions_is_config_error() {
        assert!(matches!(
            generate_mesh(MeshFamily::UniformQuad, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!("voronoi".parse::<MeshFamily>(), Err(Error::Config(_))));
    }

    #[test]
    fn family_names_round_trip() {
        for f in MeshFamily::ALL {
            assert_eq!(f.name().parse::<MeshFamily>().unwrap(), f);
        }
    }

    #[test]
    fn short_sequences_rejected() {
        let err = refine_sequence(MeshFamily::UniformQuad, 4, 1, &MeshOptions::default());
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
