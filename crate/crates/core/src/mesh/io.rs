//! Line-oriented mesh text format.
//!
//! ```text
//! wgmesh 2d v1
//! vertices N
//! x y            (N lines)
//! cells M
//! v0 v1 v2 ...   (M lines, counter-clockwise, 0-based)
//! ```
//!
//! Coordinates are written with the shortest representation that parses
//! back to the same `f64`, so a save/load round trip is bit-exact. Edges and
//! normals are derived on load and never stored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::geometry::Point;

pub const MESH_HEADER: &str = "wgmesh 2d v1";

pub fn write_mesh(mesh: &PolygonalMesh) -> String {
    let mut s = String::new();
    writeln!(s, "{MESH_HEADER}").unwrap();
    writeln!(s, "vertices {}", mesh.num_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:?} {:?}", p.x, p.y).unwrap();
    }
    writeln!(s, "cells {}", mesh.num_cells()).unwrap();
    for cell in mesh.cells() {
        let line: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
        writeln!(s, "{}", line.join(" ")).unwrap();
    }
    s
}

pub fn save_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_mesh(mesh)).map_err(|e| Error::io(path, e))
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

/// Parses the text format; topological problems surface as validation errors.
pub fn parse_mesh(text: &str) -> Result<PolygonalMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut next = |what: &str| {
        lines.next().ok_or_else(|| Error::Parse {
            line: text.lines().count() + 1,
            message: format!("unexpected end of file, expected {what}"),
        })
    };

    let (line, header) = next("header")?;
    if header != MESH_HEADER {
        return Err(Error::Parse {
            line,
            message: format!("expected header `{MESH_HEADER}`, found `{header}`"),
        });
    }

    let n_vertices = parse_count(next("vertex count")?, "vertices")?;
    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (line, l) = next("vertex coordinates")?;
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected `x y`, found {} fields", fields.len()),
            });
        }
        let x = parse_float(fields[0], line)?;
        let y = parse_float(fields[1], line)?;
        vertices.push(Point::new(x, y));
    }

    let n_cells = parse_count(next("cell count")?, "cells")?;
    let mut cells = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        let (line, l) = next("cell vertex list")?;
        let ids = l
            .split_whitespace()
            .map(|f| {
                f.parse::<usize>().map_err(|_| Error::Parse {
                    line,
                    message: format!("invalid vertex index `{f}`"),
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        cells.push(ids);
    }
    if let Some((line, l)) = lines.next() {
        return Err(Error::Parse {
            line,
            message: format!("trailing content `{l}`"),
        });
    }
    PolygonalMesh::new(vertices, cells)
}

fn parse_count((line, l): (usize, &str), keyword: &str) -> Result<usize> {
    let mut it = l.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(k), Some(n), None) if k == keyword => n.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid {keyword} count `{n}`"),
        }),
        _ => Err(Error::Parse {
            line,
            message: format!("expected `{keyword} <count>`, found `{l}`"),
        }),
    }
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid coordinate `{s}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite coordinate `{s}`"),
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TRIANGLES: &str = "wgmesh 2d v1\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 2\n0 1 2\n0 2 3\n";

    #[test]
    fn parses_minimal_file() {
        let m = parse_mesh(TWO_TRIANGLES).unwrap();
        assert_eq!(m.num_cells(), 2);
        assert_eq!(m.num_edges(), 5);
    }

    #[test]
    fn bad_coordinate_reports_line() {
        let text = TWO_TRIANGLES.replace("1 1\n", "1 one\n");
        match parse_mesh(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_header_rejected() {
        let text = TWO_TRIANGLES.replace("v1", "v2");
        assert!(matches!(parse_mesh(&text), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn truncated_file_rejected() {
        let text = "wgmesh 2d v1\nvertices 4\n0 0\n";
        assert!(matches!(parse_mesh(text), Err(Error::Parse { .. })));
    }
}
