//! Plain-text mesh files.
//!
//! ```text
//! #vertices 4
//! 0.0000000000000000e0 0.0000000000000000e0
//! ...
//! #triangles 2
//! 0 1 3
//! ...
//! #boundary 4
//! 0 1
//! ...
//! ```
//!
//! Coordinates carry 17 significant digits so a save/load round trip is
//! bit-exact. Boundary entries are vertex pairs (low index first) and must
//! match the boundary recovered from the triangles.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "#vertices {}", mesh.num_vertices())?;
    for v in mesh.vertices() {
        writeln!(out, "{:.16e} {:.16e}", v[0], v[1])?;
    }
    writeln!(out, "#triangles {}", mesh.num_triangles())?;
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "#boundary {}", mesh.boundary_edges().len())?;
    for &e in mesh.boundary_edges() {
        let [a, b] = mesh.edges()[e];
        writeln!(out, "{a} {b}")?;
    }
    Ok(())
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_mesh(mesh, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    read_mesh(BufReader::new(File::open(path)?))
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Vertices,
    Triangles,
    Boundary,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_fields<T: std::str::FromStr, const N: usize>(text: &str, line: usize) -> Result<[T; N]> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != N {
        return Err(parse_error(
            line,
            format!("expected {N} fields, found {}", parts.len()),
        ));
    }
    let mut parsed = Vec::with_capacity(N);
    for p in parts {
        parsed.push(
            p.parse::<T>()
                .map_err(|_| parse_error(line, format!("cannot parse `{p}`")))?,
        );
    }
    parsed
        .try_into()
        .map_err(|_| parse_error(line, "field count mismatch"))
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut section = Section::None;
    let mut vertices = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut triangle_lines = Vec::new();
    let mut boundary: Vec<([usize; 2], usize)> = Vec::new();
    let mut declared = [None::<(usize, usize)>; 3];

    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(header) = text.strip_prefix('#') {
            let mut words = header.split_whitespace();
            let name = words.next().unwrap_or("");
            let (next, slot) = match name {
                "vertices" => (Section::Vertices, 0),
                "triangles" => (Section::Triangles, 1),
                "boundary" => (Section::Boundary, 2),
                other => return Err(parse_error(lineno, format!("unknown section `#{other}`"))),
            };
            if let Some(count) = words.next() {
                let count = count
                    .parse::<usize>()
                    .map_err(|_| parse_error(lineno, format!("bad count `{count}`")))?;
                declared[slot] = Some((count, lineno));
            }
            section = next;
            continue;
        }
        match section {
            Section::None => return Err(parse_error(lineno, "data before any section header")),
            Section::Vertices => {
                let v: [f64; 2] = parse_fields(text, lineno)?;
                vertices.push(v);
            }
            Section::Triangles => {
                let t: [usize; 3] = parse_fields(text, lineno)?;
                triangles.push(t);
                triangle_lines.push(lineno);
            }
            Section::Boundary => {
                let b: [usize; 2] = parse_fields(text, lineno)?;
                boundary.push((b, lineno));
            }
        }
    }

    if vertices.is_empty() {
        return Err(Error::InvalidMesh("no vertices".into()));
    }
    let actual = [vertices.len(), triangles.len(), boundary.len()];
    for (slot, name) in ["vertices", "triangles", "boundary"].iter().enumerate() {
        if let Some((count, lineno)) = declared[slot] {
            if count != actual[slot] {
                return Err(parse_error(
                    lineno,
                    format!("section #{name} declares {count} entries but has {}", actual[slot]),
                ));
            }
        }
    }
    for (t, tri) in triangles.iter().enumerate() {
        if let Some(&bad) = tri.iter().find(|&&v| v >= vertices.len()) {
            return Err(parse_error(
                triangle_lines[t],
                format!(
                    "triangle {t} references vertex {bad}, but only {} vertices exist",
                    vertices.len()
                ),
            ));
        }
    }

    let mesh = Mesh::from_triangles(vertices, triangles)?;

    if !boundary.is_empty() {
        let expected: HashSet<[usize; 2]> = mesh
            .boundary_edges()
            .iter()
            .map(|&e| mesh.edges()[e])
            .collect();
        for (k, ([a, b], lineno)) in boundary.iter().enumerate() {
            if !expected.contains(&[*a.min(b), *a.max(b)]) {
                return Err(parse_error(
                    *lineno,
                    format!("boundary entry {k} ({a}, {b}) is not a boundary edge of the triangulation"),
                ));
            }
        }
        if boundary.len() != expected.len() {
            return Err(Error::InvalidMesh(format!(
                "boundary section lists {} edges, triangulation has {}",
                boundary.len(),
                expected.len()
            )));
        }
    }
    Ok(mesh)
}
