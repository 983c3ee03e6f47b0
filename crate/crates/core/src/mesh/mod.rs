//! Conforming triangulations with globally oriented edges.

mod disk;
mod io;
mod locate;
mod square;

use std::collections::HashMap;

pub use disk::{generate_disk_mesh, DISK_CENTER, DISK_RADIUS};
pub use io::{load_mesh, read_mesh, save_mesh, write_mesh};
pub use locate::{barycentric_coordinates, PointLocator};
pub use square::{generate_unit_square_mesh, generate_unit_square_mesh_with, Diagonal};

use crate::error::{Error, Result};
use crate::geometry::{norm, signed_area, sub, Point};

/// Triangles with area below this are treated as degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// Reference from a triangle to one of its edges.
///
/// `sign` is `+1` when the global edge orientation (low to high vertex index)
/// agrees with the counterclockwise traversal of the triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRef {
    pub edge: usize,
    pub sign: f64,
}

/// Immutable 2D triangulation.
///
/// Local edge `i` of a triangle is the edge opposite its local vertex `i`,
/// traversed from local vertex `i + 1` to `i + 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[EdgeRef; 3]>,
    edge_triangles: Vec<(usize, Option<usize>)>,
    boundary_edges: Vec<usize>,
    areas: Vec<f64>,
    h_max: f64,
}

impl Mesh {
    /// Builds the edge structure and checks every mesh invariant.
    ///
    /// Triangles must be listed counterclockwise.
    pub fn from_triangles(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidMesh("no vertices".into()));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
            }
        }

        let nv = vertices.len();
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references vertex {bad}, but only {nv} vertices exist"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area < MIN_TRIANGLE_AREA {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive or degenerate signed area {area:e}"
                )));
            }
            areas.push(area);
        }

        let mut index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<(usize, Option<usize>)> = Vec::new();
        let mut edge_signs: Vec<f64> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut refs = [EdgeRef { edge: 0, sign: 0.0 }; 3];
            for (i, slot) in refs.iter_mut().enumerate() {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = [a.min(b), a.max(b)];
                let sign = if a < b { 1.0 } else { -1.0 };
                let e = match index.get(&key) {
                    Some(&e) => {
                        let entry = &mut edge_triangles[e];
                        if entry.1.is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({}, {}) is shared by more than two triangles (triangle {t})",
                                key[0], key[1]
                            )));
                        }
                        if edge_signs[e] == sign {
                            return Err(Error::InvalidMesh(format!(
                                "triangle {t} is inconsistently oriented with triangle {} across edge ({}, {})",
                                entry.0, key[0], key[1]
                            )));
                        }
                        entry.1 = Some(t);
                        e
                    }
                    None => {
                        let e = edges.len();
                        edges.push(key);
                        edge_triangles.push((t, None));
                        edge_signs.push(sign);
                        index.insert(key, e);
                        e
                    }
                };
                *slot = EdgeRef { edge: e, sign };
            }
            triangle_edges.push(refs);
        }

        let boundary_edges: Vec<usize> = edge_triangles
            .iter()
            .enumerate()
            .filter(|(_, (_, second))| second.is_none())
            .map(|(e, _)| e)
            .collect();

        let h_max = edges
            .iter()
            .map(|&[a, b]| norm(sub(vertices[a], vertices[b])))
            .fold(0.0, f64::max);

        let mesh = Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            edge_triangles,
            boundary_edges,
            areas,
            h_max,
        };
        mesh.check_topology()?;
        Ok(mesh)
    }

    fn check_topology(&self) -> Result<()> {
        let nv = self.vertices.len();
        let mut used = vec![false; nv];
        for tri in &self.triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no triangle")));
        }
        let mut boundary_degree = vec![0usize; nv];
        for &e in &self.boundary_edges {
            for &v in &self.edges[e] {
                boundary_degree[v] += 1;
            }
        }
        if let Some(v) = boundary_degree.iter().position(|&d| d != 0 && d != 2) {
            return Err(Error::InvalidMesh(format!(
                "boundary is not a simple closed curve at vertex {v}"
            )));
        }
        let euler =
            nv as i64 - self.edges.len() as i64 + self.triangles.len() as i64;
        if euler != 1 {
            return Err(Error::InvalidMesh(format!(
                "Euler characteristic V - E + T = {euler}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[EdgeRef; 3]] {
        &self.triangle_edges
    }

    /// The one or two triangles adjacent to each edge.
    pub fn edge_triangles(&self) -> &[(usize, Option<usize>)] {
        &self.edge_triangles
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_triangles[e].1.is_none()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Longest edge length.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_vertices(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Longest edge of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        self.triangle_edges[t]
            .iter()
            .map(|r| self.edge_length(r.edge))
            .fold(0.0, f64::max)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        norm(sub(self.vertices[a], self.vertices[b]))
    }

    /// Unit normal of edge `e` obtained by rotating its global direction
    /// clockwise. It is the outward normal of the adjacent triangle whose
    /// local sign is `+1`.
    pub fn edge_normal(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let d = sub(self.vertices[b], self.vertices[a]);
        let l = norm(d);
        [d[1] / l, -d[0] / l]
    }

    /// Outward unit normal of a boundary edge.
    pub fn outward_normal(&self, e: usize) -> Point {
        let (t, _) = self.edge_triangles[e];
        let sign = self.triangle_edges[t]
            .iter()
            .find(|r| r.edge == e)
            .map(|r| r.sign)
            .unwrap_or(1.0);
        let n = self.edge_normal(e);
        [sign * n[0], sign * n[1]]
    }

    /// Minimum interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        (0..self.num_triangles())
            .flat_map(|t| {
                let v = self.triangle_vertices(t);
                (0..3).map(move |i| {
                    let a = sub(v[(i + 1) % 3], v[i]);
                    let b = sub(v[(i + 2) % 3], v[i]);
                    (crate::geometry::dot(a, b) / (norm(a) * norm(b)))
                        .clamp(-1.0, 1.0)
                        .acos()
                        .to_degrees()
                })
            })
            .fold(f64::INFINITY, f64::min)
    }
}
