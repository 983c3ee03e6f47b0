use super::Mesh;
use crate::error::{Error, Result};

/// Direction of the diagonal that splits every grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// Top-left to bottom-right.
    #[default]
    Falling,
    /// Bottom-left to top-right.
    Rising,
}

/// Uniform triangulation of the unit square with `m + 1` nodes per side,
/// every cell split along the falling diagonal.
pub fn generate_unit_square_mesh(m: usize) -> Result<Mesh> {
    generate_unit_square_mesh_with(m, Diagonal::Falling)
}

pub fn generate_unit_square_mesh_with(m: usize, diagonal: Diagonal) -> Result<Mesh> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "unit-square mesh needs at least one subdivision".into(),
        ));
    }
    let n = m + 1;
    let h = m as f64;
    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            vertices.push([i as f64 / h, j as f64 / h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            let v00 = j * n + i;
            let v10 = v00 + 1;
            let v01 = v00 + n;
            let v11 = v01 + 1;
            match diagonal {
                Diagonal::Falling => {
                    triangles.push([v00, v10, v01]);
                    triangles.push([v10, v11, v01]);
                }
                Diagonal::Rising => {
                    triangles.push([v00, v10, v11]);
                    triangles.push([v00, v11, v01]);
                }
            }
        }
    }
    Mesh::from_triangles(vertices, triangles)
}
