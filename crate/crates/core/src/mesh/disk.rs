use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};

use super::{Mesh, MIN_TRIANGLE_AREA};
use crate::error::{Error, Result};
use crate::geometry::signed_area;

pub const DISK_CENTER: [f64; 2] = [0.5, 0.5];
pub const DISK_RADIUS: f64 = 0.5;

const MIN_ANGLE_DEGREES: f64 = 25.0;

/// Triangulates the polygon through `boundary_points` equally spaced points
/// on the circle of radius 0.5 about (0.5, 0.5).
///
/// The interior is filled by constrained Delaunay refinement with a 25 degree
/// angle target and an area bound matching the boundary spacing; boundary
/// edges are never split, so the mesh has exactly `boundary_points` boundary
/// vertices. Generation is deterministic.
pub fn generate_disk_mesh(boundary_points: usize) -> Result<Mesh> {
    if boundary_points < 8 {
        return Err(Error::InvalidArgument(format!(
            "disk mesh needs at least 8 boundary points, got {boundary_points}"
        )));
    }
    let m = boundary_points;
    let target = 2.0 * std::f64::consts::PI * DISK_RADIUS / m as f64;

    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut handles = Vec::with_capacity(m);
    for k in 0..m {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        let p = Point2::new(
            DISK_CENTER[0] + DISK_RADIUS * theta.cos(),
            DISK_CENTER[1] + DISK_RADIUS * theta.sin(),
        );
        let h = cdt
            .insert(p)
            .map_err(|e| Error::InvalidMesh(format!("boundary point {k}: {e:?}")))?;
        handles.push(h);
    }
    for k in 0..m {
        cdt.add_constraint(handles[k], handles[(k + 1) % m]);
    }

    let max_area = 3f64.sqrt() / 4.0 * target * target;
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(MIN_ANGLE_DEGREES))
        .with_max_allowed_area(max_area)
        .keep_constraint_edges()
        .exclude_outer_faces(true)
        .with_max_additional_vertices(200 * m * m);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::InvalidMesh(format!(
            "disk refinement with {m} boundary points did not complete"
        )));
    }

    let vertices: Vec<[f64; 2]> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            [p.x, p.y]
        })
        .collect();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if result.excluded_faces.contains(&face.fix()) {
            continue;
        }
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        let area = signed_area(vertices[a], vertices[b], vertices[c]);
        if area.abs() < MIN_TRIANGLE_AREA {
            return Err(Error::InvalidMesh(format!(
                "disk mesher produced a degenerate triangle (area {area:e})"
            )));
        }
        triangles.push(if area > 0.0 { [a, b, c] } else { [a, c, b] });
    }
    let mesh = Mesh::from_triangles(vertices, triangles)?;
    if mesh.boundary_edges().len() != m {
        return Err(Error::InvalidMesh(format!(
            "disk mesh has {} boundary edges, expected {m}",
            mesh.boundary_edges().len()
        )));
    }
    Ok(mesh)
}
