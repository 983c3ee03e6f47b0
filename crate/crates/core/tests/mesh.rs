use std::collections::HashSet;

use mixfem::geometry::cross;
use mixfem::mesh::{generate_disk_mesh, generate_unit_square_mesh, read_mesh, write_mesh, Mesh, DISK_CENTER, DISK_RADIUS};
use proptest::prelude::*;

fn check_invariants(mesh: &Mesh) -> Result<(), TestCaseError> {
    let v = mesh.num_vertices() as i64;
    let e = mesh.num_edges() as i64;
    let t = mesh.num_triangles() as i64;
    prop_assert_eq!(v - e + t, 1);
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = mesh.triangle_vertices(k);
        let signed = 0.5 * cross([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
        prop_assert!(signed > 0.0, "triangle {} is not counter-clockwise", k);
        prop_assert!((signed - mesh.area(k)).abs() <= 1e-15);
        let unique: HashSet<_> = tri.iter().collect();
        prop_assert_eq!(unique.len(), 3);
    }
    let mut boundary = 0;
    for (k, &(_, other)) in mesh.edge_triangles().iter().enumerate() {
        prop_assert_eq!(other.is_none(), mesh.is_boundary_edge(k));
        boundary += usize::from(other.is_none());
    }
    prop_assert_eq!(boundary, mesh.boundary_edges().len());
    // every interior edge is shared by exactly two triangles, each edge of a
    // triangle appears exactly once
    let mut uses = vec![0usize; mesh.num_edges()];
    for edges in mesh.triangle_edges() {
        for r in edges {
            uses[r.edge] += 1;
        }
    }
    for (k, &n) in uses.iter().enumerate() {
        prop_assert_eq!(n, if mesh.is_boundary_edge(k) { 1 } else { 2 });
    }
    Ok(())
}

#[test]
fn square_counts() {
    let mesh = generate_unit_square_mesh(8).unwrap();
    assert_eq!((mesh.num_vertices(), mesh.num_triangles(), mesh.num_edges()), (81, 128, 208));
    assert!((mesh.h_max() - 2f64.sqrt() / 8.0).abs() <= 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn square_meshes_are_conforming(m in 1usize..40) {
        let mesh = generate_unit_square_mesh(m).unwrap();
        prop_assert_eq!(mesh.num_vertices(), (m + 1) * (m + 1));
        prop_assert_eq!(mesh.num_triangles(), 2 * m * m);
        prop_assert!((mesh.total_area() - 1.0).abs() <= 1e-12);
        check_invariants(&mesh)?;
    }

    #[test]
    fn disk_meshes_are_conforming(m in 8usize..96) {
        let mesh = generate_disk_mesh(m).unwrap();
        check_invariants(&mesh)?;
        prop_assert_eq!(mesh.boundary_edges().len(), m);
        let polygon = 0.5 * m as f64 * DISK_RADIUS * DISK_RADIUS * (2.0 * std::f64::consts::PI / m as f64).sin();
        prop_assert!((mesh.total_area() - polygon).abs() <= 1e-12);
        for &e in mesh.boundary_edges() {
            for &v in &mesh.edges()[e] {
                let p = mesh.vertices()[v];
                let r = (p[0] - DISK_CENTER[0]).hypot(p[1] - DISK_CENTER[1]);
                prop_assert!((r - DISK_RADIUS).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn meshes_survive_a_file_round_trip(m in 1usize..12) {
        let mesh = generate_unit_square_mesh(m).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.triangles(), mesh.triangles());
    }
}
