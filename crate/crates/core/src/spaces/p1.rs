use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{mat_vec, dot, Point, Tensor2};
use crate::linalg::{solve, LinearSystem, SolverSettings, SparseMatrix, TripletBuilder};
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;

/// Continuous piecewise linears; dof `i` is vertex `i`.
#[derive(Debug, Clone)]
pub struct DofMapP1 {
    mesh: Arc<Mesh>,
    gradients: Vec<[Point; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldP1 {
    pub values: Vec<f64>,
}

impl FieldP1 {
    pub fn zeros(map: &DofMapP1) -> Self {
        Self {
            values: vec![0.0; map.n_dofs()],
        }
    }

    pub fn constant(map: &DofMapP1, value: f64) -> Self {
        Self {
            values: vec![value; map.n_dofs()],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl DofMapP1 {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        let gradients = (0..mesh.num_triangles())
            .map(|t| {
                let v = mesh.triangle_vertices(t);
                let two_area = 2.0 * mesh.area(t);
                let mut g = [[0.0; 2]; 3];
                for (i, gi) in g.iter_mut().enumerate() {
                    let a = v[(i + 1) % 3];
                    let b = v[(i + 2) % 3];
                    *gi = [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area];
                }
                g
            })
            .collect();
        Self { mesh, gradients }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.num_vertices()
    }

    /// Gradients of the three barycentric basis functions of triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> &[Point; 3] {
        &self.gradients[t]
    }

    pub fn eval_barycentric(&self, field: &FieldP1, t: usize, l: &[f64; 3]) -> f64 {
        let tri = self.mesh.triangles()[t];
        (0..3).map(|i| l[i] * field.values[tri[i]]).sum()
    }

    pub fn eval(&self, field: &FieldP1, t: usize, x: Point) -> f64 {
        let l = crate::mesh::barycentric_coordinates(self.mesh.triangle_vertices(t), x);
        self.eval_barycentric(field, t, &l)
    }

    pub fn gradient(&self, field: &FieldP1, t: usize) -> Point {
        let tri = self.mesh.triangles()[t];
        let g = &self.gradients[t];
        let mut out = [0.0; 2];
        for i in 0..3 {
            out[0] += field.values[tri[i]] * g[i][0];
            out[1] += field.values[tri[i]] * g[i][1];
        }
        out
    }

    /// `integral of phi_i` for each basis function.
    pub fn mean_weights(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_dofs()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            for &v in tri {
                m[v] += self.mesh.area(t) / 3.0;
            }
        }
        m
    }

    pub fn integral(&self, field: &FieldP1) -> f64 {
        self.mean_weights()
            .iter()
            .zip(&field.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Consistent mass matrix (exact for P1).
    pub fn mass_matrix(&self) -> SparseMatrix {
        let mut b = TripletBuilder::with_capacity(self.n_dofs(), self.n_dofs(), 9 * self.mesh.num_triangles());
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let a = self.mesh.area(t);
            for i in 0..3 {
                for j in 0..3 {
                    b.add(tri[i], tri[j], if i == j { a / 6.0 } else { a / 12.0 });
                }
            }
        }
        b.build().expect("finite mass entries")
    }

    /// `(K grad phi_j, grad phi_i)` with a tensor coefficient evaluated at
    /// the quadrature points of each triangle.
    pub fn stiffness_matrix(
        &self,
        tensor: &(dyn Fn(usize, Point) -> Tensor2 + Sync),
        quadrature: &TriangleRule,
    ) -> Result<SparseMatrix> {
        let mut b = TripletBuilder::with_capacity(self.n_dofs(), self.n_dofs(), 9 * self.mesh.num_triangles());
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let mut avg = [[0.0; 2]; 2];
            for (x, w) in quadrature.on_triangle(self.mesh.triangle_vertices(t), self.mesh.area(t)) {
                let k = tensor(t, x);
                for r in 0..2 {
                    for c in 0..2 {
                        avg[r][c] += w * k[r][c];
                    }
                }
            }
            let g = &self.gradients[t];
            for i in 0..3 {
                for j in 0..3 {
                    b.add(tri[i], tri[j], dot(g[i], mat_vec(&avg, g[j])));
                }
            }
        }
        b.build()
    }
}

/// Nodal interpolant.
pub fn interpolate_p1(f: impl Fn(Point) -> f64, map: &DofMapP1) -> Result<FieldP1> {
    let mut values = Vec::with_capacity(map.n_dofs());
    for (i, &x) in map.mesh().vertices().iter().enumerate() {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                location: format!("vertex {i} ({}, {})", x[0], x[1]),
                value: v,
            });
        }
        values.push(v);
    }
    Ok(FieldP1 { values })
}

/// Weighted elliptic projection: finds `w` in P1 with
/// `(K grad(v - w), grad phi) = 0` for all P1 `phi` and `integral(v - w) = 0`.
///
/// The singular stiffness matrix is closed with one Lagrange multiplier for
/// the mean condition. `grad_v` must be the exact gradient of `v`.
pub fn elliptic_project_p1(
    v: impl Fn(Point) -> f64,
    grad_v: impl Fn(Point) -> Point,
    tensor: &(dyn Fn(usize, Point) -> Tensor2 + Sync),
    map: &DofMapP1,
    quadrature: &TriangleRule,
    settings: &SolverSettings,
) -> Result<FieldP1> {
    let mesh = map.mesh();
    let n = map.n_dofs();
    let stiffness = map.stiffness_matrix(tensor, quadrature)?;
    let weights = map.mean_weights();

    let mut rhs = vec![0.0; n + 1];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = map.basis_gradients(t);
        for (x, w) in quadrature.on_triangle(mesh.triangle_vertices(t), mesh.area(t)) {
            let flux = mat_vec(&tensor(t, x), grad_v(x));
            let vx = v(x);
            for i in 0..3 {
                rhs[tri[i]] += w * dot(flux, g[i]);
            }
            rhs[n] += w * vx;
        }
    }

    let mut entries: Vec<_> = stiffness.iter().collect();
    for (i, &m) in weights.iter().enumerate() {
        entries.push((i, n, m));
        entries.push((n, i, m));
    }
    let system = SparseMatrix::from_triplets(n + 1, n + 1, &entries)?;
    let direct = SolverSettings {
        kind: crate::linalg::SolverKind::Direct,
        ..*settings
    };
    let x = solve(&LinearSystem::new(&system, &rhs).symmetric(true).with_settings(direct))?;
    Ok(FieldP1 {
        values: x[..n].to_vec(),
    })
}
