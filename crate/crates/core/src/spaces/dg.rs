use std::sync::Arc;

use super::ElementFrame;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::invert_dense;
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;

/// Discontinuous piecewise polynomials of degree 0 or 1.
///
/// The local basis on triangle `t` is `1` for degree 0 and `1, xi, eta` for
/// degree 1, with `(xi, eta)` the scaled coordinates of the triangle's
/// [`ElementFrame`]. Because the frame is centered at the centroid, only the
/// constant function carries mass.
#[derive(Debug, Clone)]
pub struct DofMapDg {
    mesh: Arc<Mesh>,
    degree: usize,
    zero_mean: bool,
    frames: Vec<ElementFrame>,
    gram_inverse: Vec<Vec<Vec<f64>>>,
    quadrature: TriangleRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDg {
    pub degree: usize,
    pub values: Vec<f64>,
}

impl FieldDg {
    pub fn zeros(map: &DofMapDg) -> Self {
        Self {
            degree: map.degree,
            values: vec![0.0; map.n_dofs()],
        }
    }
}

impl DofMapDg {
    pub fn new(mesh: Arc<Mesh>, degree: usize, zero_mean: bool) -> Result<Self> {
        if degree > 1 {
            return Err(Error::InvalidArgument(format!(
                "discontinuous space of degree {degree} is not supported"
            )));
        }
        let quadrature = TriangleRule::seven_point();
        let n_local = degree * 2 + 1;
        let frames: Vec<_> = (0..mesh.num_triangles())
            .map(|t| ElementFrame::of_triangle(&mesh, t))
            .collect();
        let mut gram_inverse = Vec::with_capacity(mesh.num_triangles());
        for (t, frame) in frames.iter().enumerate() {
            let mut gram = vec![vec![0.0; n_local]; n_local];
            for (x, w) in quadrature.on_triangle(mesh.triangle_vertices(t), mesh.area(t)) {
                let q = local_basis(frame, x);
                for i in 0..n_local {
                    for j in 0..n_local {
                        gram[i][j] += w * q[i] * q[j];
                    }
                }
            }
            gram_inverse.push(invert_dense(&gram)?);
        }
        Ok(Self {
            mesh,
            degree,
            zero_mean,
            frames,
            gram_inverse,
            quadrature,
        })
    }

    /// Piecewise constants.
    pub fn p0(mesh: Arc<Mesh>) -> Self {
        Self::new(mesh, 0, false).expect("degree 0 is always supported")
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn zero_mean(&self) -> bool {
        self.zero_mean
    }

    pub fn n_local(&self) -> usize {
        self.degree * 2 + 1
    }

    pub fn n_dofs(&self) -> usize {
        self.n_local() * self.mesh.num_triangles()
    }

    #[inline]
    pub fn dof(&self, t: usize, j: usize) -> usize {
        t * self.n_local() + j
    }

    pub fn frame(&self, t: usize) -> &ElementFrame {
        &self.frames[t]
    }

    /// Values of the local basis at `x` (entries past `n_local` are unused).
    #[inline]
    pub fn basis(&self, t: usize, x: Point) -> [f64; 3] {
        local_basis(&self.frames[t], x)
    }

    pub fn eval(&self, field: &FieldDg, t: usize, x: Point) -> f64 {
        let q = self.basis(t, x);
        (0..self.n_local())
            .map(|j| q[j] * field.values[self.dof(t, j)])
            .sum()
    }

    /// `(integral of each basis function)`, the vector closing the pressure
    /// nullspace.
    pub fn mean_weights(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_dofs()];
        for t in 0..self.mesh.num_triangles() {
            m[self.dof(t, 0)] = self.mesh.area(t);
        }
        m
    }

    pub fn integral(&self, field: &FieldDg) -> f64 {
        self.mean_weights()
            .iter()
            .zip(&field.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Subtracts the domain average so the field integrates to zero.
    pub fn remove_mean(&self, field: &mut FieldDg) {
        let mean = self.integral(field) / self.mesh.total_area();
        for t in 0..self.mesh.num_triangles() {
            field.values[self.dof(t, 0)] -= mean;
        }
    }

    /// Local `L2` projection onto the space, computed with the degree-5 rule.
    pub fn l2_project(&self, f: impl Fn(Point) -> f64) -> FieldDg {
        self.l2_project_with(f, &self.quadrature)
    }

    /// Local `L2` projection with the load integrals computed by `quadrature`.
    pub fn l2_project_with(&self, f: impl Fn(Point) -> f64, quadrature: &TriangleRule) -> FieldDg {
        let n = self.n_local();
        let mut values = vec![0.0; self.n_dofs()];
        for t in 0..self.mesh.num_triangles() {
            let mut rhs = [0.0; 3];
            for (x, w) in quadrature.on_triangle(self.mesh.triangle_vertices(t), self.mesh.area(t)) {
                let q = self.basis(t, x);
                let fx = f(x);
                for j in 0..n {
                    rhs[j] += w * fx * q[j];
                }
            }
            let ginv = &self.gram_inverse[t];
            for i in 0..n {
                values[self.dof(t, i)] = (0..n).map(|j| ginv[i][j] * rhs[j]).sum();
            }
        }
        FieldDg {
            degree: self.degree,
            values,
        }
    }
}

#[inline]
fn local_basis(frame: &ElementFrame, x: Point) -> [f64; 3] {
    let l = frame.local(x);
    [1.0, l[0], l[1]]
}

/// Piecewise-constant `L2` projection (cell averages).
pub fn l2_project_p0(f: impl Fn(Point) -> f64, mesh: Arc<Mesh>) -> FieldDg {
    DofMapDg::p0(mesh).l2_project(f)
}
