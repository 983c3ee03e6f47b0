//! Raviart-Thomas velocity spaces of index 0 and 1.
//!
//! Degrees of freedom are global functionals, so neighbouring triangles
//! agree on them without any sign bookkeeping:
//!
//! - per edge `e` (oriented low to high vertex index, unit normal `n_e`
//!   rotated clockwise from that direction): `integral_e (v . n_e) L_j ds`
//!   with `L_0 = 1` and, for index 1, `L_1 = 2s - 1` where `s in [0, 1]`
//!   runs from the low to the high vertex;
//! - for index 1, per triangle: the cell averages of `v_x` and `v_y`.
//!
//! On each triangle the local basis is obtained by inverting the matrix of
//! these functionals applied to the monomial basis of `P_k^2 + x P_k` written
//! in the scaled frame coordinates.

use std::sync::Arc;

use super::{ElementFrame, MixedOrder};
use crate::error::{Error, Result};
use crate::geometry::{dot, Point};
use crate::linalg::invert_dense;
use crate::mesh::Mesh;
use crate::quadrature::{integrate_segment, TriangleRule};

const MAX_LOCAL: usize = 8;

#[derive(Debug, Clone)]
pub struct DofMapRt {
    mesh: Arc<Mesh>,
    order: MixedOrder,
    frames: Vec<ElementFrame>,
    local_dofs: Vec<usize>,
    coefficients: Vec<f64>,
    divergence: Vec<[f64; 3]>,
    boundary_dofs: Vec<usize>,
}

/// Velocity field; coefficients are the functionals described in the module
/// docs (for index 0, signed edge fluxes).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRt {
    pub order: MixedOrder,
    pub values: Vec<f64>,
}

impl FieldRt {
    pub fn zeros(map: &DofMapRt) -> Self {
        Self {
            order: map.order,
            values: vec![0.0; map.n_dofs()],
        }
    }
}

fn n_local(order: MixedOrder) -> usize {
    match order {
        MixedOrder::Rt0 => 3,
        MixedOrder::Rt1 => 8,
    }
}

/// Vector monomials spanning the local space, in frame coordinates.
#[inline]
fn monomials(order: MixedOrder, l: Point) -> [Point; MAX_LOCAL] {
    let [x, y] = l;
    match order {
        MixedOrder::Rt0 => {
            let mut m = [[0.0; 2]; MAX_LOCAL];
            m[0] = [1.0, 0.0];
            m[1] = [0.0, 1.0];
            m[2] = [x, y];
            m
        }
        MixedOrder::Rt1 => [
            [1.0, 0.0],
            [x, 0.0],
            [y, 0.0],
            [0.0, 1.0],
            [0.0, x],
            [0.0, y],
            [x * x, x * y],
            [x * y, y * y],
        ],
    }
}

/// Divergence of each monomial in the `1, xi, eta` basis, before dividing by
/// the frame scale.
fn monomial_divergence(order: MixedOrder) -> [[f64; 3]; MAX_LOCAL] {
    let mut d = [[0.0; 3]; MAX_LOCAL];
    match order {
        MixedOrder::Rt0 => d[2] = [2.0, 0.0, 0.0],
        MixedOrder::Rt1 => {
            d[1] = [1.0, 0.0, 0.0];
            d[5] = [1.0, 0.0, 0.0];
            d[6] = [0.0, 3.0, 0.0];
            d[7] = [0.0, 0.0, 3.0];
        }
    }
    d
}

#[inline]
fn edge_weight(j: usize, s: f64) -> f64 {
    if j == 0 {
        1.0
    } else {
        2.0 * s - 1.0
    }
}

impl DofMapRt {
    pub fn new(mesh: Arc<Mesh>, order: MixedOrder) -> Result<Self> {
        let n = n_local(order);
        let per_edge = order.degree() + 1;
        let interior = 2 * order.degree();
        let n_edge_dofs = per_edge * mesh.num_edges();
        let quadrature = TriangleRule::seven_point();
        let mono_div = monomial_divergence(order);

        let mut frames = Vec::with_capacity(mesh.num_triangles());
        let mut local_dofs = Vec::with_capacity(n * mesh.num_triangles());
        let mut coefficients = Vec::with_capacity(n * n * mesh.num_triangles());
        let mut divergence = Vec::with_capacity(n * mesh.num_triangles());

        for t in 0..mesh.num_triangles() {
            let frame = ElementFrame::of_triangle(&mesh, t);
            let mut functionals = Vec::with_capacity(n);
            for r in &mesh.triangle_edges()[t] {
                let [a, b] = mesh.edges()[r.edge];
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                let normal = mesh.edge_normal(r.edge);
                for j in 0..per_edge {
                    let row: Vec<f64> = (0..n)
                        .map(|m| {
                            integrate_segment(pa, pb, |x, s| {
                                dot(monomials(order, frame.local(x))[m], normal) * edge_weight(j, s)
                            })
                        })
                        .collect();
                    functionals.push(row);
                    local_dofs.push(r.edge * per_edge + j);
                }
            }
            for comp in 0..interior {
                let mut row = vec![0.0; n];
                for (x, w) in quadrature.on_triangle(mesh.triangle_vertices(t), mesh.area(t)) {
                    let mono = monomials(order, frame.local(x));
                    for (m, slot) in row.iter_mut().enumerate() {
                        *slot += w * mono[m][comp] / mesh.area(t);
                    }
                }
                functionals.push(row);
                local_dofs.push(n_edge_dofs + t * interior + comp);
            }
            let inverse = invert_dense(&functionals).map_err(|_| {
                Error::InvalidMesh(format!("Raviart-Thomas dofs are not unisolvent on triangle {t}"))
            })?;
            for row in &inverse {
                coefficients.extend_from_slice(row);
            }
            for d in 0..n {
                let mut div = [0.0; 3];
                for (m, md) in mono_div.iter().enumerate().take(n) {
                    for k in 0..3 {
                        div[k] += inverse[m][d] * md[k] / frame.scale;
                    }
                }
                divergence.push(div);
            }
            frames.push(frame);
        }

        let boundary_dofs = mesh
            .boundary_edges()
            .iter()
            .flat_map(|&e| (0..per_edge).map(move |j| e * per_edge + j))
            .collect();

        Ok(Self {
            mesh,
            order,
            frames,
            local_dofs,
            coefficients,
            divergence,
            boundary_dofs,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn order(&self) -> MixedOrder {
        self.order
    }

    pub fn n_local(&self) -> usize {
        n_local(self.order)
    }

    pub fn dofs_per_edge(&self) -> usize {
        self.order.degree() + 1
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs_per_edge() * self.mesh.num_edges()
            + 2 * self.order.degree() * self.mesh.num_triangles()
    }

    /// Global dofs of triangle `t` in local order.
    pub fn local_dofs(&self, t: usize) -> &[usize] {
        let n = self.n_local();
        &self.local_dofs[t * n..(t + 1) * n]
    }

    /// Dofs living on boundary edges.
    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    /// Global dof of moment `j` on edge `e`.
    pub fn edge_dof(&self, e: usize, j: usize) -> usize {
        e * self.dofs_per_edge() + j
    }

    pub fn frame(&self, t: usize) -> &ElementFrame {
        &self.frames[t]
    }

    /// Values of all local basis functions of triangle `t` at `x`.
    pub fn basis(&self, t: usize, x: Point) -> [Point; MAX_LOCAL] {
        let n = self.n_local();
        let mono = monomials(self.order, self.frames[t].local(x));
        let c = &self.coefficients[t * n * n..(t + 1) * n * n];
        let mut out = [[0.0; 2]; MAX_LOCAL];
        for (m, mv) in mono.iter().enumerate().take(n) {
            let row = &c[m * n..(m + 1) * n];
            for (d, o) in out.iter_mut().enumerate().take(n) {
                o[0] += row[d] * mv[0];
                o[1] += row[d] * mv[1];
            }
        }
        out
    }

    /// Divergence of each local basis function in the `1, xi, eta` basis of
    /// the triangle frame.
    pub fn basis_divergence(&self, t: usize) -> &[[f64; 3]] {
        let n = self.n_local();
        &self.divergence[t * n..(t + 1) * n]
    }

    pub fn eval(&self, field: &FieldRt, t: usize, x: Point) -> Point {
        let basis = self.basis(t, x);
        let mut out = [0.0; 2];
        for (d, &g) in self.local_dofs(t).iter().enumerate() {
            out[0] += field.values[g] * basis[d][0];
            out[1] += field.values[g] * basis[d][1];
        }
        out
    }

    /// Divergence of `field` on triangle `t`, in the `1, xi, eta` basis.
    pub fn divergence(&self, field: &FieldRt, t: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (d, &g) in self.local_dofs(t).iter().enumerate() {
            let div = self.basis_divergence(t)[d];
            for k in 0..3 {
                out[k] += field.values[g] * div[k];
            }
        }
        out
    }

    /// Cell average of the divergence of `field` on triangle `t`.
    pub fn divergence_mean(&self, field: &FieldRt, t: usize) -> f64 {
        // the frame is centered at the centroid, so xi and eta average to zero
        self.divergence(field, t)[0]
    }

    /// Values of the boundary dofs for a prescribed outward normal flux
    /// `g(x, n_out)`, returned in the order of [`Self::boundary_dofs`].
    pub fn boundary_values(&self, g: impl Fn(Point, Point) -> f64) -> Vec<f64> {
        let mesh = &self.mesh;
        let mut out = Vec::with_capacity(self.boundary_dofs.len());
        for &e in mesh.boundary_edges() {
            let [a, b] = mesh.edges()[e];
            let n_out = mesh.outward_normal(e);
            let orientation = dot(n_out, mesh.edge_normal(e));
            for j in 0..self.dofs_per_edge() {
                out.push(
                    orientation
                        * integrate_segment(mesh.vertices()[a], mesh.vertices()[b], |x, s| {
                            g(x, n_out) * edge_weight(j, s)
                        }),
                );
            }
        }
        out
    }
}

/// Canonical Raviart-Thomas interpolant. Edge moments use the Gauss edge
/// rule, cell averages the degree-5 triangle rule.
pub fn interpolate_rt(w: impl Fn(Point) -> Point, map: &DofMapRt) -> Result<FieldRt> {
    let mesh = map.mesh();
    let per_edge = map.dofs_per_edge();
    let mut values = vec![0.0; map.n_dofs()];
    for e in 0..mesh.num_edges() {
        let [a, b] = mesh.edges()[e];
        let normal = mesh.edge_normal(e);
        for j in 0..per_edge {
            values[e * per_edge + j] = integrate_segment(mesh.vertices()[a], mesh.vertices()[b], |x, s| {
                dot(w(x), normal) * edge_weight(j, s)
            });
        }
    }
    if map.order().degree() > 0 {
        let quadrature = TriangleRule::seven_point();
        let offset = per_edge * mesh.num_edges();
        for t in 0..mesh.num_triangles() {
            let mut avg = [0.0; 2];
            for (x, wq) in quadrature.on_triangle(mesh.triangle_vertices(t), mesh.area(t)) {
                let v = w(x);
                avg[0] += wq * v[0] / mesh.area(t);
                avg[1] += wq * v[1] / mesh.area(t);
            }
            values[offset + 2 * t] = avg[0];
            values[offset + 2 * t + 1] = avg[1];
        }
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: format!("velocity dof {i}"),
            value: *v,
        });
    }
    Ok(FieldRt {
        order: map.order(),
        values,
    })
}

/// Divergence-preserving projection onto the velocity space.
///
/// The canonical interpolant already satisfies
/// `(div(w - Q w), chi) = 0` for every `chi` in the pressure space.
pub fn rt_project(w: impl Fn(Point) -> Point, map: &DofMapRt) -> Result<FieldRt> {
    interpolate_rt(w, map)
}
