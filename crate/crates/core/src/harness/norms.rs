//! `L2` errors of discrete fields against closed-form functions.

use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;
use crate::spaces::{DofMapDg, DofMapP1, DofMapRt, FieldDg, FieldP1, FieldRt};

/// `sqrt(sum_T integral_T |e(t, x)|^2)` with `e` vector valued.
pub fn l2_norm_with(mesh: &Mesh, rule: &TriangleRule, e: impl Fn(usize, Point) -> Point) -> f64 {
    let mut sum = 0.0;
    for t in 0..mesh.num_triangles() {
        for (x, w) in rule.on_triangle(mesh.triangle_vertices(t), mesh.area(t)) {
            let v = e(t, x);
            sum += w * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    sum.sqrt()
}

/// `integral f` with the given rule.
pub fn integrate(mesh: &Mesh, rule: &TriangleRule, f: impl Fn(Point) -> f64) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| {
            rule.on_triangle(mesh.triangle_vertices(t), mesh.area(t))
                .iter()
                .map(|&(x, w)| w * f(x))
                .sum::<f64>()
        })
        .sum()
}

pub fn l2_error_p1(field: &FieldP1, map: &DofMapP1, exact: impl Fn(Point) -> f64, rule: &TriangleRule) -> f64 {
    l2_norm_with(map.mesh(), rule, |t, x| [map.eval(field, t, x) - exact(x), 0.0])
}

pub fn l2_error_rt(field: &FieldRt, map: &DofMapRt, exact: impl Fn(Point) -> Point, rule: &TriangleRule) -> f64 {
    l2_norm_with(map.mesh(), rule, |t, x| {
        let u = map.eval(field, t, x);
        let e = exact(x);
        [u[0] - e[0], u[1] - e[1]]
    })
}

/// Error of a discontinuous field. For a zero-mean pressure space the exact
/// function is shifted to zero mean first, since the discrete pressure is
/// only defined up to that normalization.
pub fn l2_error_dg(field: &FieldDg, map: &DofMapDg, exact: impl Fn(Point) -> f64, rule: &TriangleRule) -> f64 {
    let mesh = map.mesh();
    let shift = if map.zero_mean() {
        integrate(mesh, rule, &exact) / mesh.total_area()
    } else {
        0.0
    };
    l2_norm_with(mesh, rule, |t, x| [map.eval(field, t, x) - (exact(x) - shift), 0.0])
}
