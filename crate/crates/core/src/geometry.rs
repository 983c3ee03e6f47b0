//! Small fixed-size vector helpers shared by the whole crate.

/// A point or vector in the plane.
pub type Point = [f64; 2];

/// A 2x2 tensor stored row-major.
pub type Tensor2 = [[f64; 2]; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Signed area of the triangle `(a, b, c)`; positive for counterclockwise order.
#[inline]
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * cross(sub(b, a), sub(c, a))
}

#[inline]
pub fn mat_vec(m: &Tensor2, v: Point) -> Point {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub const IDENTITY: Tensor2 = [[1.0, 0.0], [0.0, 1.0]];

/// Eigenvalues of a symmetric 2x2 tensor, ascending.
pub fn symmetric_eigenvalues(m: &Tensor2) -> [f64; 2] {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let radius = half_diff.hypot(0.5 * (m[0][1] + m[1][0]));
    [mean - radius, mean + radius]
}
