//! Quadrature rules on triangles and edges.
//!
//! Triangle rules are stored in barycentric coordinates with weights that sum
//! to one, so a physical integral is `area * sum(w_q * f(x_q))`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    degree: usize,
    barycentric: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl TriangleRule {
    /// Rule of the requested polynomial degree. Degrees 1, 2 and 5 are available.
    pub fn with_degree(degree: usize) -> Result<Self> {
        match degree {
            1 => Ok(Self::centroid()),
            2 => Ok(Self::three_point()),
            5 => Ok(Self::seven_point()),
            _ => Err(Error::InvalidArgument(format!(
                "no triangle rule of degree {degree} (available: 1, 2, 5)"
            ))),
        }
    }

    pub fn centroid() -> Self {
        Self {
            degree: 1,
            barycentric: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
        }
    }

    pub fn three_point() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Self {
            degree: 2,
            barycentric: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 3.0; 3],
        }
    }

    /// Seven-point rule exact for polynomials of degree 5.
    pub fn seven_point() -> Self {
        let s15 = 15f64.sqrt();
        let b1 = (6.0 - s15) / 21.0;
        let a1 = 1.0 - 2.0 * b1;
        let w1 = (155.0 - s15) / 1200.0;
        let b2 = (6.0 + s15) / 21.0;
        let a2 = 1.0 - 2.0 * b2;
        let w2 = (155.0 + s15) / 1200.0;
        Self {
            degree: 5,
            barycentric: vec![
                [1.0 / 3.0; 3],
                [a1, b1, b1],
                [b1, a1, b1],
                [b1, b1, a1],
                [a2, b2, b2],
                [b2, a2, b2],
                [b2, b2, a2],
            ],
            weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
        }
    }

    /// The same rule applied on each of the `n * n` congruent subtriangles
    /// obtained by cutting every side into `n` pieces. The polynomial degree
    /// is unchanged but the error on smooth integrands drops by `n^(degree+1)`.
    pub fn composite(&self, n: usize) -> Self {
        let n = n.max(1);
        let node = |i: usize, j: usize| {
            let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
            [1.0 - a - b, a, b]
        };
        let mut subs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n - i {
                subs.push([node(i, j), node(i + 1, j), node(i, j + 1)]);
                if i + j + 1 < n {
                    subs.push([node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
                }
            }
        }
        let scale = 1.0 / (n * n) as f64;
        let mut barycentric = Vec::with_capacity(subs.len() * self.len());
        let mut weights = Vec::with_capacity(subs.len() * self.len());
        for s in &subs {
            for (l, w) in self.iter() {
                let mut p = [0.0; 3];
                for (k, pk) in p.iter_mut().enumerate() {
                    *pk = l[0] * s[0][k] + l[1] * s[1][k] + l[2] * s[2][k];
                }
                barycentric.push(p);
                weights.push(w * scale);
            }
        }
        Self {
            degree: self.degree,
            barycentric,
            weights,
        }
    }

    /// Conical product rule with `n * n` points: Gauss-Legendre in both
    /// directions of the collapsed square `(u, v) -> (u, (1 - u) v)`.
    /// Exact for polynomials of degree `2n - 2`.
    pub fn conical(n: usize) -> Self {
        let g: Vec<(f64, f64)> = gauss_legendre(n.max(1))
            .into_iter()
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect();
        let mut barycentric = Vec::with_capacity(g.len() * g.len());
        let mut weights = Vec::with_capacity(g.len() * g.len());
        for &(u, wu) in &g {
            for &(v, wv) in &g {
                let (a, b) = (u, (1.0 - u) * v);
                barycentric.push([1.0 - a - b, a, b]);
                weights.push(2.0 * wu * wv * (1.0 - u));
            }
        }
        Self {
            degree: 2 * n.max(1) - 2,
            barycentric,
            weights,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Iterates `(barycentric, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> + '_ {
        self.barycentric.iter().zip(self.weights.iter().copied())
    }

    /// Physical quadrature points and area-scaled weights on a triangle.
    pub fn on_triangle(&self, vertices: [Point; 3], area: f64) -> Vec<(Point, f64)> {
        self.iter()
            .map(|(l, w)| (from_barycentric(vertices, l), w * area))
            .collect()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre polynomial from the Chebyshev initial guesses.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

#[inline]
pub fn from_barycentric(v: [Point; 3], l: &[f64; 3]) -> Point {
    [
        l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
        l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
    ]
}

/// Number of Gauss-Legendre points used on edges (exact to degree 15).
pub const EDGE_POINTS: usize = 8;

/// Gauss-Legendre rule with `EDGE_POINTS` points on `[0, 1]`, weights
/// summing to one.
pub fn edge_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        gauss_legendre(EDGE_POINTS)
            .into_iter()
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect()
    })
}

/// Integrates `f` along the segment `a -> b` with [`edge_rule`].
/// `f` receives the point and the parameter `s in [0, 1]` measured from `a`.
pub fn integrate_segment(a: Point, b: Point, mut f: impl FnMut(Point, f64) -> f64) -> f64 {
    let length = (b[0] - a[0]).hypot(b[1] - a[1]);
    edge_rule()
        .iter()
        .map(|&(s, w)| {
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            w * f(x, s)
        })
        .sum::<f64>()
        * length
}
