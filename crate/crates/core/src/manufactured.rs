//! Closed-form test problems on the unit square and the disk.
//!
//! Both examples share
//!
//! ```text
//! p = 1 + 1000 x^2 (1-x)^3 y^2 (1-y)^3 t^2 e^t
//! c = 0.1 + 50 x^2 (1-x)^2 y^2 (1-y)^2 t e^t
//! u = -grad p / mu(c),   mu(c) = 1 + c^2,   D(u) = 1 + |u|^2 / (1 + |u|)
//! ```
//!
//! with `f = div u` and `g = c_t - div(D(u) grad c) + u . grad c` supplied as
//! forcing terms. On the square the solution satisfies homogeneous Neumann
//! conditions; on the disk the normal fluxes are imposed from the exact
//! solution.

use std::sync::Arc;

use crate::geometry::{Point, Tensor2};
use crate::problem::{example_dispersion, example_viscosity, BoundaryData, Coefficients, Problem};

/// `x^2 (1-x)^3` and its first two derivatives.
fn pressure_factor(x: f64) -> [f64; 3] {
    let s = 1.0 - x;
    [
        x * x * s * s * s,
        x * s * s * (2.0 - 5.0 * x),
        s * (2.0 - 16.0 * x + 20.0 * x * x),
    ]
}

/// `x^2 (1-x)^2` and its first two derivatives.
fn concentration_factor(x: f64) -> [f64; 3] {
    let s = 1.0 - x;
    [
        x * x * s * s,
        2.0 * x * s * (1.0 - 2.0 * x),
        2.0 * (1.0 - 6.0 * x + 6.0 * x * x),
    ]
}

/// Pressure value, gradient and Hessian.
fn pressure_jet(x: Point, t: f64) -> (f64, Point, Tensor2) {
    let a = pressure_factor(x[0]);
    let b = pressure_factor(x[1]);
    let s = 1000.0 * t * t * t.exp();
    (
        1.0 + s * a[0] * b[0],
        [s * a[1] * b[0], s * a[0] * b[1]],
        [[s * a[2] * b[0], s * a[1] * b[1]], [s * a[1] * b[1], s * a[0] * b[2]]],
    )
}

/// Concentration value, gradient, Laplacian and time derivative.
fn concentration_jet(x: Point, t: f64) -> (f64, Point, f64, f64) {
    let a = concentration_factor(x[0]);
    let b = concentration_factor(x[1]);
    let s = 50.0 * t * t.exp();
    (
        0.1 + s * a[0] * b[0],
        [s * a[1] * b[0], s * a[0] * b[1]],
        s * (a[2] * b[0] + a[0] * b[2]),
        50.0 * a[0] * b[0] * (1.0 + t) * t.exp(),
    )
}

pub fn exact_p(x: Point, t: f64) -> f64 {
    pressure_jet(x, t).0
}

pub fn grad_p(x: Point, t: f64) -> Point {
    pressure_jet(x, t).1
}

pub fn exact_c(x: Point, t: f64) -> f64 {
    concentration_jet(x, t).0
}

pub fn grad_c(x: Point, t: f64) -> Point {
    concentration_jet(x, t).1
}

pub fn exact_u(x: Point, t: f64) -> Point {
    let gp = grad_p(x, t);
    let mu = example_viscosity(exact_c(x, t));
    [-gp[0] / mu, -gp[1] / mu]
}

/// Velocity, its Jacobian `J[i][j] = d u_i / d x_j` and the concentration
/// jet.
fn velocity_jet(x: Point, t: f64) -> (Point, Tensor2, (f64, Point, f64, f64)) {
    let (_, gp, hp) = pressure_jet(x, t);
    let cj = concentration_jet(x, t);
    let (c, gc) = (cj.0, cj.1);
    let mu = example_viscosity(c);
    let u = [-gp[0] / mu, -gp[1] / mu];
    let mut jac = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            jac[i][j] = -hp[i][j] / mu + gp[i] * 2.0 * c * gc[j] / (mu * mu);
        }
    }
    (u, jac, cj)
}

/// `f = div u`.
pub fn forcing_f(x: Point, t: f64) -> f64 {
    let (_, jac, _) = velocity_jet(x, t);
    jac[0][0] + jac[1][1]
}

/// `g = c_t - div(D(u) grad c) + u . grad c`.
pub fn forcing_g(x: Point, t: f64) -> f64 {
    let (u, jac, (_, gc, lap_c, c_t)) = velocity_jet(x, t);
    let r = u[0].hypot(u[1]);
    let d = example_dispersion(u);
    let factor = (r + 2.0) / ((1.0 + r) * (1.0 + r));
    let grad_d = [
        factor * (u[0] * jac[0][0] + u[1] * jac[1][0]),
        factor * (u[0] * jac[0][1] + u[1] * jac[1][1]),
    ];
    c_t - d * lap_c - (grad_d[0] * gc[0] + grad_d[1] * gc[1]) + u[0] * gc[0] + u[1] * gc[1]
}

/// Outward dispersive flux `D(u) grad c . n` of the exact solution.
pub fn exact_conc_flux(x: Point, n: Point, t: f64) -> f64 {
    let d = example_dispersion(exact_u(x, t));
    let gc = grad_c(x, t);
    d * (gc[0] * n[0] + gc[1] * n[1])
}

/// Exact normal velocity `u . n`.
pub fn exact_flux(x: Point, n: Point, t: f64) -> f64 {
    let u = exact_u(x, t);
    u[0] * n[0] + u[1] * n[1]
}

/// Boundary data of the disk example: normal velocity and dispersive flux
/// of the exact solution, with `n` the outward normal of the polygonal
/// boundary edge.
pub fn disk_boundary_data() -> BoundaryData {
    BoundaryData {
        flux_n: Some(Arc::new(exact_flux)),
        conc_flux_n: Some(Arc::new(exact_conc_flux)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Square,
    Disk,
}

/// One of the two examples, selected by domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManufacturedProblem {
    pub domain: Domain,
}

impl ManufacturedProblem {
    pub fn square() -> Self {
        Self { domain: Domain::Square }
    }

    pub fn disk() -> Self {
        Self { domain: Domain::Disk }
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients::example()
    }

    pub fn boundary_data(&self) -> BoundaryData {
        match self.domain {
            Domain::Square => BoundaryData::homogeneous(),
            Domain::Disk => disk_boundary_data(),
        }
    }

    /// The problem handed to the time stepper: initial concentration
    /// `c(., 0)`, forcing terms `f` and `g`, no wells.
    pub fn to_problem(&self) -> Problem {
        Problem {
            coefficients: self.coefficients(),
            boundary: self.boundary_data(),
            initial_concentration: Arc::new(|x| exact_c(x, 0.0)),
            pressure_source: Some(Arc::new(forcing_f)),
            concentration_source: Some(Arc::new(forcing_g)),
        }
    }
}
