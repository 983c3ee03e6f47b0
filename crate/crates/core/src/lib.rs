//! Galerkin-mixed finite element solver for incompressible miscible
//! displacement in porous media.
//!
//! The pressure/velocity pair is discretized with Raviart-Thomas elements and
//! discontinuous pressures, the concentration with continuous piecewise linear
//! elements. Time stepping is the linearized semi-implicit Euler scheme: the
//! viscosity is lagged at the previous concentration so that every step
//! consists of two linear solves.
//!
//! Modules:
//! - [`mesh`]: unit-square and disk triangulations, mesh files, point location.
//! - [`spaces`]: degree-of-freedom maps, fields, interpolants and projections.
//! - [`problem`]: coefficient model and boundary data.
//! - [`linalg`]: sparse matrices and linear solvers.
//! - [`scheme`]: the time stepper.
//! - [`manufactured`]: closed-form test problems on the square and the disk.
//! - [`timedisc`]: fine-mesh reference runs and error splitting.
//! - [`harness`]: error norms, convergence rates, studies and reports.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod scheme;
pub mod spaces;
pub mod timedisc;

pub use error::{Error, Result};
pub use geometry::{Point, Tensor2};
