//! Discrete spaces: continuous P1 for the concentration, discontinuous
//! piecewise polynomials for the pressure and Raviart-Thomas elements for the
//! velocity.
//!
//! The pressure and velocity spaces come as a matched pair selected by
//! [`MixedOrder`]: `Rt0` pairs lowest-order Raviart-Thomas with piecewise
//! constants, `Rt1` pairs next-order Raviart-Thomas with discontinuous
//! piecewise linears. In both cases the divergence of the velocity space is
//! exactly the pressure space.

mod dg;
mod p1;
mod rt;

use std::sync::Arc;

pub use dg::{l2_project_p0, DofMapDg, FieldDg};
pub use p1::{elliptic_project_p1, interpolate_p1, DofMapP1, FieldP1};
pub use rt::{interpolate_rt, rt_project, DofMapRt, FieldRt};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;

/// Order of the velocity/pressure pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MixedOrder {
    /// Lowest-order Raviart-Thomas with piecewise constant pressure.
    Rt0,
    /// Raviart-Thomas of index one with discontinuous piecewise linear pressure.
    #[default]
    Rt1,
}

impl MixedOrder {
    /// Polynomial degree of the pressure space.
    pub fn degree(self) -> usize {
        match self {
            Self::Rt0 => 0,
            Self::Rt1 => 1,
        }
    }

    /// Pressure dofs per triangle.
    pub fn pressure_dofs_per_triangle(self) -> usize {
        match self {
            Self::Rt0 => 1,
            Self::Rt1 => 3,
        }
    }
}

impl std::str::FromStr for MixedOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" | "rt0" => Ok(Self::Rt0),
            "1" | "rt1" => Ok(Self::Rt1),
            other => Err(Error::InvalidArgument(format!("unknown element order `{other}`"))),
        }
    }
}

impl std::fmt::Display for MixedOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Rt0 => write!(f, "rt0"),
            Self::Rt1 => write!(f, "rt1"),
        }
    }
}

/// Local scaled coordinates `xi = (x - center) / scale` of a triangle.
///
/// Discontinuous and Raviart-Thomas bases are polynomials in these
/// coordinates, which keeps local matrices well conditioned on small cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementFrame {
    pub center: Point,
    pub scale: f64,
}

impl ElementFrame {
    pub fn of_triangle(mesh: &Mesh, t: usize) -> Self {
        Self {
            center: mesh.centroid(t),
            scale: mesh.diameter(t),
        }
    }

    #[inline]
    pub fn local(&self, x: Point) -> Point {
        [
            (x[0] - self.center[0]) / self.scale,
            (x[1] - self.center[1]) / self.scale,
        ]
    }
}

/// The three spaces on one mesh, sharing a quadrature rule.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Arc<Mesh>,
    order: MixedOrder,
    quadrature: TriangleRule,
    p1: DofMapP1,
    pressure: DofMapDg,
    velocity: DofMapRt,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>, order: MixedOrder) -> Result<Self> {
        Self::with_quadrature(mesh, order, TriangleRule::seven_point())
    }

    pub fn with_quadrature(mesh: Arc<Mesh>, order: MixedOrder, quadrature: TriangleRule) -> Result<Self> {
        let p1 = DofMapP1::new(mesh.clone());
        let pressure = DofMapDg::new(mesh.clone(), order.degree(), true)?;
        let velocity = DofMapRt::new(mesh.clone(), order)?;
        Ok(Self {
            mesh,
            order,
            quadrature,
            p1,
            pressure,
            velocity,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn order(&self) -> MixedOrder {
        self.order
    }

    pub fn quadrature(&self) -> &TriangleRule {
        &self.quadrature
    }

    pub fn p1(&self) -> &DofMapP1 {
        &self.p1
    }

    pub fn pressure(&self) -> &DofMapDg {
        &self.pressure
    }

    pub fn velocity(&self) -> &DofMapRt {
        &self.velocity
    }
}
