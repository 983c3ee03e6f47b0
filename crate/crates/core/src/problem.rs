//! Coefficient model of the miscible displacement system and its boundary
//! data.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Point, Tensor2};
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;

pub type SpaceFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type VelocityFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(Point) -> Tensor2 + Send + Sync>;
/// Boundary datum `g(x, n_out, t)`.
pub type BoundaryFn = Arc<dyn Fn(Point, Point, f64) -> f64 + Send + Sync>;

/// Physical data of the flow and transport equations.
///
/// The dispersion tensor is `phi * d_m * I + d1(u) I + d2(u) u (x) u` unless
/// `dispersion_override` replaces it by a closed form.
#[derive(Clone)]
pub struct Coefficients {
    /// Permeability `k(x)`.
    pub permeability: SpaceFn,
    /// Viscosity `mu(c)`.
    pub viscosity: ScalarMap,
    pub porosity: f64,
    pub molecular_diffusion: f64,
    /// Isotropic dispersion coefficient `d1(u)`.
    pub isotropic_dispersion: VelocityFn,
    /// Coefficient `d2(u)` of the `u (x) u` term.
    pub directional_dispersion: VelocityFn,
    /// Injection rate `q^I(x, t)`.
    pub injection: SpaceTimeFn,
    /// Production rate `q^P(x, t)`.
    pub production: SpaceTimeFn,
    /// Injected concentration `c^(x, t)`.
    pub injected_concentration: SpaceTimeFn,
    pub dispersion_override: Option<TensorFn>,
}

impl std::fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Coefficients")
            .field("porosity", &self.porosity)
            .field("molecular_diffusion", &self.molecular_diffusion)
            .field("dispersion_override", &self.dispersion_override.is_some())
            .finish_non_exhaustive()
    }
}

impl Default for Coefficients {
    /// Unit permeability, viscosity, porosity and molecular diffusion, no
    /// mechanical dispersion and no wells.
    fn default() -> Self {
        Self {
            permeability: Arc::new(|_| 1.0),
            viscosity: Arc::new(|_| 1.0),
            porosity: 1.0,
            molecular_diffusion: 1.0,
            isotropic_dispersion: Arc::new(|_| 0.0),
            directional_dispersion: Arc::new(|_| 0.0),
            injection: Arc::new(|_, _| 0.0),
            production: Arc::new(|_, _| 0.0),
            injected_concentration: Arc::new(|_, _| 0.0),
            dispersion_override: None,
        }
    }
}

/// `1 + |u|^2 / (1 + |u|)`, the scalar dispersion of the test problems.
pub fn example_dispersion(u: Point) -> f64 {
    let r = u[0].hypot(u[1]);
    1.0 + r * r / (1.0 + r)
}

/// `1 + c^2`, the viscosity of the test problems.
pub fn example_viscosity(c: f64) -> f64 {
    1.0 + c * c
}

impl Coefficients {
    /// Coefficients of the manufactured test problems: unit permeability and
    /// porosity, `mu(c) = 1 + c^2` and `D(u) = (1 + |u|^2 / (1 + |u|)) I`.
    pub fn example() -> Self {
        Self {
            viscosity: Arc::new(example_viscosity),
            dispersion_override: Some(Arc::new(|u| {
                let d = example_dispersion(u);
                [[d, 0.0], [0.0, d]]
            })),
            ..Self::default()
        }
    }

    /// Dispersion-diffusion tensor `D(u)`.
    pub fn dispersion(&self, u: Point) -> Tensor2 {
        if let Some(over) = &self.dispersion_override {
            return over(u);
        }
        let iso = self.porosity * self.molecular_diffusion + (self.isotropic_dispersion)(u);
        let d2 = (self.directional_dispersion)(u);
        let off = d2 * u[0] * u[1];
        [[iso + d2 * u[0] * u[0], off], [off, iso + d2 * u[1] * u[1]]]
    }

    pub fn viscosity_at(&self, c: f64) -> f64 {
        (self.viscosity)(c)
    }

    /// `mu(c) / k(x)`, the weight of the velocity mass matrix.
    pub fn resistance(&self, x: Point, c: f64) -> f64 {
        (self.viscosity)(c) / (self.permeability)(x)
    }

    /// Checks `k0^-1 <= k <= k0` at `points` and `mu0^-1 <= mu <= mu0` at
    /// `concentrations`.
    pub fn check_bounds(&self, points: &[Point], concentrations: &[f64], k0: f64, mu0: f64) -> Result<()> {
        for &x in points {
            let k = (self.permeability)(x);
            if !(k >= 1.0 / k0 && k <= k0) {
                return Err(Error::InvalidArgument(format!(
                    "permeability {k} at ({}, {}) outside [{}, {k0}]",
                    x[0],
                    x[1],
                    1.0 / k0
                )));
            }
        }
        for &c in concentrations {
            let mu = (self.viscosity)(c);
            if !(mu >= 1.0 / mu0 && mu <= mu0) {
                return Err(Error::InvalidArgument(format!(
                    "viscosity {mu} at c = {c} outside [{}, {mu0}]",
                    1.0 / mu0
                )));
            }
        }
        Ok(())
    }

    /// `integral q^I - integral q^P` at time `t`, which must vanish for a
    /// closed reservoir.
    pub fn source_imbalance(&self, mesh: &Mesh, t: f64) -> f64 {
        let rule = TriangleRule::seven_point();
        (0..mesh.num_triangles())
            .map(|tri| {
                rule.on_triangle(mesh.triangle_vertices(tri), mesh.area(tri))
                    .iter()
                    .map(|&(x, w)| w * ((self.injection)(x, t) - (self.production)(x, t)))
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn check_compatibility(&self, mesh: &Mesh, t: f64, tolerance: f64) -> Result<()> {
        let imbalance = self.source_imbalance(mesh, t);
        if imbalance.abs() > tolerance {
            return Err(Error::InvalidArgument(format!(
                "injection and production do not balance: difference {imbalance:e}"
            )));
        }
        Ok(())
    }
}

/// Boundary data: outward normal velocity `u . n` and outward dispersive
/// flux `D(u) grad c . n`. `None` means homogeneous.
#[derive(Clone, Default)]
pub struct BoundaryData {
    pub flux_n: Option<BoundaryFn>,
    pub conc_flux_n: Option<BoundaryFn>,
}

impl BoundaryData {
    pub fn homogeneous() -> Self {
        Self::default()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.flux_n.is_none() && self.conc_flux_n.is_none()
    }

    pub fn flux(&self, x: Point, n: Point, t: f64) -> f64 {
        self.flux_n.as_ref().map_or(0.0, |g| g(x, n, t))
    }

    pub fn conc_flux(&self, x: Point, n: Point, t: f64) -> f64 {
        self.conc_flux_n.as_ref().map_or(0.0, |g| g(x, n, t))
    }
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryData")
            .field("flux_n", &self.flux_n.is_some())
            .field("conc_flux_n", &self.conc_flux_n.is_some())
            .finish()
    }
}

/// Everything the time stepper needs besides the mesh.
///
/// `pressure_source` and `concentration_source` are extra right-hand sides
/// added to `q^I - q^P` and `c^ q^I - c q^P`; manufactured problems use them
/// for their forcing terms.
#[derive(Clone)]
pub struct Problem {
    pub coefficients: Coefficients,
    pub boundary: BoundaryData,
    pub initial_concentration: SpaceFn,
    pub pressure_source: Option<SpaceTimeFn>,
    pub concentration_source: Option<SpaceTimeFn>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("coefficients", &self.coefficients)
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(coefficients: Coefficients, initial_concentration: SpaceFn) -> Self {
        Self {
            coefficients,
            boundary: BoundaryData::homogeneous(),
            initial_concentration,
            pressure_source: None,
            concentration_source: None,
        }
    }

    /// Right-hand side of the divergence equation at `(x, t)`.
    pub fn divergence_source(&self, x: Point, t: f64) -> f64 {
        let c = &self.coefficients;
        (c.injection)(x, t) - (c.production)(x, t)
            + self.pressure_source.as_ref().map_or(0.0, |f| f(x, t))
    }

    /// Concentration source independent of the unknown: `c^ q^I + g`.
    pub fn concentration_load(&self, x: Point, t: f64) -> f64 {
        let c = &self.coefficients;
        (c.injected_concentration)(x, t) * (c.injection)(x, t)
            + self.concentration_source.as_ref().map_or(0.0, |g| g(x, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::symmetric_eigenvalues;
    use rand::{Rng, SeedableRng};

    #[test]
    fn override_at_rest_is_identity() {
        let d = Coefficients::example().dispersion([0.0, 0.0]);
        assert_eq!(d, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn override_at_three_four() {
        let d = Coefficients::example().dispersion([3.0, 4.0]);
        let expected = 1.0 + 25.0 / 6.0;
        assert!((d[0][0] - expected).abs() < 1e-14 && (d[1][1] - expected).abs() < 1e-14);
        assert!((d[0][0] - 5.1667).abs() < 1e-4);
        assert_eq!(d[0][1], 0.0);
    }

    #[test]
    fn structural_form() {
        let coeffs = Coefficients {
            directional_dispersion: Arc::new(|_| 1.0),
            ..Coefficients::default()
        };
        assert_eq!(coeffs.dispersion([1.0, 0.0]), [[2.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn example_viscosity_values() {
        let c = Coefficients::example();
        assert_eq!(c.viscosity_at(0.0), 1.0);
        assert!((c.viscosity_at(0.1) - 1.01).abs() < 1e-15);
        assert_eq!(c.viscosity_at(2.0), 5.0);
    }

    #[test]
    fn dispersion_is_symmetric_and_bounded_below() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let coeffs = Coefficients::example();
        let structural = Coefficients {
            isotropic_dispersion: Arc::new(|u| 0.1 * u[0].hypot(u[1])),
            directional_dispersion: Arc::new(|u| 0.5 / (1.0 + u[0].hypot(u[1]))),
            ..Coefficients::default()
        };
        for _ in 0..1000 {
            let u = [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)];
            let d = coeffs.dispersion(u);
            assert_eq!(d[0][1], d[1][0]);
            assert!(symmetric_eigenvalues(&d)[0] >= 1.0 - 1e-12);
            let s = structural.dispersion(u);
            assert_eq!(s[0][1], s[1][0]);
            assert!(symmetric_eigenvalues(&s)[0] >= structural.porosity * structural.molecular_diffusion - 1e-12);
        }
    }

    #[test]
    fn example_viscosity_is_positive() {
        let coeffs = Coefficients::example();
        for i in 0..=2000 {
            let c = -10.0 + 0.01 * i as f64;
            assert!(coeffs.viscosity_at(c) > 0.0);
        }
    }

    #[test]
    fn bounds_check_flags_violations() {
        let coeffs = Coefficients::example();
        assert!(coeffs.check_bounds(&[[0.5, 0.5]], &[0.0, 1.0], 2.0, 2.0).is_ok());
        assert!(coeffs.check_bounds(&[[0.5, 0.5]], &[3.0], 2.0, 2.0).is_err());
    }

    #[test]
    fn balanced_wells_are_compatible() {
        let mesh = crate::mesh::generate_unit_square_mesh(8).unwrap();
        let coeffs = Coefficients {
            injection: Arc::new(|x, _| if x[0] < 0.5 { 1.0 } else { 0.0 }),
            production: Arc::new(|x, _| if x[0] >= 0.5 { 1.0 } else { 0.0 }),
            ..Coefficients::default()
        };
        assert!(coeffs.check_compatibility(&mesh, 0.0, 1e-12).is_ok());
        let unbalanced = Coefficients {
            injection: Arc::new(|_, _| 1.0),
            ..Coefficients::default()
        };
        assert!(unbalanced.check_compatibility(&mesh, 0.0, 1e-12).is_err());
    }
}
