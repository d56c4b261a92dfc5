//! Shared fixtures for the integration suites.

use discopt::assembly::PhysicalParams;
use discopt::geometry::{DiscGeometry, DomainSpec, Vec2};
use discopt::mesh::MeshParams;
use discopt::optimizer::Problem;
use discopt::solver::{FunctionalSpec, TimeGrid};

/// Reference physical constants of all experiments: κ = 100, R = 10⁻²,
/// boundary temperature 500, horizon 0.5.
pub fn reference_physics() -> PhysicalParams {
    PhysicalParams {
        kappa: 100.0,
        resistance: 0.01,
        boundary_temperature: 500.0,
        horizon: 0.5,
    }
}

pub fn mesh_params(h: f64, segments: usize) -> MeshParams {
    MeshParams {
        target_h: h,
        interface_segments: segments,
        ..MeshParams::default()
    }
}

pub fn problem(
    h: f64,
    segments: usize,
    steps: usize,
    functional: FunctionalSpec,
) -> Problem {
    Problem {
        domain: DomainSpec::default(),
        mesh: mesh_params(h, segments),
        physics: reference_physics(),
        grid: TimeGrid::new(0.5, steps).unwrap(),
        functional,
    }
}

pub fn disc(x: f64, y: f64, r: f64) -> DiscGeometry {
    DiscGeometry::new(Vec2::new(x, y), r).unwrap()
}
