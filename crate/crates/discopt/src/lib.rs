//! Placement optimization of a highly conductive disc inclusion inside a
//! unit-square plate heated from its bottom side.
//!
//! The library solves the transient two-material heat equation with an
//! interfacial thermal resistance (the temperature jumps across the disc
//! boundary), its backward-in-time adjoint, and a closed-form boundary
//! density whose integral against translation fields yields the derivative
//! of the tracking functional with respect to the disc center. A projected
//! gradient loop descends on the center; a finite-difference oracle
//! cross-checks the adjoint gradient.

pub mod assembly;
pub mod config;
pub mod error;
pub mod geometry;
pub mod gradient;
pub mod mesh;
pub mod optimizer;
pub mod solver;
pub mod sparse;
pub mod target;
pub mod vtk;

pub use error::{Error, Result};
