//! Two-phase incompressible flow with a singular logarithmic potential,
//! temperature-dependent viscosity, conductivity and surface tension, on a
//! staggered rectangular grid.

pub mod boussinesq;
pub mod cahn_hilliard;
pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod field;
pub mod galerkin;
pub mod grid;
pub mod initial;
pub mod io;
pub mod linalg;
pub mod manufactured;
pub mod navier_stokes;
pub mod norms;
pub mod ops;
pub mod potential;
pub mod samples;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
pub use field::{BoundaryCondition, MacField, NodeField, ScalarField, TensorField};
pub use grid::Grid;
