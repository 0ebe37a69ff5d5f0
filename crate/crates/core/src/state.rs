//! The coupled state `(u, p, phi, mu, theta)` at one time level.

use serde::{Deserialize, Serialize};

use crate::cahn_hilliard::chemical_potential;
use crate::error::{Error, Result};
use crate::field::{BoundaryCondition, MacField, ScalarField};
use crate::grid::Grid;
use crate::ops::div;
use crate::potential::{CoefficientModel, PhysicalParams, PotentialParams};

/// Material and forcing parameters shared by every sub-step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelParams {
    pub potential: PotentialParams,
    pub coefficients: CoefficientModel,
    pub physics: PhysicalParams,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        self.coefficients.validate()?;
        self.physics.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: MacField,
    pub p: ScalarField,
    pub phi: ScalarField,
    pub mu: ScalarField,
    pub theta: ScalarField,
}

/// Divergence allowed in a stored state.
pub const DIVERGENCE_TOL: f64 = 1e-8;

impl SimState {
    /// State with `u = 0`, `p = 0` and `mu` computed from `phi`.
    pub fn at_rest(
        phi: ScalarField,
        theta: ScalarField,
        potential: &PotentialParams,
    ) -> Result<Self> {
        let g = phi.grid;
        let mu = chemical_potential(&phi, potential)?;
        Self::new(
            0.0,
            MacField::zeros(g),
            ScalarField::zeros(g, BoundaryCondition::Neumann),
            phi,
            mu,
            theta,
        )
    }

    pub fn new(
        t: f64,
        u: MacField,
        p: ScalarField,
        phi: ScalarField,
        mu: ScalarField,
        theta: ScalarField,
    ) -> Result<Self> {
        let g = phi.grid;
        for other in [&u.grid, &p.grid, &mu.grid, &theta.grid] {
            g.same_as(other)?;
        }
        if phi.bc != BoundaryCondition::Neumann
            || mu.bc != BoundaryCondition::Neumann
            || p.bc != BoundaryCondition::Neumann
        {
            return Err(Error::Precondition(
                "phi, mu and p carry Neumann conditions".into(),
            ));
        }
        if theta.bc != BoundaryCondition::Dirichlet {
            return Err(Error::Precondition(
                "theta carries the Dirichlet condition".into(),
            ));
        }
        Ok(Self {
            t,
            u,
            p,
            phi,
            mu,
            theta,
        })
    }

    pub fn grid(&self) -> Grid {
        self.phi.grid
    }

    /// Checks the stored-state invariants: finite fields, `|phi| < 1`,
    /// no-slip and a small divergence.
    pub fn check(&self) -> Result<()> {
        if !(self.u.is_finite()
            && self.p.is_finite()
            && self.phi.is_finite()
            && self.mu.is_finite()
            && self.theta.is_finite())
        {
            return Err(Error::NonFinite("state"));
        }
        if !(self.phi.max_abs() < 1.0) {
            return Err(Error::PhaseDomain(format!(
                "|phi| max = {}",
                self.phi.max_abs()
            )));
        }
        if !self.u.is_no_slip() {
            return Err(Error::Precondition("velocity violates no-slip".into()));
        }
        let d = div(&self.u).max_abs();
        let scale = 1.0 + self.u.max_abs() / self.grid().h();
        if d > DIVERGENCE_TOL * scale {
            return Err(Error::Precondition(format!(
                "divergence {d:.3e} exceeds tolerance"
            )));
        }
        Ok(())
    }
}
