//! Velocity restricted to the span of the first `m` discrete Stokes
//! eigenmodes.

use crate::elliptic::{stokes_eigenmodes, SolverConfig};
use crate::error::{Error, Result};
use crate::field::{MacField, ScalarField};
use crate::grid::Grid;
use crate::navier_stokes::{buoyancy_force, capillary_force, viscosity_fields};
use crate::ops::{skew_convection, viscous_operator};
use crate::potential::{CoefficientModel, PhysicalParams, PotentialParams};

/// Orthonormal, divergence-free, no-slip modes with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    pub grid: Grid,
    pub modes: Vec<MacField>,
    pub eigenvalues: Vec<f64>,
}

impl GalerkinBasis {
    pub fn new(grid: Grid, m: usize, cfg: &SolverConfig) -> Result<Self> {
        let sm = stokes_eigenmodes(grid, m, cfg)?;
        Ok(Self {
            grid,
            modes: sm.modes,
            eigenvalues: sm.eigenvalues,
        })
    }

    pub fn m(&self) -> usize {
        self.modes.len()
    }

    /// The leading `k` modes as a smaller basis.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.m() {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate {} modes to {k}",
                self.m()
            )));
        }
        Ok(Self {
            grid: self.grid,
            modes: self.modes[..k].to_vec(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
        })
    }

    /// `max |<w_i, w_j> - delta_ij|`.
    pub fn gram_defect(&self) -> f64 {
        let mut d = 0.0_f64;
        for (i, a) in self.modes.iter().enumerate() {
            for (j, b) in self.modes.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                d = d.max((a.dot(b) - target).abs());
            }
        }
        d
    }

    pub fn coefficients(&self, u: &MacField) -> Vec<f64> {
        self.modes.iter().map(|w| w.dot(u)).collect()
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> MacField {
        let mut u = MacField::zeros(self.grid);
        for (c, w) in coeffs.iter().zip(&self.modes) {
            u.axpy(*c, w);
        }
        u
    }
}

/// Orthogonal projection onto the span: `(g, sum g_i w_i)`.
pub fn galerkin_project(u: &MacField, basis: &GalerkinBasis) -> (Vec<f64>, MacField) {
    let c = basis.coefficients(u);
    let um = basis.synthesize(&c);
    (c, um)
}

/// Fields frozen over one modal step.
pub struct ModalForcing<'a> {
    pub phi: &'a ScalarField,
    pub theta: &'a ScalarField,
    pub potential: &'a PotentialParams,
    pub physics: &'a PhysicalParams,
    pub coefficients: &'a CoefficientModel,
    pub advection: bool,
    /// Additional body force, e.g. a manufactured momentum source.
    pub extra: Option<&'a MacField>,
}

struct Rhs<'a> {
    basis: &'a GalerkinBasis,
    body: MacField,
    nu_c: Vec<f64>,
    nu_n: Vec<f64>,
    advection: bool,
}

impl Rhs<'_> {
    fn eval(&self, g: &[f64]) -> Vec<f64> {
        let u = self.basis.synthesize(g);
        let mut r = self.body.sub(&viscous_operator(&u, &self.nu_c, &self.nu_n));
        if self.advection {
            r.axpy(-1.0, &skew_convection(&u, &u));
        }
        self.basis.coefficients(&r)
    }
}

/// One Heun (RK2) step of the modal system
/// `g_j' = <f - (u.grad)u + div(2 nu D u), w_j>`; the pressure drops out
/// against the solenoidal basis.
pub fn galerkin_ns_step(
    coeffs: &[f64],
    basis: &GalerkinBasis,
    forcing: &ModalForcing<'_>,
    dt: f64,
) -> Result<Vec<f64>> {
    if coeffs.len() != basis.m() {
        return Err(Error::InvalidParameter(format!(
            "expected {} coefficients, got {}",
            basis.m(),
            coeffs.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mut body = capillary_force(
        forcing.phi,
        forcing.theta,
        forcing.potential,
        forcing.coefficients,
    )?;
    body.axpy(1.0, &buoyancy_force(forcing.theta, forcing.physics));
    if let Some(f) = forcing.extra {
        body.axpy(1.0, f);
    }
    body.enforce_no_slip();
    let (nu_c, nu_n) = viscosity_fields(forcing.theta, forcing.coefficients)?;
    let rhs = Rhs {
        basis,
        body,
        nu_c,
        nu_n,
        advection: forcing.advection,
    };
    let k1 = rhs.eval(coeffs);
    let mid: Vec<f64> = coeffs.iter().zip(&k1).map(|(g, k)| g + dt * k).collect();
    let k2 = rhs.eval(&mid);
    let next: Vec<f64> = coeffs
        .iter()
        .zip(k1.iter().zip(&k2))
        .map(|(g, (a, b))| g + 0.5 * dt * (a + b))
        .collect();
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFinite("galerkin step"))
    }
}
