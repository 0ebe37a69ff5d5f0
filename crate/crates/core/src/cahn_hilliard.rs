//! Convective Cahn-Hilliard step with a convex-concave splitting of the
//! logarithmic potential.
//!
//! With `rhs0 = phi^n - dt div(u^n phi^n)` the step reads
//! `phi - rhs0 = dt Lap mu`, `mu = -Lap phi + F'(phi) - B phi^n`. Eliminating
//! `mu` through the inverse Neumann Laplacian leaves
//! `G(phi) = A0^{-1} P (phi - rhs0) + dt P(-Lap phi + F'(phi) - B phi^n) = 0`
//! on the affine space of fields with the mean of `phi^n`. `G` is the
//! gradient of a strictly convex functional and its Jacobian is SPD on
//! mean-zero fields, so Newton with CG inner solves applies.

use serde::{Deserialize, Serialize};

use crate::elliptic::SolverConfig;
use crate::error::{Error, Result};
use crate::field::{BoundaryCondition, MacField, ScalarField};
use crate::grid::Grid;
use crate::linalg::{pcg, CgParams};
use crate::ops::{advect, grad, laplacian, ConvectionScheme};
use crate::potential::PotentialParams;
use crate::spectral::CellSpectral;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CHStepConfig {
    pub dt: f64,
    pub newton: SolverConfig,
    pub convection_scheme: ConvectionScheme,
}

impl CHStepConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            newton: SolverConfig::default(),
            convection_scheme: ConvectionScheme::Upwind,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        self.newton.validate()
    }
}

/// Largest admissible `|phi|` for Newton iterates.
pub const PHASE_LIMIT: f64 = 1.0 - 1e-12;

/// Reusable workspace for repeated steps on one grid.
#[derive(Debug, Clone)]
pub struct CahnHilliard {
    pub grid: Grid,
    pub potential: PotentialParams,
    pub cfg: CHStepConfig,
    spectral: CellSpectral,
}

impl CahnHilliard {
    pub fn new(grid: Grid, potential: PotentialParams, cfg: CHStepConfig) -> Result<Self> {
        cfg.validate()?;
        potential.validate()?;
        Ok(Self {
            grid,
            potential,
            cfg,
            spectral: CellSpectral::new(grid, BoundaryCondition::Neumann),
        })
    }

    fn inv_lap(&self, v: &[f64]) -> Vec<f64> {
        self.spectral
            .apply_slice(v, |l| if l > 0.0 { 1.0 / l } else { 0.0 })
    }

    /// Advances `(phi^n, u^n)` by one step; also returns `mu^{n+1}`.
    /// An extra source may be added to the mass equation (used by
    /// manufactured-solution checks); it must have zero mean.
    pub fn step_with_source(
        &self,
        phi_n: &ScalarField,
        u_n: &MacField,
        source: Option<&ScalarField>,
    ) -> Result<(ScalarField, ScalarField)> {
        let g = self.grid;
        g.same_as(&phi_n.grid)?;
        g.same_as(&u_n.grid)?;
        if !phi_n.is_finite() || !(phi_n.max_abs() < 1.0) {
            return Err(Error::PhaseDomain(format!(
                "input |phi| max = {}",
                phi_n.max_abs()
            )));
        }
        let p = self.potential;
        let dt = self.cfg.dt;
        let mut rhs0 = phi_n.clone().with_bc(BoundaryCondition::Neumann);
        rhs0.axpy(dt, &advect(phi_n, u_n, self.cfg.convection_scheme));
        if let Some(s) = source {
            rhs0.axpy(dt, s);
        }
        let conc: Vec<f64> = phi_n.values.iter().map(|s| p.b * s).collect();
        let cell = g.cell_area();

        // Returns (G, merit) at phi.
        let eval = |phi: &ScalarField| -> (Vec<f64>, f64) {
            let mut d: Vec<f64> = phi
                .values
                .iter()
                .zip(&rhs0.values)
                .map(|(a, b)| a - b)
                .collect();
            remove_mean(&mut d);
            let ad = self.inv_lap(&d);
            let lap = laplacian(phi);
            let mut chem: Vec<f64> = (0..phi.values.len())
                .map(|k| -lap.values[k] + p.fp(phi.values[k]) - conc[k])
                .collect();
            remove_mean(&mut chem);
            let gvec: Vec<f64> = ad.iter().zip(&chem).map(|(a, c)| a + dt * c).collect();
            let gr = grad(phi);
            let bulk: f64 = phi
                .values
                .iter()
                .zip(&conc)
                .map(|(s, c)| p.f(*s) - c * s)
                .sum();
            let merit =
                0.5 * crate::field::dot(&ad, &d) * cell + dt * (0.5 * gr.dot(&gr) + bulk * cell);
            (gvec, merit)
        };
        let l2 = |v: &[f64]| (crate::field::dot(v, v) * cell).sqrt();

        let mut phi = phi_n.clone().with_bc(BoundaryCondition::Neumann);
        let (mut gv, mut merit) = eval(&phi);
        let scale = {
            let mut d: Vec<f64> = phi_n
                .values
                .iter()
                .zip(&rhs0.values)
                .map(|(a, b)| a - b)
                .collect();
            remove_mean(&mut d);
            let lap = laplacian(phi_n);
            let mut chem: Vec<f64> = (0..d.len())
                .map(|k| -lap.values[k] + p.fp(phi_n.values[k]) - conc[k])
                .collect();
            remove_mean(&mut chem);
            l2(&self.inv_lap(&d)) + dt * l2(&chem)
        };
        // round-off floor of the residual evaluation
        let floor = {
            let fp: Vec<f64> = phi_n.values.iter().map(|s| p.fp(*s)).collect();
            1e-13 * (dt * (l2(&fp) + l2(&conc) + g.area().sqrt()) + l2(&phi_n.values))
        };
        let tol = (self.cfg.newton.rel_tol * scale).max(floor);
        let mut gn = l2(&gv);
        let max_iter = self.cfg.newton.max_iter;
        let mut converged = gn <= tol;
        let mut it = 0;
        while !converged && it < max_iter {
            it += 1;
            let fpp: Vec<f64> = phi.values.iter().map(|s| p.fpp(*s)).collect();
            let c = fpp.iter().sum::<f64>() / fpp.len() as f64;
            let jac = |v: &[f64]| -> Vec<f64> {
                let a = self.inv_lap(v);
                let f = ScalarField {
                    grid: g,
                    bc: BoundaryCondition::Neumann,
                    values: v.to_vec(),
                };
                let lap = laplacian(&f);
                let mut k: Vec<f64> = (0..v.len())
                    .map(|i| -lap.values[i] + fpp[i] * v[i])
                    .collect();
                remove_mean(&mut k);
                a.iter().zip(&k).map(|(x, y)| x + dt * y).collect()
            };
            let prec = |r: &[f64]| -> Vec<f64> {
                self.spectral.apply_slice(r, |l| {
                    if l > 0.0 {
                        1.0 / (1.0 / l + dt * (l + c))
                    } else {
                        0.0
                    }
                })
            };
            let b: Vec<f64> = gv.iter().map(|v| -v).collect();
            let params = CgParams {
                rel_tol: 1e-9,
                max_iter: max_iter.max(200),
                mean_free: true,
            };
            let (delta, _) = pcg(jac, prec, &b, None, params, "cahn-hilliard newton inner")?;
            let mut s = 1.0;
            loop {
                let trial = ScalarField {
                    grid: g,
                    bc: BoundaryCondition::Neumann,
                    values: phi
                        .values
                        .iter()
                        .zip(&delta)
                        .map(|(a, d)| a + s * d)
                        .collect(),
                };
                if trial.max_abs() <= PHASE_LIMIT {
                    let (gt, mt) = eval(&trial);
                    let gtn = l2(&gt);
                    if gtn < gn || mt < merit {
                        phi = trial;
                        gv = gt;
                        gn = gtn;
                        merit = mt;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-14 {
                    break;
                }
            }
            if gn <= tol {
                converged = true;
            } else if s < 1e-14 {
                if gn <= 1e3 * tol {
                    // round-off floor
                    converged = true;
                } else {
                    break;
                }
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                solver: "cahn-hilliard newton (try a smaller dt)",
                iterations: it,
                residual: gn / scale.max(f64::MIN_POSITIVE),
            });
        }
        debug_assert!(phi.max_abs() < 1.0);
        let lap = laplacian(&phi);
        let mu = ScalarField {
            grid: g,
            bc: BoundaryCondition::Neumann,
            values: (0..phi.values.len())
                .map(|k| -lap.values[k] + p.fp(phi.values[k]) - conc[k])
                .collect(),
        };
        Ok((phi, mu))
    }

    pub fn step(&self, phi_n: &ScalarField, u_n: &MacField) -> Result<(ScalarField, ScalarField)> {
        self.step_with_source(phi_n, u_n, None)
    }
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

pub fn ch_step(
    phi_n: &ScalarField,
    u_n: &MacField,
    p: &PotentialParams,
    cfg: &CHStepConfig,
) -> Result<(ScalarField, ScalarField)> {
    CahnHilliard::new(phi_n.grid, *p, *cfg)?.step(phi_n, u_n)
}

/// `1 - |phi|_inf`, the instantaneous distance from the pure states.
pub fn separation_delta(phi: &ScalarField) -> Result<f64> {
    let m = phi.max_abs();
    if !(m < 1.0) {
        return Err(Error::PhaseDomain(format!("|phi| max = {m}")));
    }
    Ok(1.0 - m)
}

/// Chemical potential `-Lap phi + W'(phi)`.
pub fn chemical_potential(phi: &ScalarField, p: &PotentialParams) -> Result<ScalarField> {
    if !(phi.max_abs() < 1.0) {
        return Err(Error::PhaseDomain(format!("|phi| max = {}", phi.max_abs())));
    }
    let lap = laplacian(phi);
    Ok(ScalarField {
        grid: phi.grid,
        bc: BoundaryCondition::Neumann,
        values: phi
            .values
            .iter()
            .zip(&lap.values)
            .map(|(s, l)| -l + p.wp(*s))
            .collect(),
    })
}

/// Free energy `1/2 |grad phi|^2 + int W(phi)`.
pub fn ch_energy(phi: &ScalarField, p: &PotentialParams) -> f64 {
    let gr = grad(phi);
    0.5 * gr.dot(&gr) + phi.values.iter().map(|s| p.w(*s)).sum::<f64>() * phi.grid.cell_area()
}
