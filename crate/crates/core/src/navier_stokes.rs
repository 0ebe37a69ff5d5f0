//! Momentum step: skew-symmetric advection, variable-viscosity diffusion,
//! capillary and buoyancy forcing, Chorin projection.

use serde::{Deserialize, Serialize};

use crate::elliptic::{NeumannSolver, SolverConfig};
use crate::error::{Error, Result};
use crate::field::{MacField, ScalarField};
use crate::grid::Grid;
use crate::linalg::{pcg, CgParams};
use crate::ops::{
    div, grad, grad_on_cells, grad_on_nodes, scalar_on_nodes, scalar_on_yfaces, skew_convection,
    viscous_operator,
};
use crate::potential::{CoefficientModel, PhysicalParams, PotentialParams};
use crate::spectral::VectorSpectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ViscousTreatment {
    #[default]
    SemiImplicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NSStepConfig {
    pub dt: f64,
    #[serde(default)]
    pub viscous_treatment: ViscousTreatment,
    #[serde(default)]
    pub linear: SolverConfig,
    /// Keep the convective term; off gives the Stokes-linearized step.
    #[serde(default = "yes")]
    pub advection: bool,
}

fn yes() -> bool {
    true
}

impl NSStepConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            viscous_treatment: ViscousTreatment::SemiImplicit,
            linear: SolverConfig::default(),
            advection: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        self.linear.validate()
    }
}

/// Capillary force `-div sigma` with
/// `sigma = lambda(theta) (grad phi (x) grad phi + (|grad phi|^2/2 + W(phi)) I)`,
/// assembled at cells (diagonal) and nodes (off-diagonal) and differenced
/// onto interior faces.
pub fn capillary_force(
    phi: &ScalarField,
    theta: &ScalarField,
    p: &PotentialParams,
    m: &CoefficientModel,
) -> Result<MacField> {
    let g = phi.grid;
    g.same_as(&theta.grid)?;
    if !(phi.max_abs() < 1.0) {
        return Err(Error::PhaseDomain(format!("|phi| max = {}", phi.max_abs())));
    }
    let (cx, cy) = grad_on_cells(phi);
    let mut sxx = vec![0.0; g.n_cells()];
    let mut syy = vec![0.0; g.n_cells()];
    for c in 0..g.n_cells() {
        let lam = m.lambda(theta.values[c]);
        let iso = 0.5 * (cx[c] * cx[c] + cy[c] * cy[c]) + p.w(phi.values[c]);
        sxx[c] = lam * (cx[c] * cx[c] + iso);
        syy[c] = lam * (cy[c] * cy[c] + iso);
    }
    let (nx_, ny_) = grad_on_nodes(phi);
    let tn = scalar_on_nodes(theta);
    let sxy: Vec<f64> = (0..g.n_nodes())
        .map(|k| m.lambda(tn[k]) * nx_[k] * ny_[k])
        .collect();
    let mut f = MacField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let d = (sxx[g.cell(i, j)] - sxx[g.cell(i - 1, j)]) / g.dx
                + (sxy[g.node(i, j + 1)] - sxy[g.node(i, j)]) / g.dy;
            f.ux[g.xface(i, j)] = -d;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let d = (sxy[g.node(i + 1, j)] - sxy[g.node(i, j)]) / g.dx
                + (syy[g.cell(i, j)] - syy[g.cell(i, j - 1)]) / g.dy;
            f.uy[g.yface(i, j)] = -d;
        }
    }
    Ok(f)
}

/// `(Ra theta - Ga) g e2` on interior y-faces.
pub fn buoyancy_force(theta: &ScalarField, phys: &PhysicalParams) -> MacField {
    let g = theta.grid;
    let tf = scalar_on_yfaces(theta);
    let mut f = MacField::zeros(g);
    for j in 1..g.ny {
        for i in 0..g.nx {
            let k = g.yface(i, j);
            f.uy[k] = phys.buoyancy(tf[k]);
        }
    }
    f
}

/// Viscosity at cells and nodes.
pub fn viscosity_fields(theta: &ScalarField, m: &CoefficientModel) -> Result<(Vec<f64>, Vec<f64>)> {
    let nu_c = theta
        .values
        .iter()
        .map(|t| Ok(m.eval(*t)?.nu))
        .collect::<Result<Vec<_>>>()?;
    let nu_n = scalar_on_nodes(theta)
        .into_iter()
        .map(|t| Ok(m.eval(t)?.nu))
        .collect::<Result<Vec<_>>>()?;
    Ok((nu_c, nu_n))
}

/// Reusable momentum stepper for one grid.
#[derive(Debug, Clone)]
pub struct NavierStokes {
    pub grid: Grid,
    pub cfg: NSStepConfig,
    vec: VectorSpectral,
    poisson: NeumannSolver,
}

/// Inputs of one momentum step: the state at `t^n` with the freshest
/// phase and temperature.
pub struct MomentumInputs<'a> {
    pub u: &'a MacField,
    pub phi: &'a ScalarField,
    pub theta: &'a ScalarField,
    /// Pressure at `t^n`; when present the step is incremental and
    /// the projection solves for the pressure increment.
    pub p: Option<&'a ScalarField>,
    /// Extra body force on interior faces (manufactured sources).
    pub extra: Option<&'a MacField>,
}

impl NavierStokes {
    pub fn new(grid: Grid, cfg: NSStepConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            grid,
            cfg,
            vec: VectorSpectral::new(grid),
            poisson: NeumannSolver::new(grid, cfg.linear)?,
        })
    }

    /// Returns `(u^{n+1}, p^{n+1})`.
    pub fn step(
        &self,
        inp: MomentumInputs<'_>,
        pot: &PotentialParams,
        phys: &PhysicalParams,
        m: &CoefficientModel,
    ) -> Result<(MacField, ScalarField)> {
        let g = self.grid;
        g.same_as(&inp.u.grid)?;
        let dt = self.cfg.dt;
        let (nu_c, nu_n) = viscosity_fields(inp.theta, m)?;
        let mut force = capillary_force(inp.phi, inp.theta, pot, m)?;
        force.axpy(1.0, &buoyancy_force(inp.theta, phys));
        if let Some(e) = inp.extra {
            force.axpy(1.0, e);
        }
        if self.cfg.advection {
            force.axpy(-1.0, &skew_convection(inp.u, inp.u));
        }
        if let Some(p) = inp.p {
            force.axpy(-1.0, &grad(p));
        }
        force.enforce_no_slip();
        let ustar = match self.cfg.viscous_treatment {
            ViscousTreatment::Explicit => {
                let mut u = inp.u.clone();
                let visc = viscous_operator(inp.u, &nu_c, &nu_n);
                u.axpy(dt, &force.sub(&visc));
                u.enforce_no_slip();
                u
            }
            ViscousTreatment::SemiImplicit => {
                let mut rhs = inp.u.scaled(1.0 / dt);
                rhs.axpy(1.0, &force);
                let b = rhs.pack_interior();
                let idt = 1.0 / dt;
                let a = |x: &[f64]| -> Vec<f64> {
                    let v = MacField::unpack_interior(g, x);
                    let mut out = viscous_operator(&v, &nu_c, &nu_n);
                    out.axpy(idt, &v);
                    out.pack_interior()
                };
                let nubar = nu_c.iter().sum::<f64>() / nu_c.len() as f64;
                let prec = |r: &[f64]| -> Vec<f64> {
                    self.vec
                        .apply(&MacField::unpack_interior(g, r), move |l| {
                            1.0 / (idt + nubar * l)
                        })
                        .pack_interior()
                };
                let params = CgParams {
                    rel_tol: self.cfg.linear.rel_tol,
                    max_iter: self.cfg.linear.max_iter,
                    mean_free: false,
                };
                let (x, _) = pcg(
                    a,
                    prec,
                    &b,
                    Some(inp.u.pack_interior()),
                    params,
                    "momentum viscous",
                )?;
                MacField::unpack_interior(g, &x)
            }
        };
        let (u, mut p) = self.project(&ustar)?;
        if let Some(pn) = inp.p {
            p = p.add(pn).mean_free();
        }
        if !u.is_finite() {
            return Err(Error::NonFinite("momentum step"));
        }
        Ok((u, p))
    }

    /// Pressure whose gradient balances the curl-free part of the body
    /// force at the given fields; a good `p^0` for the incremental step.
    pub fn balancing_pressure(
        &self,
        phi: &ScalarField,
        theta: &ScalarField,
        pot: &PotentialParams,
        phys: &PhysicalParams,
        m: &CoefficientModel,
    ) -> Result<ScalarField> {
        let mut f = capillary_force(phi, theta, pot, m)?;
        f.axpy(1.0, &buoyancy_force(theta, phys));
        f.enforce_no_slip();
        self.poisson.solve(&div(&f).scaled(-1.0).mean_free())
    }

    /// `u = u* - dt grad p` with `div(grad p) = div(u*)/dt`, mean-zero `p`.
    pub fn project(&self, ustar: &MacField) -> Result<(MacField, ScalarField)> {
        let dt = self.cfg.dt;
        let rhs = div(ustar).scaled(-1.0 / dt).mean_free();
        let p = self.poisson.solve(&rhs)?;
        let mut u = ustar.clone();
        u.axpy(-dt, &grad(&p));
        u.enforce_no_slip();
        Ok((u, p))
    }
}

/// Bundled state for [`ns_step`].
pub struct NsState<'a> {
    pub u: &'a MacField,
    pub p: Option<&'a ScalarField>,
    pub phi: &'a ScalarField,
    pub theta: &'a ScalarField,
}

pub fn ns_step(
    state: NsState<'_>,
    pot: &PotentialParams,
    phys: &PhysicalParams,
    m: &CoefficientModel,
    cfg: &NSStepConfig,
) -> Result<(MacField, ScalarField)> {
    let ns = NavierStokes::new(state.u.grid, *cfg)?;
    ns.step(
        MomentumInputs {
            u: state.u,
            phi: state.phi,
            theta: state.theta,
            p: state.p,
            extra: None,
        },
        pot,
        phys,
        m,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{stokes_eigenmodes, StokesSolver};
    use crate::field::BoundaryCondition;
    use crate::ops::curl_of_fn;
    use std::f64::consts::PI;

    fn zeros(g: Grid) -> (ScalarField, ScalarField) {
        (
            ScalarField::zeros(g, BoundaryCondition::Neumann),
            ScalarField::zeros(g, BoundaryCondition::Dirichlet),
        )
    }

    #[test]
    fn constant_phase_gives_no_capillary_force() {
        let g = Grid::unit(16).unwrap();
        let phi = ScalarField::constant(g, BoundaryCondition::Neumann, 0.3);
        let th = ScalarField::zeros(g, BoundaryCondition::Dirichlet);
        let f = capillary_force(
            &phi,
            &th,
            &PotentialParams::default(),
            &CoefficientModel::default(),
        )
        .unwrap();
        assert!(f.max_abs() < 1e-13);
        let bad = ScalarField::constant(g, BoundaryCondition::Neumann, 1.0);
        assert!(capillary_force(
            &bad,
            &th,
            &PotentialParams::default(),
            &CoefficientModel::default()
        )
        .is_err());
    }

    #[test]
    fn marangoni_part_is_linear_in_b() {
        let g = Grid::unit(24).unwrap();
        let phi = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, _| {
            0.8 * ((x - 0.5) / 0.1).tanh()
        });
        let th = ScalarField::from_fn(g, BoundaryCondition::Dirichlet, |_, y| y);
        let pot = PotentialParams::default();
        let f = |b: f64| {
            capillary_force(
                &phi,
                &th,
                &pot,
                &CoefficientModel {
                    b,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let f0 = f(0.0);
        let d1 = f(0.3).sub(&f0);
        let d2 = f(0.6).sub(&f0);
        assert!(d1.max_abs() > 1e-3);
        assert!(d2.sub(&d1.scaled(2.0)).max_abs() < 1e-12 * d2.max_abs().max(1.0));
        // linear in lambda0
        let g2 = capillary_force(
            &phi,
            &th,
            &pot,
            &CoefficientModel {
                lambda0: 2.0,
                ..Default::default()
            },
        )
        .unwrap();
        let g1 = capillary_force(&phi, &th, &pot, &CoefficientModel::default()).unwrap();
        assert!(g2.sub(&g1.scaled(2.0)).max_abs() < 1e-12 * g2.max_abs());
    }

    #[test]
    fn capillary_force_projects_onto_mu_grad_phi() {
        // With constant lambda the two forms differ by a gradient, so
        // their Stokes responses agree up to discretization error.
        let mut errs = Vec::new();
        for n in [32, 64] {
            let g = Grid::unit(n).unwrap();
            let pot = PotentialParams::default();
            let m = CoefficientModel {
                b: 0.0,
                ..Default::default()
            };
            let phi = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, y| {
                0.7 * ((x - 0.5 + 0.1 * (PI * y).cos()) / 0.15).tanh()
            });
            let th = ScalarField::zeros(g, BoundaryCondition::Dirichlet);
            let f = capillary_force(&phi, &th, &pot, &m).unwrap();
            let mu = crate::cahn_hilliard::chemical_potential(&phi, &pot).unwrap();
            let gp = grad(&phi);
            let mut h = MacField::zeros(g);
            let muf = crate::ops::scalar_on_xfaces(&mu);
            let muy = scalar_on_yfaces(&mu);
            for k in 0..h.ux.len() {
                h.ux[k] = m.a * m.lambda0 * muf[k] * gp.ux[k];
            }
            for k in 0..h.uy.len() {
                h.uy[k] = m.a * m.lambda0 * muy[k] * gp.uy[k];
            }
            h.enforce_no_slip();
            let s = StokesSolver::new(g, SolverConfig::default()).unwrap();
            let (a, b) = (s.solve(&f).unwrap().u, s.solve(&h).unwrap().u);
            errs.push(a.sub(&b).norm_l2() / b.norm_l2());
        }
        assert!(errs[1] < 0.02, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn rest_state_is_preserved() {
        let g = Grid::unit(16).unwrap();
        let (phi, th) = zeros(g);
        let u0 = MacField::zeros(g);
        let cfg = NSStepConfig::new(1e-3);
        let ns = NavierStokes::new(g, cfg).unwrap();
        let mut u = u0;
        for _ in 0..5 {
            u = ns
                .step(
                    MomentumInputs {
                        u: &u,
                        phi: &phi,
                        theta: &th,
                        p: None,
                        extra: None,
                    },
                    &PotentialParams::default(),
                    &PhysicalParams::default(),
                    &CoefficientModel::default(),
                )
                .unwrap()
                .0;
        }
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn stratified_buoyancy_is_absorbed_by_pressure() {
        let g = Grid::unit(32).unwrap();
        let phi = ScalarField::constant(g, BoundaryCondition::Neumann, 0.2);
        // theta depends on y only (Dirichlet ghosts only matter on walls
        // where the face value is never used for interior buoyancy)
        let th = ScalarField::from_fn(g, BoundaryCondition::Dirichlet, |_, y| (PI * y).sin());
        let phys = PhysicalParams {
            ra: 5.0,
            ga: 1.0,
            g: 1.0,
        };
        let m = CoefficientModel::default();
        let ns = NavierStokes::new(g, NSStepConfig::new(1e-3)).unwrap();
        let mut u = MacField::zeros(g);
        let mut p = ns
            .balancing_pressure(&phi, &th, &PotentialParams::default(), &phys, &m)
            .unwrap();
        for _ in 0..3 {
            (u, p) = ns
                .step(
                    MomentumInputs {
                        u: &u,
                        phi: &phi,
                        theta: &th,
                        p: Some(&p),
                        extra: None,
                    },
                    &PotentialParams::default(),
                    &phys,
                    &m,
                )
                .unwrap();
        }
        assert!(u.norm_l2() < 1e-9, "{}", u.norm_l2());
        // hydrostatic balance: grad p equals the gradient forcing
        let mut f = buoyancy_force(&th, &phys);
        f.axpy(
            1.0,
            &capillary_force(&phi, &th, &PotentialParams::default(), &m).unwrap(),
        );
        let mut gp = grad(&p);
        gp.enforce_no_slip();
        assert!(gp.sub(&f).max_abs() < 1e-5 * f.max_abs());
    }

    #[test]
    fn projection_is_solenoidal_and_gauge_free() {
        let g = Grid::new(20, 16, 1.0, 0.8).unwrap();
        let ns = NavierStokes::new(g, NSStepConfig::new(1e-2)).unwrap();
        let ustar = MacField::from_fn(
            g,
            |x, y| x * (1.0 - x) * (3.0 * y).sin(),
            |x, y| (x + y).cos() * y * (0.8 - y),
        );
        let (u, p) = ns.project(&ustar).unwrap();
        assert!(div(&u).max_abs() < 1e-8);
        assert!(p.mean().abs() < 1e-12);
        assert!(u.is_no_slip());
        // a constant added to the pressure does not change grad p
        let shifted = p.map(|v| v + 3.0);
        let mut u2 = ustar.clone();
        u2.axpy(-1e-2, &grad(&shifted));
        u2.enforce_no_slip();
        assert!(u2.sub(&u).max_abs() < 1e-13);
    }

    #[test]
    fn unforced_kinetic_energy_decreases() {
        let g = Grid::unit(24).unwrap();
        let (phi, th) = zeros(g);
        let mut u = curl_of_fn(g, |x, y| {
            5.0 * (PI * x).sin().powi(2) * (PI * y).sin().powi(2) * (1.0 + x)
        });
        let m = CoefficientModel::default();
        let phys = PhysicalParams::default();
        for treat in [ViscousTreatment::SemiImplicit, ViscousTreatment::Explicit] {
            let cfg = NSStepConfig {
                viscous_treatment: treat,
                ..NSStepConfig::new(2e-4)
            };
            let ns = NavierStokes::new(g, cfg).unwrap();
            let mut e = u.dot(&u);
            for _ in 0..20 {
                u = ns
                    .step(
                        MomentumInputs {
                            u: &u,
                            phi: &phi,
                            theta: &th,
                            p: None,
                            extra: None,
                        },
                        &PotentialParams::default(),
                        &phys,
                        &m,
                    )
                    .unwrap()
                    .0;
                let e1 = u.dot(&u);
                assert!(e1 < e);
                e = e1;
            }
        }
    }

    #[test]
    fn first_mode_decays_at_stokes_rate() {
        let g = Grid::unit(24).unwrap();
        let em = stokes_eigenmodes(g, 1, &SolverConfig::default()).unwrap();
        let lam = em.eigenvalues[0];
        let nu = 1.0;
        let m = CoefficientModel::constant(nu, 1.0);
        let dt = 1e-4;
        let cfg = NSStepConfig {
            advection: false,
            ..NSStepConfig::new(dt)
        };
        let ns = NavierStokes::new(g, cfg).unwrap();
        let (phi, th) = zeros(g);
        let mut u = em.modes[0].scaled(1e-6);
        let n0 = u.norm_l2();
        let steps = (1.0 / (nu * lam) / dt).round() as usize;
        for _ in 0..steps {
            u = ns
                .step(
                    MomentumInputs {
                        u: &u,
                        phi: &phi,
                        theta: &th,
                        p: None,
                        extra: None,
                    },
                    &PotentialParams::default(),
                    &PhysicalParams::default(),
                    &m,
                )
                .unwrap()
                .0;
        }
        let t = steps as f64 * dt;
        let expect = n0 * (-nu * lam * t).exp();
        assert!(
            (u.norm_l2() - expect).abs() / expect < 0.02,
            "{} {}",
            u.norm_l2(),
            expect
        );
    }
}
