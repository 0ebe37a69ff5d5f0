//! Energy functionals, dual norms, identity residuals and empirical
//! inequality constants.

use serde::{Deserialize, Serialize};

use crate::cahn_hilliard::{chemical_potential, separation_delta};
use crate::elliptic::{NeumannSolver, SolverConfig, StokesSolver};
use crate::error::{Error, Result};
use crate::field::{MacField, ScalarField};
use crate::grid::Grid;
use crate::norms::{hessian_sq, holder_seminorm, w14_norm, NormKind, Normed};
use crate::ops::{
    div, grad, grad_on_cells, grad_on_nodes, scalar_on_nodes, scalar_on_xfaces, scalar_on_yfaces,
    sym_grad, velocity_gradient,
};
use crate::potential::PotentialParams;
use crate::state::{ModelParams, SimState};

/// Backward-difference time derivatives between two stored states.
#[derive(Debug, Clone)]
pub struct Rates {
    pub theta_t: ScalarField,
    pub phi_t: ScalarField,
    pub u_t: MacField,
}

impl Rates {
    pub fn backward(prev: &SimState, cur: &SimState) -> Result<Self> {
        prev.grid().same_as(&cur.grid())?;
        let dt = cur.t - prev.t;
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "states must be ordered in time, dt = {dt}"
            )));
        }
        Ok(Self {
            theta_t: cur.theta.sub(&prev.theta).scaled(1.0 / dt),
            phi_t: cur.phi.sub(&prev.phi).scaled(1.0 / dt),
            u_t: cur.u.sub(&prev.u).scaled(1.0 / dt),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    /// `1/2 |u|^2`
    pub kinetic: f64,
    /// `1/2 |grad phi|^2`
    pub interfacial: f64,
    /// `int W(phi)`
    pub potential_int: f64,
    /// `a lambda0 (interfacial + potential_int) + kinetic`
    pub e1: f64,
    /// `int nu |Du|^2 + 1/2 |grad mu|^2 + 1/2 |theta_t|^2 + (u.grad phi, mu)`
    pub beta: f64,
    /// `(u.grad phi, mu)`, evaluated as `-(phi u, grad mu)`
    pub coupling: f64,
    /// `kappa_lo/2 |grad theta_t|^2 + 1/4 |grad phi_t|^2 + 1/2 |u_t|^2`
    pub gamma: f64,
    /// `|grad u|^2 + |phi|^2 + |mu|_{H1}^2 + |theta|_{H1}^2`
    pub g_functional: f64,
    pub grad_mu_sq: f64,
    pub grad_u_sq: f64,
}

/// `(a, b)` face pairing `sum a_f b_f w_f` over all faces.
fn face_dot(g: &Grid, ax: &[f64], bx: &[f64], ay: &[f64], by: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let k = g.xface(i, j);
            s += g.xface_weight(i) * ax[k] * bx[k];
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let k = g.yface(i, j);
            s += g.yface_weight(j) * ay[k] * by[k];
        }
    }
    s
}

/// `(phi u, grad mu)` on faces.
pub fn phi_u_grad_mu(phi: &ScalarField, u: &MacField, mu: &ScalarField) -> f64 {
    let g = phi.grid;
    let gm = grad(mu);
    let (px, py) = (scalar_on_xfaces(phi), scalar_on_yfaces(phi));
    let ax: Vec<f64> = px.iter().zip(&u.ux).map(|(a, b)| a * b).collect();
    let ay: Vec<f64> = py.iter().zip(&u.uy).map(|(a, b)| a * b).collect();
    face_dot(&g, &ax, &gm.ux, &ay, &gm.uy)
}

/// `int nu(theta) |Du|^2` with viscosity sampled where each strain
/// component lives.
pub fn viscous_dissipation(u: &MacField, theta: &ScalarField, params: &ModelParams) -> Result<f64> {
    let g = u.grid;
    let d = sym_grad(u);
    let mut s = 0.0;
    for c in 0..g.n_cells() {
        let nu = params.coefficients.eval(theta.values[c])?.nu;
        s += nu * (d.xx[c] * d.xx[c] + d.yy[c] * d.yy[c]) * g.cell_area();
    }
    let tn = scalar_on_nodes(theta);
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let k = g.node(i, j);
            let nu = params.coefficients.eval(tn[k])?.nu;
            s += g.node_weight(i, j) * nu * (d.xy[k] * d.xy[k] + d.yx[k] * d.yx[k]);
        }
    }
    Ok(s)
}

pub fn energy_report(
    s: &SimState,
    rates: Option<&Rates>,
    params: &ModelParams,
) -> Result<EnergyReport> {
    let g = s.grid();
    let pot = &params.potential;
    let m = &params.coefficients;
    let kinetic = 0.5 * s.u.dot(&s.u);
    let gp = grad(&s.phi);
    let interfacial = 0.5 * gp.dot(&gp);
    let potential_int = s.phi.values.iter().map(|v| pot.w(*v)).sum::<f64>() * g.cell_area();
    let e1 = m.a * m.lambda0 * (interfacial + potential_int) + kinetic;
    let gmu = grad(&s.mu);
    let grad_mu_sq = gmu.dot(&gmu);
    let gu = velocity_gradient(&s.u).norm();
    let grad_u_sq = gu * gu;
    let coupling = -phi_u_grad_mu(&s.phi, &s.u, &s.mu);
    let theta_t_sq = rates.map_or(0.0, |r| r.theta_t.dot(&r.theta_t));
    let beta = viscous_dissipation(&s.u, &s.theta, params)?
        + 0.5 * grad_mu_sq
        + 0.5 * theta_t_sq
        + coupling;
    let gamma = match rates {
        Some(r) => {
            let gt = grad(&r.theta_t);
            let gf = grad(&r.phi_t);
            0.5 * m.kappa_lo * gt.dot(&gt) + 0.25 * gf.dot(&gf) + 0.5 * r.u_t.dot(&r.u_t)
        }
        None => 0.0,
    };
    let gth = grad(&s.theta);
    let g_functional = grad_u_sq
        + s.phi.dot(&s.phi)
        + s.mu.dot(&s.mu)
        + grad_mu_sq
        + s.theta.dot(&s.theta)
        + gth.dot(&gth);
    Ok(EnergyReport {
        t: s.t,
        kinetic,
        interfacial,
        potential_int,
        e1,
        beta,
        coupling,
        gamma,
        g_functional,
        grad_mu_sq,
        grad_u_sq,
    })
}

/// `|grad A0^{-1} f|` for mean-free `f`.
pub fn v0_dual_norm(f: &ScalarField, cfg: &SolverConfig) -> Result<f64> {
    NeumannSolver::new(f.grid, *cfg)?.dual_norm(f)
}

/// `|grad S^{-1} g|`.
pub fn vsigma_dual_norm(g: &MacField, cfg: &SolverConfig) -> Result<f64> {
    StokesSolver::new(g.grid, *cfg)?.dual_norm(g)
}

/// Both sides of the Kronecker identity for divergence-free no-slip `u`:
/// `((grad phi (x) grad phi, grad u), -(phi u, grad mu))` with
/// `mu = -Lap phi + W'(phi)`. The tensor pairing uses the cell/node
/// placement of the capillary stress.
pub fn kronecker_terms(
    phi: &ScalarField,
    u: &MacField,
    pot: &PotentialParams,
) -> Result<(f64, f64)> {
    let g = phi.grid;
    g.same_as(&u.grid)?;
    let mu = chemical_potential(phi, pot)?;
    let gu = velocity_gradient(u);
    let (cx, cy) = grad_on_cells(phi);
    let mut lhs = 0.0;
    for c in 0..g.n_cells() {
        lhs += (cx[c] * cx[c] * gu.xx[c] + cy[c] * cy[c] * gu.yy[c]) * g.cell_area();
    }
    let (nx_, ny_) = grad_on_nodes(phi);
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let k = g.node(i, j);
            lhs += g.node_weight(i, j) * nx_[k] * ny_[k] * (gu.xy[k] + gu.yx[k]);
        }
    }
    Ok((lhs, -phi_u_grad_mu(phi, u, &mu)))
}

/// `|(grad phi (x) grad phi, grad u) + (phi u, grad mu)|`.
pub fn kronecker_residual(phi: &ScalarField, u: &MacField, pot: &PotentialParams) -> Result<f64> {
    let (a, b) = kronecker_terms(phi, u, pot)?;
    Ok((a - b).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParts {
    pub velocity: f64,
    pub phase: f64,
    pub temperature: f64,
}

impl LambdaParts {
    pub fn total(&self) -> f64 {
        self.velocity + self.phase + self.temperature
    }
}

/// `|u1-u2|_{V_sigma'}^2 + |(phi1-phi2) - mean|_{V0'}^2 + |theta1-theta2|^2`.
pub fn continuous_dependence_parts(
    s1: &SimState,
    s2: &SimState,
    cfg: &SolverConfig,
) -> Result<LambdaParts> {
    let g = s1.grid();
    g.same_as(&s2.grid())?;
    let du = s1.u.sub(&s2.u);
    let dphi = s1.phi.sub(&s2.phi).mean_free();
    let dth = s1.theta.sub(&s2.theta);
    let velocity = if du.max_abs() == 0.0 {
        0.0
    } else {
        vsigma_dual_norm(&du, cfg)?.powi(2)
    };
    let phase = if dphi.max_abs() == 0.0 {
        0.0
    } else {
        v0_dual_norm(&dphi, cfg)?.powi(2)
    };
    Ok(LambdaParts {
        velocity,
        phase,
        temperature: dth.dot(&dth),
    })
}

pub fn continuous_dependence_lambda(
    s1: &SimState,
    s2: &SimState,
    cfg: &SolverConfig,
) -> Result<f64> {
    Ok(continuous_dependence_parts(s1, s2, cfg)?.total())
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0 && num.is_finite() && den.is_finite()).then(|| num / den)
}

/// `|grad u| / |Du|`; `None` for `u = 0`.
pub fn korn_ratio(u: &MacField) -> Option<f64> {
    ratio(velocity_gradient(u).norm(), sym_grad(u).norm())
}

/// `|phi|_{H2}^2 / (|phi|^2 + |grad mu| |grad phi|)`.
pub fn phase_h2_ratio(phi: &ScalarField, mu: &ScalarField) -> Option<f64> {
    let gp = grad(phi);
    let h1 = gp.dot(&gp);
    let l2 = phi.dot(phi);
    let h2 = l2 + h1 + hessian_sq(phi);
    ratio(h2, l2 + grad(mu).norm_l2() * h1.sqrt())
}

/// `(|mean mu| + |W'(phi)|_{L1}) / (1 + |grad mu|)`.
pub fn mean_mu_ratio(phi: &ScalarField, mu: &ScalarField, pot: &PotentialParams) -> Option<f64> {
    let l1 = phi.values.iter().map(|s| pot.wp(*s).abs()).sum::<f64>() * phi.grid.cell_area();
    ratio(mu.mean().abs() + l1, 1.0 + grad(mu).norm_l2())
}

/// `|f|^2 / (|f|_{V0'} |grad f|)` for mean-free `f`; at most 1.
pub fn interpolation_ratio(f: &ScalarField, cfg: &SolverConfig) -> Result<Option<f64>> {
    if f.max_abs() == 0.0 {
        return Ok(None);
    }
    Ok(ratio(f.dot(f), v0_dual_norm(f, cfg)? * grad(f).norm_l2()))
}

/// `|p|_{L4} / (|grad S^{-1} g|^{1/2} |g|^{1/2})` for the Stokes pressure.
pub fn stokes_pressure_ratio(g: &MacField, cfg: &SolverConfig) -> Result<Option<f64>> {
    if g.max_abs() == 0.0 {
        return Ok(None);
    }
    let sol = StokesSolver::new(g.grid, *cfg)?.solve(g)?;
    let dual = velocity_gradient(&sol.u).norm();
    Ok(ratio(
        sol.p.norm(NormKind::L4)?,
        (dual * g.norm_l2()).sqrt(),
    ))
}

/// `(|u|_{H2} + |p|_{H1}) / |g|` for the Stokes solution.
pub fn stokes_regularity_ratio(g: &MacField, cfg: &SolverConfig) -> Result<Option<f64>> {
    if g.max_abs() == 0.0 {
        return Ok(None);
    }
    let sol = StokesSolver::new(g.grid, *cfg)?.solve(g)?;
    let ph1 = (sol.p.dot(&sol.p) + grad(&sol.p).dot(&grad(&sol.p))).sqrt();
    Ok(ratio(sol.u.norm(NormKind::H2)? + ph1, g.norm_l2()))
}

/// Norms entering the `W^{1,4}` / Holder / `H^2` interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderSample {
    pub w14: f64,
    /// `|f|_inf + [f]_gamma`
    pub c_gamma: f64,
    pub h2: f64,
}

pub fn holder_sample(f: &ScalarField, gamma: f64) -> Result<HolderSample> {
    let c_gamma = f.max_abs() + holder_seminorm(&f.grid, &f.values, gamma)?;
    Ok(HolderSample {
        w14: w14_norm(f),
        c_gamma,
        h2: f.norm(NormKind::H2)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub xi: f64,
    /// Smallest `C` with `w14 <= C c_gamma^xi h2^(1-xi)` on every sample.
    pub c: f64,
}

/// Least-squares exponent in `log(w14/h2) = log C + xi log(c_gamma/h2)`.
pub fn fit_holder_exponent(samples: &[HolderSample]) -> Result<HolderFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.w14 > 0.0 && s.c_gamma > 0.0 && s.h2 > 0.0)
        .map(|s| ((s.c_gamma / s.h2).ln(), (s.w14 / s.h2).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Precondition(format!(
            "need at least 3 nondegenerate samples, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx < 1e-12 {
        return Err(Error::Precondition(
            "samples do not vary in c_gamma / h2".into(),
        ));
    }
    let xi = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let c = pts
        .iter()
        .map(|p| (p.1 - xi * p.0).exp())
        .fold(0.0, f64::max);
    Ok(HolderFit { xi, c })
}

/// Running maximum of a realized ratio.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstantFit {
    pub max: f64,
    pub samples: usize,
    pub degenerate: usize,
}

impl ConstantFit {
    pub fn observe(&mut self, r: Option<f64>) {
        match r {
            Some(v) => {
                self.max = self.max.max(v);
                self.samples += 1;
            }
            None => self.degenerate += 1,
        }
    }
}

/// Realized ratios of one state; `None` marks a degenerate denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub korn: Option<f64>,
    pub phase_h2: Option<f64>,
    pub mean_mu: Option<f64>,
    pub interpolation: Option<f64>,
    pub theta_holder: Option<HolderSample>,
}

pub fn inequality_checks(
    s: &SimState,
    gamma: f64,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<InequalityReport> {
    let dphi = s.phi.mean_free();
    Ok(InequalityReport {
        korn: korn_ratio(&s.u),
        phase_h2: phase_h2_ratio(&s.phi, &s.mu),
        mean_mu: mean_mu_ratio(&s.phi, &s.mu, &params.potential),
        interpolation: interpolation_ratio(&dphi, cfg)?,
        theta_holder: if s.theta.max_abs() > 0.0 {
            Some(holder_sample(&s.theta, gamma)?)
        } else {
            None
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InvariantReport {
    pub mass_drift: f64,
    pub theta_max_excess: f64,
    pub min_separation: f64,
    pub energy_violations: usize,
    pub divergence_max: f64,
    pub steps: usize,
}

/// Slack allowed for a discrete energy increase before it counts.
pub const ENERGY_SLACK: f64 = 1e-10;

/// Sequential fold of a trajectory into an [`InvariantReport`].
#[derive(Debug, Clone)]
pub struct InvariantTracker {
    mean0: f64,
    theta0: f64,
    track_energy: bool,
    potential: PotentialParams,
    last_energy: f64,
    report: InvariantReport,
}

impl InvariantTracker {
    /// `track_energy` counts increases of the Cahn-Hilliard energy, which
    /// is only monotone in the decoupled setting.
    pub fn new(initial: &SimState, track_energy: bool, potential: PotentialParams) -> Result<Self> {
        let mut t = Self {
            mean0: initial.phi.mean(),
            theta0: initial.theta.max_abs(),
            track_energy,
            potential,
            last_energy: crate::cahn_hilliard::ch_energy(&initial.phi, &potential),
            report: InvariantReport {
                min_separation: 1.0,
                ..Default::default()
            },
        };
        t.fold(initial)?;
        t.report.steps = 0;
        Ok(t)
    }

    fn fold(&mut self, s: &SimState) -> Result<()> {
        let r = &mut self.report;
        r.mass_drift = r.mass_drift.max((s.phi.mean() - self.mean0).abs());
        r.theta_max_excess = r.theta_max_excess.max(s.theta.max_abs() - self.theta0);
        r.min_separation = r.min_separation.min(separation_delta(&s.phi)?);
        r.divergence_max = r.divergence_max.max(div(&s.u).max_abs());
        Ok(())
    }

    pub fn observe(&mut self, s: &SimState) -> Result<()> {
        self.fold(s)?;
        self.report.steps += 1;
        if self.track_energy {
            let e = crate::cahn_hilliard::ch_energy(&s.phi, &self.potential);
            if e > self.last_energy + ENERGY_SLACK * (1.0 + self.last_energy.abs()) {
                self.report.energy_violations += 1;
            }
            self.last_energy = e;
        }
        Ok(())
    }

    pub fn report(&self) -> InvariantReport {
        self.report
    }
}

/// Aggregates a whole trajectory; the first state is the reference.
pub fn invariant_report(
    trajectory: &[SimState],
    track_energy: bool,
    potential: PotentialParams,
) -> Result<InvariantReport> {
    let (first, rest) = trajectory
        .split_first()
        .ok_or_else(|| Error::Precondition("empty trajectory".into()))?;
    let mut t = InvariantTracker::new(first, track_energy, potential)?;
    for s in rest {
        t.observe(s)?;
    }
    Ok(t.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BoundaryCondition;
    use crate::samples::{smooth_neumann, smooth_solenoidal};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn zero_state(g: Grid) -> SimState {
        SimState::at_rest(
            ScalarField::zeros(g, BoundaryCondition::Neumann),
            ScalarField::zeros(g, BoundaryCondition::Dirichlet),
            &PotentialParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn zero_state_reports_zero() {
        let g = Grid::unit(8).unwrap();
        let s = zero_state(g);
        let r = energy_report(&s, None, &ModelParams::default()).unwrap();
        for v in [
            r.kinetic,
            r.interfacial,
            r.potential_int,
            r.e1,
            r.beta,
            r.gamma,
            r.g_functional,
        ] {
            assert_eq!(v, 0.0);
        }
        let ineq =
            inequality_checks(&s, 0.25, &ModelParams::default(), &SolverConfig::default()).unwrap();
        assert!(ineq.korn.is_none() && ineq.interpolation.is_none() && ineq.theta_holder.is_none());
        let inv =
            invariant_report(std::slice::from_ref(&s), true, PotentialParams::default()).unwrap();
        assert_eq!(
            inv.mass_drift + inv.theta_max_excess + inv.divergence_max,
            0.0
        );
        assert_eq!(inv.energy_violations, 0);
        assert_eq!(
            continuous_dependence_lambda(&s, &s, &SolverConfig::default()).unwrap(),
            0.0
        );
        assert!(invariant_report(&[], true, PotentialParams::default()).is_err());
    }

    fn strip(n: usize) -> SimState {
        let g = Grid::unit(n).unwrap();
        let phi = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, _| {
            0.8 * ((x - 0.5) / 0.1).tanh()
        });
        SimState::at_rest(
            phi,
            ScalarField::zeros(g, BoundaryCondition::Dirichlet),
            &PotentialParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn e1_is_grid_consistent() {
        let p = ModelParams::default();
        let e: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| energy_report(&strip(n), None, &p).unwrap().e1)
            .collect();
        let r = energy_report(&strip(64), None, &p).unwrap();
        assert!(
            (r.e1 - p.coefficients.a * p.coefficients.lambda0 * (r.interfacial + r.potential_int))
                .abs()
                < 1e-14
        );
        let order = ((e[0] - e[1]) / (e[1] - e[2])).abs().log2();
        assert!(order > 1.8, "{e:?} order {order}");
    }

    #[test]
    fn coupling_skew_form_is_second_order() {
        let pot = PotentialParams::default();
        let mut res = Vec::new();
        for n in [32, 64, 128] {
            let g = Grid::unit(n).unwrap();
            let phi = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, y| {
                0.5 * (PI * x).cos() * (PI * y).cos() + 0.2 * (2.0 * PI * y).cos()
            });
            let u = crate::ops::curl_of_fn(g, |x, y| {
                (PI * x).sin().powi(2) * (PI * y).sin().powi(2) * (1.0 + x * y)
            });
            let mu = chemical_potential(&phi, &pot).unwrap();
            // direct form (u.grad phi, mu) with cell-centred velocity
            let (ux, uy) = crate::ops::velocity_on_cells(&u);
            let (px, py) = grad_on_cells(&phi);
            let direct: f64 = (0..g.n_cells())
                .map(|c| (ux[c] * px[c] + uy[c] * py[c]) * mu.values[c])
                .sum::<f64>()
                * g.cell_area();
            res.push((direct + phi_u_grad_mu(&phi, &u, &mu)).abs());
        }
        assert!(res[0] / res[1] > 3.3 && res[1] / res[2] > 3.3, "{res:?}");
    }

    #[test]
    fn dual_norm_oracles() {
        let g = Grid::unit(128).unwrap();
        let f = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, _| (PI * x).cos());
        let cfg = SolverConfig::default();
        let v = v0_dual_norm(&f, &cfg).unwrap();
        let exact = 1.0 / (2f64.sqrt() * PI);
        assert!((v - exact).abs() / exact < 0.01);
        assert!((v0_dual_norm(&f.scaled(2.0), &cfg).unwrap() - 2.0 * v).abs() < 1e-10);
        assert_eq!(v0_dual_norm(&f.scaled(0.0), &cfg).unwrap(), 0.0);
    }

    #[test]
    fn kronecker_trivial_cases() {
        let g = Grid::unit(16).unwrap();
        let pot = PotentialParams::default();
        let phi = smooth_neumann(g, 1, 3, 0.8, 0.0);
        assert_eq!(
            kronecker_residual(&phi, &MacField::zeros(g), &pot).unwrap(),
            0.0
        );
        let u = smooth_solenoidal(g, 2, 3, 1.0);
        let c = ScalarField::constant(g, BoundaryCondition::Neumann, 0.3);
        assert!(kronecker_residual(&c, &u, &pot).unwrap() < 1e-14);
    }

    #[test]
    fn kronecker_residual_is_second_order() {
        let pot = PotentialParams::default();
        let r: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let g = Grid::unit(n).unwrap();
                let phi = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, y| {
                    0.6 * (PI * x).cos() * (2.0 * PI * y).cos() + 0.2 * (PI * y).cos()
                });
                let u = crate::ops::curl_of_fn(g, |x, y| {
                    (PI * x).sin().powi(2) * (PI * y).sin().powi(2) * (1.0 + x)
                });
                kronecker_residual(&phi, &u, &pot).unwrap()
            })
            .collect();
        let o1 = (r[0] / r[1]).log2();
        let o2 = (r[1] / r[2]).log2();
        assert!(o1 > 1.8 && o2 > 1.8, "{r:?}");
    }

    #[test]
    fn lambda_definition_and_scaling() {
        let g = Grid::unit(24).unwrap();
        let s1 = strip(24);
        let bump = ScalarField::from_fn(g, BoundaryCondition::Dirichlet, |x, y| {
            (PI * x).sin() * (PI * y).sin()
        });
        let eps = 1e-3 / bump.dot(&bump).sqrt();
        let mut s2 = s1.clone();
        s2.theta = s1.theta.add(&bump.scaled(eps));
        let l = continuous_dependence_lambda(&s1, &s2, &SolverConfig::default()).unwrap();
        assert!((l - 1e-6).abs() < 1e-15);
        let mut s3 = s1.clone();
        s3.phi = s1.phi.add(&smooth_neumann(g, 4, 3, 1e-3, 0.0));
        s3.u = smooth_solenoidal(g, 4, 3, 1e-3);
        let mut s4 = s1.clone();
        s4.phi = s1.phi.add(&smooth_neumann(g, 4, 3, 2e-3, 0.0));
        s4.u = smooth_solenoidal(g, 4, 3, 2e-3);
        let cfg = SolverConfig::default();
        let (a, b) = (
            continuous_dependence_lambda(&s1, &s3, &cfg).unwrap(),
            continuous_dependence_lambda(&s1, &s4, &cfg).unwrap(),
        );
        assert!(a > 0.0 && (b / a - 4.0).abs() < 1e-6);
    }

    #[test]
    fn holder_fit_recovers_a_power_law() {
        let samples: Vec<HolderSample> = (1..8)
            .map(|k| {
                let c_gamma = 1.0 + k as f64;
                let h2 = 10.0 * (k * k) as f64;
                HolderSample {
                    c_gamma,
                    h2,
                    w14: 2.0 * c_gamma.powf(0.6) * h2.powf(0.4),
                }
            })
            .collect();
        let fit = fit_holder_exponent(&samples).unwrap();
        assert!((fit.xi - 0.6).abs() < 1e-10 && (fit.c - 2.0).abs() < 1e-9);
        assert!(fit_holder_exponent(&samples[..2]).is_err());
    }

    #[test]
    fn interpolation_holds_exactly() {
        let g = Grid::unit(32).unwrap();
        for seed in 0..5 {
            let f = smooth_neumann(g, seed, 6, 1.0, 0.0);
            let r = interpolation_ratio(&f, &SolverConfig::default())
                .unwrap()
                .unwrap();
            assert!(r <= 1.0 + 1e-9 && r > 0.1);
        }
    }

    #[test]
    fn stokes_ratios_are_finite() {
        let g = Grid::unit(16).unwrap();
        let f = smooth_solenoidal(g, 9, 3, 1.0);
        let cfg = SolverConfig::default();
        let a = stokes_pressure_ratio(&f, &cfg).unwrap().unwrap();
        let b = stokes_regularity_ratio(&f, &cfg).unwrap().unwrap();
        assert!(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0);
        assert!(stokes_pressure_ratio(&MacField::zeros(g), &cfg)
            .unwrap()
            .is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn korn_ratio_in_range(seed in 0u64..10_000, modes in 1usize..6) {
            let g = Grid::new(20, 16, 1.0, 0.9).unwrap();
            let u = smooth_solenoidal(g, seed, modes, 1.0);
            let r = korn_ratio(&u).unwrap();
            prop_assert!(r >= 1.0 - 1e-12 && r <= 2f64.sqrt() * (1.0 + 2.0 * g.h()));
        }

        #[test]
        fn lambda_is_quadratic(seed in 0u64..1000, s in 0.1f64..3.0) {
            let g = Grid::unit(12).unwrap();
            let base = strip(12);
            let mk = |a: f64| {
                let mut t = base.clone();
                t.phi = base.phi.add(&smooth_neumann(g, seed, 3, 1e-2 * a, 0.0));
                t.theta = crate::samples::smooth_dirichlet(g, seed, 2, 1e-2 * a);
                t
            };
            let cfg = SolverConfig::default();
            let l1 = continuous_dependence_lambda(&base, &mk(1.0), &cfg).unwrap();
            let ls = continuous_dependence_lambda(&base, &mk(s), &cfg).unwrap();
            prop_assert!(l1 > 0.0);
            prop_assert!((ls / l1 - s * s).abs() < 1e-6 * s * s);
        }
    }
}
