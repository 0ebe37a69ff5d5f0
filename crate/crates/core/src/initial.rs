//! Initial data from the `[initial]` configuration.

use std::f64::consts::PI;

use crate::config::{PhaseInit, Preset, SimConfig, TemperatureInit, VelocityInit};
use crate::error::{Error, Result};
use crate::field::{BoundaryCondition, MacField, ScalarField};
use crate::grid::Grid;
use crate::io::{read_scalar, read_velocity};
use crate::manufactured::Manufactured;
use crate::ops::{curl_of_fn, div};
use crate::samples::{smooth_dirichlet, smooth_neumann, smooth_solenoidal, white_noise};
use crate::state::{SimState, DIVERGENCE_TOL};

fn preset_fields(p: Preset) -> (PhaseInit, TemperatureInit, VelocityInit) {
    let theta = TemperatureInit::Bump {
        cx: 0.5,
        cy: 0.5,
        width: 0.2,
        amplitude: 1.0,
    };
    let u = VelocityInit::Vortex { amplitude: 1.0 };
    let phi = match p {
        Preset::StrongData => PhaseInit::Random {
            seed: 7,
            modes: 3,
            amplitude: 0.9,
            mean: 0.0,
        },
        Preset::WeakData => PhaseInit::Noise {
            seed: 7,
            amplitude: 0.05,
            mean: 0.0,
        },
    };
    (phi, theta, u)
}

fn from_snapshot(grid: Grid, path: &std::path::Path, bc: BoundaryCondition) -> Result<ScalarField> {
    let (f, _) = read_scalar(path)?;
    grid.same_as(&f.grid)?;
    if f.bc != bc {
        return Err(Error::Precondition(format!(
            "{} carries {} conditions, expected {}",
            path.display(),
            f.bc.as_str(),
            bc.as_str()
        )));
    }
    Ok(f)
}

pub fn phase(grid: Grid, init: &PhaseInit) -> Result<ScalarField> {
    let (lx, ly) = (grid.lx, grid.ly);
    let n = BoundaryCondition::Neumann;
    Ok(match init {
        PhaseInit::Constant { value } => ScalarField::constant(grid, n, *value),
        PhaseInit::Strip {
            center,
            width,
            amplitude,
        } => ScalarField::from_fn(grid, n, |x, _| {
            amplitude * ((x - center * lx) / width).tanh()
        }),
        PhaseInit::Drop {
            cx,
            cy,
            radius,
            width,
            amplitude,
        } => ScalarField::from_fn(grid, n, |x, y| {
            let r = ((x - cx * lx).powi(2) + (y - cy * ly).powi(2)).sqrt();
            amplitude * ((r - radius) / width).tanh()
        }),
        PhaseInit::Cosine {
            k,
            l,
            amplitude,
            mean,
        } => ScalarField::from_fn(grid, n, |x, y| {
            mean + amplitude * (*k as f64 * PI * x / lx).cos() * (*l as f64 * PI * y / ly).cos()
        }),
        PhaseInit::Random {
            seed,
            modes,
            amplitude,
            mean,
        } => smooth_neumann(grid, *seed, *modes, *amplitude, *mean),
        PhaseInit::Noise {
            seed,
            amplitude,
            mean,
        } => white_noise(grid, *seed, *amplitude, *mean),
        PhaseInit::Snapshot { path } => from_snapshot(grid, path, n)?,
    })
}

pub fn temperature(grid: Grid, init: &TemperatureInit) -> Result<ScalarField> {
    let (lx, ly) = (grid.lx, grid.ly);
    let d = BoundaryCondition::Dirichlet;
    Ok(match init {
        TemperatureInit::Zero => ScalarField::zeros(grid, d),
        TemperatureInit::Sine { k, l, amplitude } => ScalarField::from_fn(grid, d, |x, y| {
            amplitude * (*k as f64 * PI * x / lx).sin() * (*l as f64 * PI * y / ly).sin()
        }),
        TemperatureInit::Bump {
            cx,
            cy,
            width,
            amplitude,
        } => ScalarField::from_fn(grid, d, |x, y| {
            let (sx, sy) = (x / lx, y / ly);
            let wall = 16.0 * sx * (1.0 - sx) * sy * (1.0 - sy);
            let r2 = (sx - cx).powi(2) + (sy - cy).powi(2);
            amplitude * wall * (-r2 / (width * width)).exp()
        }),
        TemperatureInit::Random {
            seed,
            modes,
            amplitude,
        } => smooth_dirichlet(grid, *seed, *modes, *amplitude),
        TemperatureInit::Snapshot { path } => from_snapshot(grid, path, d)?,
    })
}

pub fn velocity(grid: Grid, init: &VelocityInit) -> Result<MacField> {
    let (lx, ly) = (grid.lx, grid.ly);
    let u = match init {
        VelocityInit::Zero => MacField::zeros(grid),
        VelocityInit::Vortex { amplitude } => curl_of_fn(grid, |x, y| {
            amplitude * (PI * x / lx).sin().powi(2) * (PI * y / ly).sin().powi(2)
        }),
        VelocityInit::Random {
            seed,
            modes,
            amplitude,
        } => smooth_solenoidal(grid, *seed, *modes, *amplitude),
        VelocityInit::Snapshot { ux, uy } => {
            let (u, _) = read_velocity(ux, uy)?;
            grid.same_as(&u.grid)?;
            u
        }
    };
    let d = div(&u).max_abs();
    if d > DIVERGENCE_TOL * (1.0 + u.max_abs() / grid.h()) {
        return Err(Error::Precondition(format!(
            "initial velocity has divergence {d:.3e}"
        )));
    }
    Ok(u)
}

/// Builds `(u0, phi0, mu0, theta0)` at `t = 0` with `p = 0`. A manufactured
/// solution, when configured, supplies all fields; otherwise the preset
/// fills whatever the per-field entries leave open (a zero state without
/// either).
pub fn initial_state(cfg: &SimConfig) -> Result<SimState> {
    let grid = cfg.grid()?;
    let model = cfg.model();
    let (mut u, mut phi, mut theta) = if let Some(kind) = cfg.initial.manufactured {
        let m = Manufactured::new(kind, &grid, model);
        (
            m.u_exact(grid, 0.0),
            m.phi_exact(grid, 0.0),
            m.theta_exact(grid, 0.0),
        )
    } else {
        let (dp, dt, du) = match cfg.initial.preset {
            Some(p) => {
                let (a, b, c) = preset_fields(p);
                (Some(a), Some(b), Some(c))
            }
            None => (None, None, None),
        };
        let phi = match cfg.initial.phi.clone().or(dp) {
            Some(i) => phase(grid, &i)?,
            None => ScalarField::zeros(grid, BoundaryCondition::Neumann),
        };
        let theta = match cfg.initial.theta.clone().or(dt) {
            Some(i) => temperature(grid, &i)?,
            None => ScalarField::zeros(grid, BoundaryCondition::Dirichlet),
        };
        let u = match cfg.initial.u.clone().or(du) {
            Some(i) => velocity(grid, &i)?,
            None => MacField::zeros(grid),
        };
        (u, phi, theta)
    };
    if let Some(p) = cfg.initial.perturbation {
        phi.axpy(p.eps, &smooth_neumann(grid, p.seed, 3, 1.0, 0.0));
        theta.axpy(
            p.eps,
            &smooth_dirichlet(grid, p.seed.wrapping_add(1), 3, 1.0),
        );
        u.axpy(
            p.eps,
            &smooth_solenoidal(grid, p.seed.wrapping_add(2), 3, 1.0),
        );
    }
    if !(phi.max_abs() < 1.0) {
        return Err(Error::PhaseDomain(format!(
            "initial |phi| max = {} (the logarithmic potential needs |phi| < 1)",
            phi.max_abs()
        )));
    }
    if !(phi.mean().abs() < 1.0) {
        return Err(Error::PhaseDomain(format!("initial mean {}", phi.mean())));
    }
    if !u.is_no_slip() {
        return Err(Error::Precondition(
            "initial velocity violates no-slip".into(),
        ));
    }
    let mut s = SimState::at_rest(phi, theta, &cfg.potential)?;
    s.u = u;
    Ok(s)
}
