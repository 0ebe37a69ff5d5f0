//! Convergence studies and twin-run perturbation experiments.

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::diagnostics::{continuous_dependence_parts, LambdaParts};
use crate::driver::Simulation;
use crate::error::{Error, Result};
use crate::field::{MacField, ScalarField};
use crate::grid::Grid;
use crate::manufactured::Manufactured;
use crate::state::SimState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Levels are cell counts along x; `dt` shrinks with `h^2` from the
    /// configured value at the first level.
    Spatial,
    /// Levels are step counts on the configured grid.
    Temporal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Against the configured manufactured solution at `t_end`.
    Exact,
    /// Differences between consecutive levels (needs doubling for
    /// spatial studies).
    SelfConvergence,
}

/// L2 errors (or consecutive differences) per field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldErrors {
    pub theta: f64,
    pub phi: f64,
    pub u: f64,
}

/// Observed orders; `None` where an error is at round-off level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldOrders {
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub u: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub steps: usize,
    /// Error at this level (exact reference) or the difference to the
    /// next level (self-convergence; absent on the finest level).
    pub errors: Option<FieldErrors>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub kind: StudyKind,
    pub reference: Reference,
    pub levels: Vec<LevelResult>,
    /// Orders between consecutive error entries.
    pub orders: Vec<FieldOrders>,
}

impl ConvergenceTable {
    /// Smallest observed order of one field over the table.
    pub fn min_order(&self, field: impl Fn(&FieldOrders) -> Option<f64>) -> Option<f64> {
        let v: Vec<f64> = self.orders.iter().filter_map(field).collect();
        (!v.is_empty()).then(|| v.into_iter().fold(f64::INFINITY, f64::min))
    }
}

/// Errors below this are treated as exact.
const ERROR_FLOOR: f64 = 1e-14;

/// Configuration of one level.
pub fn level_config(
    cfg: &SimConfig,
    kind: StudyKind,
    levels: &[usize],
    idx: usize,
) -> Result<SimConfig> {
    let mut c = cfg.clone();
    let n = levels[idx];
    if n == 0 {
        return Err(Error::InvalidParameter("levels must be positive".into()));
    }
    match kind {
        StudyKind::Spatial => {
            let (nx0, ny0) = (cfg.grid.nx, cfg.grid.ny);
            if !(n * ny0).is_multiple_of(nx0) {
                return Err(Error::InvalidParameter(format!(
                    "level {n} does not keep the {nx0}x{ny0} aspect ratio"
                )));
            }
            c.grid.nx = n;
            c.grid.ny = n * ny0 / nx0;
            let r = levels[0] as f64 / n as f64;
            c.time.dt = cfg.time.dt * r * r;
        }
        StudyKind::Temporal => {
            c.time.dt = cfg.time.t_end / n as f64;
        }
    }
    c.time.snapshot_interval = 0;
    c.time.report_interval = usize::MAX;
    c.validate()?;
    Ok(c)
}

fn check_levels(levels: &[usize]) -> Result<()> {
    if levels.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "a convergence study needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("levels must increase".into()));
    }
    Ok(())
}

/// Runs one level to its end time.
pub fn run_level(cfg: SimConfig) -> Result<SimState> {
    let mut sim = Simulation::new(cfg)?;
    sim.run()?;
    Ok(sim.state().clone())
}

/// Cell average of a doubled grid onto the coarse grid.
pub fn restrict_scalar(fine: &ScalarField, coarse: Grid) -> Result<ScalarField> {
    let g = fine.grid;
    if g.nx != 2 * coarse.nx || g.ny != 2 * coarse.ny {
        return Err(Error::GridMismatch);
    }
    let mut out = ScalarField::zeros(coarse, fine.bc);
    for j in 0..coarse.ny {
        for i in 0..coarse.nx {
            let s = fine.get(2 * i, 2 * j)
                + fine.get(2 * i + 1, 2 * j)
                + fine.get(2 * i, 2 * j + 1)
                + fine.get(2 * i + 1, 2 * j + 1);
            out.set(i, j, 0.25 * s);
        }
    }
    Ok(out)
}

/// Face average of a doubled grid onto the coarse faces.
pub fn restrict_velocity(fine: &MacField, coarse: Grid) -> Result<MacField> {
    let g = fine.grid;
    if g.nx != 2 * coarse.nx || g.ny != 2 * coarse.ny {
        return Err(Error::GridMismatch);
    }
    let mut out = MacField::zeros(coarse);
    for j in 0..coarse.ny {
        for i in 0..=coarse.nx {
            out.ux[coarse.xface(i, j)] =
                0.5 * (fine.ux[g.xface(2 * i, 2 * j)] + fine.ux[g.xface(2 * i, 2 * j + 1)]);
        }
    }
    for j in 0..=coarse.ny {
        for i in 0..coarse.nx {
            out.uy[coarse.yface(i, j)] =
                0.5 * (fine.uy[g.yface(2 * i, 2 * j)] + fine.uy[g.yface(2 * i + 1, 2 * j)]);
        }
    }
    Ok(out)
}

fn l2(f: &ScalarField) -> f64 {
    f.dot(f).sqrt()
}

fn errors_between(a: &SimState, b: &SimState) -> Result<FieldErrors> {
    let g = a.grid();
    let (theta, phi, u) = if b.grid() == g {
        (b.theta.clone(), b.phi.clone(), b.u.clone())
    } else {
        (
            restrict_scalar(&b.theta, g)?,
            restrict_scalar(&b.phi, g)?,
            restrict_velocity(&b.u, g)?,
        )
    };
    Ok(FieldErrors {
        theta: l2(&a.theta.sub(&theta)),
        phi: l2(&a.phi.sub(&phi)),
        u: a.u.sub(&u).norm_l2(),
    })
}

/// Error of a level against the manufactured solution at its final time.
pub fn exact_errors(s: &SimState, m: &Manufactured) -> FieldErrors {
    let g = s.grid();
    FieldErrors {
        theta: l2(&s.theta.sub(&m.theta_exact(g, s.t))),
        phi: l2(&s.phi.sub(&m.phi_exact(g, s.t))),
        u: s.u.sub(&m.u_exact(g, s.t)).norm_l2(),
    }
}

fn order(e0: f64, e1: f64, ratio: f64) -> Option<f64> {
    (e0 > ERROR_FLOOR && e1 > ERROR_FLOOR).then(|| (e0 / e1).ln() / ratio.ln())
}

/// Assembles the table from finished level states.
pub fn assemble(
    cfg: &SimConfig,
    kind: StudyKind,
    reference: Reference,
    levels: &[usize],
    states: &[SimState],
) -> Result<ConvergenceTable> {
    check_levels(levels)?;
    if states.len() != levels.len() {
        return Err(Error::InvalidParameter(
            "one state per level expected".into(),
        ));
    }
    let errors: Vec<Option<FieldErrors>> = match reference {
        Reference::Exact => {
            let kind_m = cfg.initial.manufactured.ok_or_else(|| {
                Error::Precondition("an exact reference needs a manufactured solution".into())
            })?;
            states
                .iter()
                .map(|s| {
                    Some(exact_errors(
                        s,
                        &Manufactured::new(kind_m, &s.grid(), cfg.model()),
                    ))
                })
                .collect()
        }
        Reference::SelfConvergence => {
            let mut v = states
                .windows(2)
                .map(|w| errors_between(&w[0], &w[1]).map(Some))
                .collect::<Result<Vec<_>>>()?;
            v.push(None);
            v
        }
    };
    let mut rows = Vec::with_capacity(levels.len());
    for (k, (s, e)) in states.iter().zip(&errors).enumerate() {
        let c = level_config(cfg, kind, levels, k)?;
        rows.push(LevelResult {
            level: levels[k],
            nx: s.grid().nx,
            ny: s.grid().ny,
            dt: c.time.dt,
            steps: c.steps(),
            errors: *e,
        });
    }
    let mut orders = Vec::new();
    for k in 0..levels.len() - 1 {
        let (Some(a), Some(b)) = (errors[k], errors.get(k + 1).copied().flatten()) else {
            continue;
        };
        let r = levels[k + 1] as f64 / levels[k] as f64;
        orders.push(FieldOrders {
            theta: order(a.theta, b.theta, r),
            phi: order(a.phi, b.phi, r),
            u: order(a.u, b.u, r),
        });
    }
    Ok(ConvergenceTable {
        kind,
        reference,
        levels: rows,
        orders,
    })
}

/// Runs every level through `runner` (which may work in parallel) and
/// fits the orders.
pub fn convergence_study_with(
    cfg: &SimConfig,
    kind: StudyKind,
    reference: Reference,
    levels: &[usize],
    runner: impl FnOnce(Vec<SimConfig>) -> Vec<Result<SimState>>,
) -> Result<ConvergenceTable> {
    check_levels(levels)?;
    if reference == Reference::Exact && cfg.initial.manufactured.is_none() {
        return Err(Error::Precondition(
            "an exact reference needs a manufactured solution".into(),
        ));
    }
    let configs = (0..levels.len())
        .map(|k| level_config(cfg, kind, levels, k))
        .collect::<Result<Vec<_>>>()?;
    let states = runner(configs).into_iter().collect::<Result<Vec<_>>>()?;
    assemble(cfg, kind, reference, levels, &states)
}

pub fn convergence_study(
    cfg: &SimConfig,
    kind: StudyKind,
    reference: Reference,
    levels: &[usize],
) -> Result<ConvergenceTable> {
    convergence_study_with(cfg, kind, reference, levels, |cs| {
        cs.into_iter().map(run_level).collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSample {
    pub t: f64,
    pub velocity: f64,
    pub phase: f64,
    pub temperature: f64,
    pub total: f64,
}

impl LambdaSample {
    fn new(t: f64, p: LambdaParts) -> Self {
        Self {
            t,
            velocity: p.velocity,
            phase: p.phase,
            temperature: p.temperature,
            total: p.total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationResult {
    pub eps: f64,
    pub series: Vec<LambdaSample>,
    /// `Lambda(T)/Lambda(0)`; absent when `Lambda(0) = 0`.
    pub amplification: Option<f64>,
}

/// Twin runs from the configured data and from the data perturbed by
/// `eps` times a fixed smooth direction, stepped in lockstep to `t_end`.
/// `Lambda` is sampled at the configured report interval.
pub fn perturbation_experiment(
    cfg: &SimConfig,
    eps: f64,
    t_end: f64,
    seed: u64,
) -> Result<PerturbationResult> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps must be non-negative, got {eps}"
        )));
    }
    let mut base_cfg = cfg.clone();
    base_cfg.time.t_end = t_end;
    base_cfg.initial.perturbation = None;
    let mut twin_cfg = base_cfg.clone();
    twin_cfg.initial.perturbation = Some(crate::config::Perturbation { eps, seed });
    let mut a = Simulation::new(base_cfg)?;
    let mut b = Simulation::new(twin_cfg)?;
    let solver = cfg.solvers;
    let every = cfg.time.report_interval;
    let sample = |a: &Simulation, b: &Simulation| -> Result<LambdaSample> {
        Ok(LambdaSample::new(
            a.state().t,
            continuous_dependence_parts(a.state(), b.state(), &solver)?,
        ))
    };
    let mut series = vec![sample(&a, &b)?];
    while !a.is_finished() {
        a.step()?;
        b.step()?;
        if a.step_index() % every == 0 || a.is_finished() {
            series.push(sample(&a, &b)?);
        }
    }
    let l0 = series[0].total;
    let lt = series.last().map_or(0.0, |s| s.total);
    Ok(PerturbationResult {
        eps,
        amplification: (l0 > 0.0).then(|| lt / l0),
        series,
    })
}
