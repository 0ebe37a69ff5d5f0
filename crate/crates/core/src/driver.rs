//! The coupled time loop.
//!
//! One step advances `t^n -> t^{n+1}` as: temperature with `u^n`, phase
//! with `u^n`, then momentum with the new `theta`, `phi` (or the modal
//! system when the Galerkin velocity is enabled).

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::boussinesq::theta_step_with_source;
use crate::cahn_hilliard::{CHStepConfig, CahnHilliard};
use crate::config::{Mode, SimConfig};
use crate::diagnostics::{energy_report, EnergyReport, InvariantReport, InvariantTracker, Rates};
use crate::error::{Error, Result};
use crate::field::{BoundaryCondition, MacField, ScalarField};
use crate::galerkin::{galerkin_ns_step, GalerkinBasis, ModalForcing};
use crate::initial::initial_state;
use crate::io;
use crate::manufactured::Manufactured;
use crate::navier_stokes::{MomentumInputs, NSStepConfig, NavierStokes};
use crate::ops::ConvectionScheme;
use crate::state::{ModelParams, SimState};

/// One row of `invariants.csv`: running values up to `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantRow {
    pub step: usize,
    pub t: f64,
    pub mass_drift: f64,
    pub theta_max_excess: f64,
    pub min_separation: f64,
    pub energy_violations: usize,
    pub divergence_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub t: f64,
    pub invariants: InvariantReport,
    pub final_energy: EnergyReport,
}

struct Galerkin {
    basis: GalerkinBasis,
    coeffs: Vec<f64>,
}

pub struct Simulation {
    cfg: SimConfig,
    params: ModelParams,
    ch: CahnHilliard,
    ns: NavierStokes,
    galerkin: Option<Galerkin>,
    manufactured: Option<Manufactured>,
    state: SimState,
    step: usize,
    tracker: InvariantTracker,
    energy: Vec<EnergyReport>,
    invariants: Vec<InvariantRow>,
    modes: Vec<(f64, Vec<f64>)>,
}

impl Simulation {
    /// Starts from the configured initial data.
    pub fn new(cfg: SimConfig) -> Result<Self> {
        let s = initial_state(&cfg)?;
        Self::build(cfg, s, true)
    }

    /// Continues from a stored state; the step index is `round(t/dt)`.
    pub fn resume(cfg: SimConfig, state: SimState) -> Result<Self> {
        Self::build(cfg, state, false)
    }

    fn build(cfg: SimConfig, mut state: SimState, fresh: bool) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        grid.same_as(&state.grid())?;
        state.check()?;
        let manufactured = cfg
            .initial
            .manufactured
            .map(|k| Manufactured::new(k, &grid, cfg.model()));
        let mut params = cfg.model();
        let m = &mut params.coefficients;
        // Without sources and with monotone transport the temperature stays
        // in the initial range, which bounds the coefficient evaluations.
        if !m.theta_bound.is_finite()
            && manufactured.is_none()
            && cfg.boussinesq.scheme == ConvectionScheme::Upwind
        {
            m.theta_bound = state.theta.max_abs();
        }
        params.validate()?;
        let dt = cfg.time.dt;
        let ch = CahnHilliard::new(
            grid,
            params.potential,
            CHStepConfig {
                dt,
                newton: cfg.newton(),
                convection_scheme: cfg.cahn_hilliard.convection_scheme,
            },
        )?;
        let ns = NavierStokes::new(
            grid,
            NSStepConfig {
                dt,
                viscous_treatment: cfg.navier_stokes.viscous_treatment,
                linear: cfg.momentum_linear(),
                advection: cfg.navier_stokes.advection,
            },
        )?;
        if cfg.mode != Mode::Full {
            state.u = MacField::zeros(grid);
            state.p = ScalarField::zeros(grid, BoundaryCondition::Neumann);
        }
        let galerkin = if cfg.galerkin.enabled {
            let basis = GalerkinBasis::new(grid, cfg.galerkin.m, &cfg.solvers)?;
            let coeffs = basis.coefficients(&state.u);
            if fresh {
                state.u = basis.synthesize(&coeffs);
            }
            state.p = ScalarField::zeros(grid, BoundaryCondition::Neumann);
            Some(Galerkin { basis, coeffs })
        } else {
            None
        };
        if fresh && cfg.mode == Mode::Full && galerkin.is_none() && manufactured.is_none() {
            state.p = ns.balancing_pressure(
                &state.phi,
                &state.theta,
                &params.potential,
                &params.physics,
                &params.coefficients,
            )?;
        }
        let step = (state.t / dt).round() as usize;
        let tracker =
            InvariantTracker::new(&state, cfg.mode == Mode::DecoupledCh, params.potential)?;
        let mut sim = Self {
            cfg,
            params,
            ch,
            ns,
            galerkin,
            manufactured,
            state,
            step,
            tracker,
            energy: Vec::new(),
            invariants: Vec::new(),
            modes: Vec::new(),
        };
        sim.record(None)?;
        Ok(sim)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn total_steps(&self) -> usize {
        self.cfg.steps()
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.total_steps()
    }

    pub fn energy(&self) -> &[EnergyReport] {
        &self.energy
    }

    pub fn invariant_rows(&self) -> &[InvariantRow] {
        &self.invariants
    }

    pub fn invariants(&self) -> InvariantReport {
        self.tracker.report()
    }

    /// Modal coefficients when the Galerkin velocity is enabled.
    pub fn coefficients(&self) -> Option<&[f64]> {
        self.galerkin.as_ref().map(|g| g.coeffs.as_slice())
    }

    pub fn manufactured(&self) -> Option<&Manufactured> {
        self.manufactured.as_ref()
    }

    fn record(&mut self, prev: Option<&SimState>) -> Result<()> {
        let rates = prev.map(|p| Rates::backward(p, &self.state)).transpose()?;
        self.energy
            .push(energy_report(&self.state, rates.as_ref(), &self.params)?);
        let r = self.tracker.report();
        self.invariants.push(InvariantRow {
            step: self.step,
            t: self.state.t,
            mass_drift: r.mass_drift,
            theta_max_excess: r.theta_max_excess,
            min_separation: r.min_separation,
            energy_violations: r.energy_violations,
            divergence_max: r.divergence_max,
        });
        if let Some(g) = &self.galerkin {
            self.modes.push((self.state.t, g.coeffs.clone()));
        }
        Ok(())
    }

    fn advance(&self) -> Result<(SimState, Option<Vec<f64>>)> {
        let s = &self.state;
        let g = s.grid();
        let dt = self.cfg.time.dt;
        let t1 = (self.step + 1) as f64 * dt;
        let p = &self.params;
        let mms = self.manufactured.as_ref();
        let theta = if self.cfg.mode == Mode::DecoupledCh {
            s.theta.clone()
        } else {
            let src = mms.map(|m| m.theta_source(g, t1));
            theta_step_with_source(
                &s.theta,
                &s.u,
                &p.coefficients,
                dt,
                self.cfg.boussinesq.scheme,
                src.as_ref(),
                &self.cfg.theta_linear(),
            )?
        };
        let (phi, mu) = if self.cfg.mode == Mode::DecoupledHeat {
            (s.phi.clone(), s.mu.clone())
        } else {
            let src = mms.map(|m| m.phi_source(g, t1));
            self.ch.step_with_source(&s.phi, &s.u, src.as_ref())?
        };
        let mut coeffs = None;
        let (u, pr) = match (&self.cfg.mode, &self.galerkin) {
            (Mode::Full, Some(gal)) => {
                let extra = mms.map(|m| m.momentum_source(g, t1 - 0.5 * dt));
                let forcing = ModalForcing {
                    phi: &phi,
                    theta: &theta,
                    potential: &p.potential,
                    physics: &p.physics,
                    coefficients: &p.coefficients,
                    advection: self.cfg.navier_stokes.advection,
                    extra: extra.as_ref(),
                };
                let c = galerkin_ns_step(&gal.coeffs, &gal.basis, &forcing, dt)?;
                let u = gal.basis.synthesize(&c);
                coeffs = Some(c);
                (u, s.p.clone())
            }
            (Mode::Full, None) => {
                let extra = mms.map(|m| m.momentum_source(g, t1));
                self.ns.step(
                    MomentumInputs {
                        u: &s.u,
                        phi: &phi,
                        theta: &theta,
                        p: Some(&s.p),
                        extra: extra.as_ref(),
                    },
                    &p.potential,
                    &p.physics,
                    &p.coefficients,
                )?
            }
            _ => (s.u.clone(), s.p.clone()),
        };
        let next = SimState::new(t1, u, pr, phi, mu, theta)?;
        next.check()?;
        Ok((next, coeffs))
    }

    /// Advances one step; errors carry the index of the failed step.
    pub fn step(&mut self) -> Result<()> {
        let n = self.step + 1;
        let wrap = |e: Error| Error::Step {
            step: n,
            source: Box::new(e),
        };
        let (next, coeffs) = self.advance().map_err(wrap)?;
        let prev = std::mem::replace(&mut self.state, next);
        if let (Some(g), Some(c)) = (self.galerkin.as_mut(), coeffs) {
            g.coeffs = c;
        }
        self.step = n;
        self.tracker.observe(&self.state).map_err(wrap)?;
        if n.is_multiple_of(self.cfg.time.report_interval) || n == self.total_steps() {
            self.record(Some(&prev)).map_err(wrap)?;
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<RunSummary> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(self.summary())
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            steps: self.step,
            t: self.state.t,
            invariants: self.tracker.report(),
            final_energy: *self
                .energy
                .last()
                .expect("initial report is always recorded"),
        }
    }

    /// Runs to the end writing snapshots and reports into `dir`. On a
    /// failed step the last good state is saved under the tag `last_good`
    /// before the error is returned.
    pub fn run_with_output(&mut self, dir: &Path) -> Result<RunSummary> {
        let snaps = dir.join("snapshots");
        let every = self.cfg.time.snapshot_interval;
        if self.cfg.output.snapshots {
            io::write_state(&snaps, &format!("{:06}", self.step), &self.state)?;
        }
        let result = loop {
            if self.is_finished() {
                break Ok(());
            }
            if let Err(e) = self.step() {
                break Err(e);
            }
            if self.cfg.output.snapshots && every > 0 && self.step.is_multiple_of(every) {
                io::write_state(&snaps, &format!("{:06}", self.step), &self.state)?;
            }
        };
        self.write_reports(dir)?;
        match result {
            Ok(()) => {
                io::write_state(&dir.join("final"), "final", &self.state)?;
                let summary = self.summary();
                self.write_manifest(dir, &summary, None)?;
                Ok(summary)
            }
            Err(e) => {
                io::write_state(&dir.join("final"), "last_good", &self.state)?;
                let summary = self.summary();
                self.write_manifest(dir, &summary, Some(&e))?;
                Err(e)
            }
        }
    }

    pub fn write_reports(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        io::write_csv(&dir.join("energy.csv"), &self.energy)?;
        io::write_csv(&dir.join("invariants.csv"), &self.invariants)?;
        if let Some(g) = &self.galerkin {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["t".to_string()];
            header.extend((1..=g.basis.m()).map(|k| format!("g{k}")));
            let csv_err = |e: csv::Error| Error::Parse(e.to_string());
            w.write_record(&header).map_err(csv_err)?;
            for (t, c) in &self.modes {
                let row: Vec<String> = std::iter::once(*t)
                    .chain(c.iter().copied())
                    .map(|v| format!("{v:.17e}"))
                    .collect();
                w.write_record(&row).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
            std::fs::write(dir.join("modes.csv"), bytes)?;
        }
        Ok(())
    }

    fn write_manifest(&self, dir: &Path, summary: &RunSummary, err: Option<&Error>) -> Result<()> {
        let doc = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.cfg,
            "summary": summary,
            "error": err.map(|e| e.to_string()),
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(dir.join("run.json"), text)?;
        Ok(())
    }
}

/// Allowed drift of the phase mean.
pub const MASS_TOL: f64 = 1e-12;
/// Allowed growth of the temperature maximum.
pub const THETA_TOL: f64 = 1e-12;

/// Invariants the configuration promises that the run broke. The
/// temperature bound is only promised for upwind transport without
/// sources, the energy law only in the decoupled phase mode.
pub fn invariant_violations(cfg: &SimConfig, r: &InvariantReport) -> Vec<String> {
    let mut v = Vec::new();
    if r.mass_drift > MASS_TOL {
        v.push(format!("phase mean drifted by {:.3e}", r.mass_drift));
    }
    if cfg.initial.manufactured.is_none()
        && cfg.boussinesq.scheme == ConvectionScheme::Upwind
        && r.theta_max_excess > THETA_TOL
    {
        v.push(format!(
            "temperature maximum grew by {:.3e}",
            r.theta_max_excess
        ));
    }
    if r.energy_violations > 0 {
        v.push(format!("{} energy increases", r.energy_violations));
    }
    if !(r.min_separation > 0.0) {
        v.push("phase reached a pure state".into());
    }
    v
}

/// Runs a configuration to its end time without output.
pub fn run(cfg: SimConfig) -> Result<(SimState, RunSummary)> {
    let mut sim = Simulation::new(cfg)?;
    let summary = sim.run()?;
    Ok((sim.state, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{PhaseInit, Preset, VelocityInit};
    use crate::manufactured::ManufacturedKind;
    use crate::potential::{CoefficientModel, PhysicalParams};

    #[test]
    fn rest_state_stays_at_rest() {
        let mut cfg = SimConfig::unit(16, 1e-3, 5e-3);
        cfg.physics = PhysicalParams {
            ra: 1.0,
            ga: 0.0,
            g: 1.0,
        };
        let (s, summary) = run(cfg).unwrap();
        assert_eq!(summary.steps, 5);
        assert_eq!(s.u.max_abs(), 0.0);
        assert_eq!(s.phi.max_abs(), 0.0);
        assert_eq!(s.theta.max_abs(), 0.0);
        assert!(s.p.max_abs() < 1e-14);
    }

    #[test]
    fn decoupled_ch_conserves_mass_and_dissipates() {
        let mut cfg = SimConfig::unit(16, 1e-4, 2e-3);
        cfg.mode = Mode::DecoupledCh;
        cfg.initial.phi = Some(PhaseInit::Random {
            seed: 2,
            modes: 5,
            amplitude: 0.5,
            mean: 0.1,
        });
        cfg.initial.u = Some(VelocityInit::Vortex { amplitude: 1.0 });
        let (s, r) = run(cfg).unwrap();
        assert_eq!(s.u.max_abs(), 0.0);
        assert_eq!(r.invariants.energy_violations, 0);
        assert!(r.invariants.mass_drift <= 1e-12);
    }

    #[test]
    fn restart_matches_a_straight_run() {
        let mut cfg = SimConfig::unit(16, 2e-3, 2e-2);
        cfg.initial.preset = Some(Preset::StrongData);
        cfg.coefficients = CoefficientModel::default();
        let (straight, _) = run(cfg.clone()).unwrap();
        let mut half = cfg.clone();
        half.time.t_end = 1e-2;
        let (mid, _) = run(half).unwrap();
        let mut sim = Simulation::resume(cfg, mid).unwrap();
        assert_eq!(sim.step_index(), 5);
        sim.run().unwrap();
        let s = sim.state();
        let d = [
            s.phi.sub(&straight.phi).max_abs(),
            s.theta.sub(&straight.theta).max_abs(),
            s.u.sub(&straight.u).max_abs(),
            s.p.sub(&straight.p).max_abs(),
            s.mu.sub(&straight.mu).max_abs(),
        ];
        assert!(d.iter().all(|v| *v <= 1e-10), "{d:?}");
    }

    #[test]
    fn output_is_deterministic_and_restartable() {
        let mut cfg = SimConfig::unit(12, 2e-3, 1e-2);
        cfg.initial.preset = Some(Preset::StrongData);
        cfg.galerkin.enabled = true;
        cfg.galerkin.m = 6;
        cfg.time.snapshot_interval = 2;
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        Simulation::new(cfg.clone())
            .unwrap()
            .run_with_output(a.path())
            .unwrap();
        Simulation::new(cfg)
            .unwrap()
            .run_with_output(b.path())
            .unwrap();
        for f in ["energy.csv", "invariants.csv", "modes.csv"] {
            let x = std::fs::read(a.path().join(f)).unwrap();
            assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
        }
        let back = io::read_state(&a.path().join("final"), "final").unwrap();
        assert!((back.t - 1e-2).abs() < 1e-15);
        assert!(a.path().join("snapshots/phi_000004.csv").exists());
    }

    #[test]
    fn galerkin_tracks_the_manufactured_velocity() {
        let mut cfg = SimConfig::unit(16, 1e-3, 2e-2);
        cfg.initial.manufactured = Some(ManufacturedKind::CoupledTime);
        cfg.galerkin.enabled = true;
        cfg.galerkin.m = 24;
        let (s, _) = run(cfg.clone()).unwrap();
        let m = Manufactured::new(ManufacturedKind::CoupledTime, &s.grid(), cfg.model());
        let exact = m.u_exact(s.grid(), s.t);
        let e = s.u.sub(&exact).norm_l2() / exact.norm_l2();
        assert!(e < 0.05, "relative velocity error {e}");
    }
}
