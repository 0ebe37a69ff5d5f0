//! Run configuration read from TOML.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::elliptic::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::manufactured::ManufacturedKind;
use crate::navier_stokes::ViscousTreatment;
use crate::ops::ConvectionScheme;
use crate::potential::{CoefficientModel, PhysicalParams, PotentialParams};
use crate::state::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Temperature, phase and velocity all evolve.
    #[default]
    Full,
    /// Phase only, with `u = 0` and frozen temperature.
    DecoupledCh,
    /// Temperature only, with `u = 0` and frozen phase.
    DecoupledHeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between field snapshots; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_interval: usize,
    /// Steps between energy and invariant records.
    #[serde(default = "one_usize")]
    pub report_interval: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CahnHilliardConfig {
    #[serde(default)]
    pub convection_scheme: ConvectionScheme,
    /// Newton settings; defaults to `[solvers]`.
    #[serde(default)]
    pub newton: Option<SolverConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavierStokesConfig {
    #[serde(default)]
    pub viscous_treatment: ViscousTreatment,
    #[serde(default = "yes")]
    pub advection: bool,
    #[serde(default)]
    pub linear: Option<SolverConfig>,
}

impl Default for NavierStokesConfig {
    fn default() -> Self {
        Self {
            viscous_treatment: ViscousTreatment::SemiImplicit,
            advection: true,
            linear: None,
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BoussinesqConfig {
    #[serde(default)]
    pub scheme: ConvectionScheme,
    #[serde(default)]
    pub linear: Option<SolverConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalerkinConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_modes")]
    pub m: usize,
}

fn default_modes() -> usize {
    16
}

impl Default for GalerkinConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            m: default_modes(),
        }
    }
}

/// Initial phase field. Centers are given as fractions of the domain
/// lengths; widths and radii in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseInit {
    Constant {
        value: f64,
    },
    /// `amplitude tanh((x - center lx)/width)` across x.
    Strip {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// `amplitude tanh((r - radius)/width)` around `(cx lx, cy ly)`.
    Drop {
        cx: f64,
        cy: f64,
        radius: f64,
        width: f64,
        amplitude: f64,
    },
    /// `mean + amplitude cos(k pi x/lx) cos(l pi y/ly)`.
    Cosine {
        k: usize,
        l: usize,
        amplitude: f64,
        mean: f64,
    },
    /// Smooth random cosine series.
    Random {
        seed: u64,
        modes: usize,
        amplitude: f64,
        mean: f64,
    },
    /// Cell-wise uniform noise (rough data).
    Noise {
        seed: u64,
        amplitude: f64,
        mean: f64,
    },
    Snapshot {
        path: PathBuf,
    },
}

/// Initial temperature (homogeneous Dirichlet).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemperatureInit {
    Zero,
    /// `amplitude sin(k pi x/lx) sin(l pi y/ly)`.
    Sine {
        k: usize,
        l: usize,
        amplitude: f64,
    },
    /// Gaussian bump in the unit-scaled coordinates `(x/lx, y/ly)`,
    /// multiplied by a wall cutoff.
    Bump {
        cx: f64,
        cy: f64,
        width: f64,
        amplitude: f64,
    },
    Random {
        seed: u64,
        modes: usize,
        amplitude: f64,
    },
    Snapshot {
        path: PathBuf,
    },
}

/// Initial velocity (divergence-free, no-slip).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityInit {
    Zero,
    /// From the stream function `amplitude sin^2 sin^2`.
    Vortex {
        amplitude: f64,
    },
    Random {
        seed: u64,
        modes: usize,
        amplitude: f64,
    },
    /// `[ux, uy]` snapshot pair.
    Snapshot {
        ux: PathBuf,
        uy: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Smooth data with `|phi0| <= 0.9` and a smooth temperature bump.
    StrongData,
    /// Rough phase data (cell noise) with the same temperature.
    WeakData,
}

/// Seeded smooth perturbation `eps (dphi, dtheta, du)` added to the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub manufactured: Option<ManufacturedKind>,
    #[serde(default)]
    pub phi: Option<PhaseInit>,
    #[serde(default)]
    pub theta: Option<TemperatureInit>,
    #[serde(default)]
    pub u: Option<VelocityInit>,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub snapshots: bool,
    /// Holder exponent for the temperature monitor.
    #[serde(default = "default_beta")]
    pub holder_beta: f64,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_beta() -> f64 {
    0.25
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out(),
            snapshots: true,
            holder_beta: default_beta(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub mode: Mode,
    pub grid: GridConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub potential: PotentialParams,
    #[serde(default)]
    pub coefficients: CoefficientModel,
    #[serde(default)]
    pub physics: PhysicalParams,
    #[serde(default)]
    pub solvers: SolverConfig,
    #[serde(default)]
    pub cahn_hilliard: CahnHilliardConfig,
    #[serde(default)]
    pub navier_stokes: NavierStokesConfig,
    #[serde(default)]
    pub boussinesq: BoussinesqConfig,
    #[serde(default)]
    pub galerkin: GalerkinConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl SimConfig {
    /// Minimal configuration on `n x n` cells of the unit square.
    pub fn unit(n: usize, dt: f64, t_end: f64) -> Self {
        Self {
            mode: Mode::Full,
            grid: GridConfig {
                nx: n,
                ny: n,
                lx: 1.0,
                ly: 1.0,
            },
            time: TimeConfig {
                dt,
                t_end,
                snapshot_interval: 0,
                report_interval: 1,
            },
            potential: PotentialParams::default(),
            coefficients: CoefficientModel::default(),
            physics: PhysicalParams::default(),
            solvers: SolverConfig::default(),
            cahn_hilliard: CahnHilliardConfig::default(),
            navier_stokes: NavierStokesConfig::default(),
            boussinesq: BoussinesqConfig::default(),
            galerkin: GalerkinConfig::default(),
            initial: InitialConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Snapshot paths in the file are relative to the file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(PhaseInit::Snapshot { path }) = &mut self.initial.phi {
            fix(path);
        }
        if let Some(TemperatureInit::Snapshot { path }) = &mut self.initial.theta {
            fix(path);
        }
        if let Some(VelocityInit::Snapshot { ux, uy }) = &mut self.initial.u {
            fix(ux);
            fix(uy);
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)
    }

    pub fn model(&self) -> ModelParams {
        ModelParams {
            potential: self.potential,
            coefficients: self.coefficients,
            physics: self.physics,
        }
    }

    pub fn newton(&self) -> SolverConfig {
        self.cahn_hilliard.newton.unwrap_or(self.solvers)
    }

    pub fn momentum_linear(&self) -> SolverConfig {
        self.navier_stokes.linear.unwrap_or(self.solvers)
    }

    pub fn theta_linear(&self) -> SolverConfig {
        self.boussinesq.linear.unwrap_or(self.solvers)
    }

    /// Number of steps to reach `t_end`, rounding to the nearest step.
    pub fn steps(&self) -> usize {
        (self.time.t_end / self.time.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                t.dt
            )));
        }
        if !(t.t_end >= t.dt) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} must be at least dt = {}",
                t.t_end, t.dt
            )));
        }
        if t.report_interval == 0 {
            return Err(Error::InvalidParameter(
                "report_interval must be at least 1".into(),
            ));
        }
        self.model().validate()?;
        for s in [
            self.solvers,
            self.newton(),
            self.momentum_linear(),
            self.theta_linear(),
        ] {
            s.validate()?;
        }
        if self.galerkin.enabled && self.mode != Mode::Full {
            return Err(Error::InvalidParameter(
                "galerkin mode requires mode = \"full\"".into(),
            ));
        }
        if let Some(p) = self.initial.perturbation {
            if !(p.eps >= 0.0 && p.eps.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "perturbation eps must be non-negative, got {}",
                    p.eps
                )));
            }
        }
        if !(self.output.holder_beta > 0.0 && self.output.holder_beta < 1.0) {
            return Err(Error::InvalidParameter(
                "holder_beta must lie in (0,1)".into(),
            ));
        }
        Ok(())
    }
}
