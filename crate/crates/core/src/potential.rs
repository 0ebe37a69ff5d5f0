//! Flory-Huggins potential and temperature-dependent coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `W(s) = A/2 [(1+s) ln(1+s) + (1-s) ln(1-s)] - B/2 s^2` with `0 < A < B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self { a: 1.0, b: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialPart {
    W,
    Wp,
    Wpp,
    /// Convex part `A/2 [(1+s) ln(1+s) + (1-s) ln(1-s)]`.
    F,
    Fp,
    Fpp,
}

impl PotentialParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = Self { a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.is_finite() && self.b.is_finite() && 0.0 < self.a && self.a < self.b {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "potential needs 0 < A < B, got A={} B={}",
                self.a, self.b
            )))
        }
    }

    /// `B - A`, the lower bound `W'' >= -alpha`.
    pub fn alpha(&self) -> f64 {
        self.b - self.a
    }

    pub fn eval(&self, phi: f64, which: PotentialPart) -> Result<f64> {
        if !(phi.abs() < 1.0) {
            return Err(Error::PhaseDomain(format!(
                "|phi| = {} is not below 1",
                phi.abs()
            )));
        }
        Ok(match which {
            PotentialPart::W => self.w(phi),
            PotentialPart::Wp => self.wp(phi),
            PotentialPart::Wpp => self.wpp(phi),
            PotentialPart::F => self.f(phi),
            PotentialPart::Fp => self.fp(phi),
            PotentialPart::Fpp => self.fpp(phi),
        })
    }

    // Unchecked evaluations for inner loops; callers keep |phi| < 1.

    #[inline]
    pub fn f(&self, s: f64) -> f64 {
        0.5 * self.a * ((1.0 + s) * s.ln_1p() + (1.0 - s) * (-s).ln_1p())
    }

    #[inline]
    pub fn fp(&self, s: f64) -> f64 {
        self.a * s.atanh()
    }

    #[inline]
    pub fn fpp(&self, s: f64) -> f64 {
        self.a / ((1.0 - s) * (1.0 + s))
    }

    #[inline]
    pub fn w(&self, s: f64) -> f64 {
        self.f(s) - 0.5 * self.b * s * s
    }

    #[inline]
    pub fn wp(&self, s: f64) -> f64 {
        self.fp(s) - self.b * s
    }

    #[inline]
    pub fn wpp(&self, s: f64) -> f64 {
        self.fpp(s) - self.b
    }

    /// Inverse of `F'`.
    #[inline]
    pub fn fp_inverse(&self, m: f64) -> f64 {
        (m / self.a).tanh()
    }

    /// Global minimum of `W` over (-1,1).
    pub fn w_min(&self) -> f64 {
        // W' = 0 away from the origin solves A atanh(s) = B s; bisection on
        // (0,1) since atanh(s)/s increases from 1 to infinity.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.a * mid.atanh() < self.b * mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.w(0.5 * (lo + hi)).min(0.0)
    }
}

/// Pointwise law for a temperature-dependent coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CoefficientLaw {
    Constant {
        value: f64,
    },
    /// `base + amp * tanh(theta)`.
    Tanh {
        base: f64,
        amp: f64,
    },
}

impl CoefficientLaw {
    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            CoefficientLaw::Constant { value } => value,
            CoefficientLaw::Tanh { base, amp } => base + amp * theta.tanh(),
        }
    }

    #[inline]
    pub fn derivative(&self, theta: f64) -> f64 {
        match *self {
            CoefficientLaw::Constant { .. } => 0.0,
            CoefficientLaw::Tanh { amp, .. } => amp * (1.0 - theta.tanh().powi(2)),
        }
    }

    pub fn second_derivative(&self, theta: f64) -> f64 {
        match *self {
            CoefficientLaw::Constant { .. } => 0.0,
            CoefficientLaw::Tanh { amp, .. } => {
                let t = theta.tanh();
                -2.0 * amp * t * (1.0 - t * t)
            }
        }
    }

    /// Exact range over `[-r, r]` (both laws are monotone).
    pub fn range(&self, r: f64) -> (f64, f64) {
        let (a, b) = (self.eval(-r), self.eval(r));
        (a.min(b), a.max(b))
    }

    /// Antiderivative `int_0^theta`, when available in closed form.
    pub fn antiderivative(&self, theta: f64) -> f64 {
        match *self {
            CoefficientLaw::Constant { value } => value * theta,
            CoefficientLaw::Tanh { base, amp } => base * theta + amp * theta.cosh().ln(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, CoefficientLaw::Constant { .. })
    }
}

/// `nu(theta)`, `kappa(theta)` and the Eotvos surface tension
/// `lambda(theta) = lambda0 (a - b theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub nu: CoefficientLaw,
    pub kappa: CoefficientLaw,
    pub lambda0: f64,
    pub a: f64,
    pub b: f64,
    pub nu_lo: f64,
    pub nu_hi: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    /// Attainable temperature range `[-theta_bound, theta_bound]`; the
    /// driver sets this from the initial temperature.
    #[serde(default = "default_theta_bound")]
    pub theta_bound: f64,
}

fn default_theta_bound() -> f64 {
    f64::INFINITY
}

impl Default for CoefficientModel {
    fn default() -> Self {
        let law = CoefficientLaw::Tanh {
            base: 1.0,
            amp: 0.1,
        };
        Self {
            nu: law,
            kappa: law,
            lambda0: 1.0,
            a: 1.0,
            b: 0.25,
            nu_lo: 0.9,
            nu_hi: 1.1,
            kappa_lo: 0.9,
            kappa_hi: 1.1,
            theta_bound: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub nu: f64,
    pub kappa: f64,
    pub lambda: f64,
}

/// Slack for the attainable-range check, so values sitting exactly on the
/// maximum-principle bound are not rejected through rounding.
const THETA_RANGE_SLACK: f64 = 1e-9;

impl CoefficientModel {
    /// Constant viscosity and conductivity.
    pub fn constant(nu: f64, kappa: f64) -> Self {
        Self {
            nu: CoefficientLaw::Constant { value: nu },
            kappa: CoefficientLaw::Constant { value: kappa },
            nu_lo: nu,
            nu_hi: nu,
            kappa_lo: kappa,
            kappa_hi: kappa,
            ..Self::default()
        }
    }

    pub fn with_theta_bound(mut self, r: f64) -> Self {
        self.theta_bound = r;
        self
    }

    #[inline]
    pub fn lambda(&self, theta: f64) -> f64 {
        self.lambda0 * (self.a - self.b * theta)
    }

    /// Checks the declared bounds against the laws on the attainable range.
    pub fn validate(&self) -> Result<()> {
        if !(self.nu_lo > 0.0 && self.kappa_lo > 0.0) {
            return Err(Error::InvalidParameter(
                "coefficient lower bounds must be positive".into(),
            ));
        }
        if ![self.lambda0, self.a, self.b].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "Eotvos constants must be finite".into(),
            ));
        }
        let r = if self.theta_bound.is_finite() {
            self.theta_bound
        } else {
            50.0
        };
        for (name, law, lo, hi) in [
            ("nu", self.nu, self.nu_lo, self.nu_hi),
            ("kappa", self.kappa, self.kappa_lo, self.kappa_hi),
        ] {
            let (a, b) = law.range(r);
            if a < lo - 1e-14 || b > hi + 1e-14 {
                return Err(Error::InvalidParameter(format!(
                    "{name} ranges over [{a}, {b}] on |theta| <= {r}, outside declared [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, theta: f64) -> Result<Coefficients> {
        if !theta.is_finite() || theta.abs() > self.theta_bound + THETA_RANGE_SLACK {
            return Err(Error::Range(format!(
                "theta = {theta} outside attainable range [-{b}, {b}]",
                b = self.theta_bound
            )));
        }
        Ok(Coefficients {
            nu: self.nu.eval(theta),
            kappa: self.kappa.eval(theta),
            lambda: self.lambda(theta),
        })
    }
}

pub fn eval_potential(p: &PotentialParams, phi: f64, which: PotentialPart) -> Result<f64> {
    p.eval(phi, which)
}

pub fn eval_coefficients(m: &CoefficientModel, theta: f64) -> Result<Coefficients> {
    m.eval(theta)
}

/// Buoyancy constants: the momentum forcing is `(Ra theta - Ga) g e2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    #[serde(rename = "Ra")]
    pub ra: f64,
    #[serde(rename = "Ga")]
    pub ga: f64,
    pub g: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            ra: 1.0,
            ga: 0.0,
            g: 1.0,
        }
    }
}

impl PhysicalParams {
    #[inline]
    pub fn buoyancy(&self, theta: f64) -> f64 {
        (self.ra * theta - self.ga) * self.g
    }

    pub fn validate(&self) -> Result<()> {
        if [self.ra, self.ga, self.g].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "Ra, Ga and g must be finite".into(),
            ))
        }
    }
}
