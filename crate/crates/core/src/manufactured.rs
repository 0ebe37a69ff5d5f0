//! Manufactured solutions: smooth `(u*, phi*, theta*)` with analytic
//! source terms that make them exact solutions of the forced system.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::field::{BoundaryCondition, MacField, ScalarField};
use crate::grid::Grid;
use crate::state::ModelParams;

/// Value, gradient and Hessian of a scalar function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub gx: f64,
    pub gy: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Jet {
    pub fn lap(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn grad_sq(&self) -> f64 {
        self.gx * self.gx + self.gy * self.gy
    }

    /// `f(self)` given `f`, `f'`, `f''` at `self.v`.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        Jet {
            v: f0,
            gx: f1 * self.gx,
            gy: f1 * self.gy,
            xx: f2 * self.gx * self.gx + f1 * self.xx,
            xy: f2 * self.gx * self.gy + f1 * self.xy,
            yy: f2 * self.gy * self.gy + f1 * self.yy,
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            v: s * self.v,
            gx: s * self.gx,
            gy: s * self.gy,
            xx: s * self.xx,
            xy: s * self.xy,
            yy: s * self.yy,
        }
    }

    /// Product of separable one-dimensional profiles `fx(x) fy(y)` given
    /// their first three derivatives `[f, f', f'']`.
    fn separable(fx: [f64; 3], fy: [f64; 3]) -> Jet {
        Jet {
            v: fx[0] * fy[0],
            gx: fx[1] * fy[0],
            gy: fx[0] * fy[1],
            xx: fx[2] * fy[0],
            xy: fx[1] * fy[1],
            yy: fx[0] * fy[2],
        }
    }
}

fn sin_d(a: f64, z: f64) -> [f64; 4] {
    let (s, c) = (a * z).sin_cos();
    [s, a * c, -a * a * s, -a * a * a * c]
}

fn cos_d(a: f64, z: f64) -> [f64; 4] {
    let (s, c) = (a * z).sin_cos();
    [c, -a * s, -a * a * c, a * a * a * s]
}

/// `sin^2(a z)` and three derivatives.
fn sin2_d(a: f64, z: f64) -> [f64; 4] {
    let (s2, c2) = (2.0 * a * z).sin_cos();
    let s = (a * z).sin();
    [s * s, a * s2, 2.0 * a * a * c2, -4.0 * a * a * a * s2]
}

fn first3(d: [f64; 4]) -> [f64; 3] {
    [d[0], d[1], d[2]]
}

fn last3(d: [f64; 4]) -> [f64; 3] {
    [d[1], d[2], d[3]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManufacturedKind {
    /// `theta* = e^{-t} sin sin`, no flow, no phase variation.
    Heat,
    /// `phi* = 0.5 e^{-t} cos cos`, no flow, zero temperature.
    CahnHilliard,
    /// All three fields active; `u*` from the stream function
    /// `e^{-t} sin^2 sin^2`.
    CoupledTime,
}

/// Exact fields and sources on one domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub kind: ManufacturedKind,
    pub lx: f64,
    pub ly: f64,
    pub params: ModelParams,
}

pub const PHI_AMPLITUDE: f64 = 0.5;
pub const THETA_AMPLITUDE: f64 = 1.0;
pub const PSI_AMPLITUDE: f64 = 1.0;

struct Point {
    u: (Jet, Jet),
    phi: Jet,
    theta: Jet,
}

impl Manufactured {
    pub fn new(kind: ManufacturedKind, grid: &Grid, params: ModelParams) -> Self {
        Self {
            kind,
            lx: grid.lx,
            ly: grid.ly,
            params,
        }
    }

    fn has_flow(&self) -> bool {
        self.kind == ManufacturedKind::CoupledTime
    }

    fn has_phase(&self) -> bool {
        self.kind != ManufacturedKind::Heat
    }

    fn has_theta(&self) -> bool {
        self.kind != ManufacturedKind::CahnHilliard
    }

    fn point(&self, x: f64, y: f64, t: f64) -> Point {
        let (ax, ay) = (PI / self.lx, PI / self.ly);
        let e = (-t).exp();
        let theta = if self.has_theta() {
            Jet::separable(first3(sin_d(ax, x)), first3(sin_d(ay, y))).scale(THETA_AMPLITUDE * e)
        } else {
            Jet::default()
        };
        let phi = if self.has_phase() {
            Jet::separable(first3(cos_d(ax, x)), first3(cos_d(ay, y))).scale(PHI_AMPLITUDE * e)
        } else {
            Jet::default()
        };
        let u = if self.has_flow() {
            let (g, h) = (sin2_d(ax, x), sin2_d(ay, y));
            let s = PSI_AMPLITUDE * e;
            // ux = psi_y = G H', uy = -psi_x = -G' H
            let ux = Jet::separable(first3(g), last3(h)).scale(s);
            let uy = Jet::separable(last3(g), first3(h)).scale(-s);
            (ux, uy)
        } else {
            (Jet::default(), Jet::default())
        };
        Point { u, phi, theta }
    }

    pub fn phi_exact(&self, grid: Grid, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, BoundaryCondition::Neumann, |x, y| {
            self.point(x, y, t).phi.v
        })
    }

    pub fn theta_exact(&self, grid: Grid, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, BoundaryCondition::Dirichlet, |x, y| {
            self.point(x, y, t).theta.v
        })
    }

    /// Face samples of `u*`; exactly zero on the walls.
    pub fn u_exact(&self, grid: Grid, t: f64) -> MacField {
        let mut u = MacField::from_fn(
            grid,
            |x, y| self.point(x, y, t).u.0.v,
            |x, y| self.point(x, y, t).u.1.v,
        );
        u.enforce_no_slip();
        u
    }

    /// `theta_t + u.grad theta - div(kappa(theta) grad theta)`.
    pub fn theta_source(&self, grid: Grid, t: f64) -> ScalarField {
        let law = self.params.coefficients.kappa;
        ScalarField::from_fn(grid, BoundaryCondition::Dirichlet, |x, y| {
            let p = self.point(x, y, t);
            let th = p.theta;
            let adv = p.u.0.v * th.gx + p.u.1.v * th.gy;
            -th.v + adv - law.derivative(th.v) * th.grad_sq() - law.eval(th.v) * th.lap()
        })
    }

    /// `phi_t + u.grad phi - Lap mu*`, mean-free.
    pub fn phi_source(&self, grid: Grid, t: f64) -> ScalarField {
        let pot = self.params.potential;
        let (ax, ay) = (PI / self.lx, PI / self.ly);
        let k2 = ax * ax + ay * ay;
        let s = ScalarField::from_fn(grid, BoundaryCondition::Neumann, |x, y| {
            let p = self.point(x, y, t);
            let f = p.phi;
            let adv = p.u.0.v * f.gx + p.u.1.v * f.gy;
            // phi* is a Neumann eigenfunction: Lap phi = -k2 phi, so
            // Lap mu = -k2^2 phi + W'''|grad phi|^2 + W'' Lap phi.
            let wppp = 2.0 * pot.a * f.v / (1.0 - f.v * f.v).powi(2);
            let lap_mu = -k2 * k2 * f.v + wppp * f.grad_sq() + pot.wpp(f.v) * f.lap();
            -f.v + adv - lap_mu
        });
        s.mean_free()
    }

    /// `u_t + (u.grad)u - div(2 nu D u) + div(sigma) - (Ra theta - Ga) g e2`
    /// (with `p* = 0`) on interior faces.
    pub fn momentum_source(&self, grid: Grid, t: f64) -> MacField {
        let mut s = MacField::from_fn(
            grid,
            |x, y| self.momentum_source_at(x, y, t).0,
            |x, y| self.momentum_source_at(x, y, t).1,
        );
        s.enforce_no_slip();
        s
    }

    /// Pointwise momentum source.
    pub fn momentum_source_at(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let m = self.params.coefficients;
        let phys = self.params.physics;
        let pot = self.params.potential;
        let p = self.point(x, y, t);
        let (ux, uy) = p.u;
        let (f, th) = (p.phi, p.theta);
        let nu = m.nu.eval(th.v);
        let dnu = m.nu.derivative(th.v);
        let (nux, nuy) = (dnu * th.gx, dnu * th.gy);
        let dxy = 0.5 * (ux.gy + uy.gx);
        let lam = m.lambda(th.v);
        let dlam = -m.lambda0 * m.b;
        let iso = 0.5 * f.grad_sq() + pot.w(f.v);
        let tdotf = th.gx * f.gx + th.gy * f.gy;
        let div_sigma_x = dlam * (tdotf * f.gx + th.gx * iso)
            + lam * (3.0 * f.gx * f.xx + 2.0 * f.gy * f.xy + f.gx * f.yy + pot.wp(f.v) * f.gx);
        let div_sigma_y = dlam * (tdotf * f.gy + th.gy * iso)
            + lam * (3.0 * f.gy * f.yy + 2.0 * f.gx * f.xy + f.gy * f.xx + pot.wp(f.v) * f.gy);
        let fx =
            -ux.v + ux.v * ux.gx + uy.v * ux.gy - nu * ux.lap() - 2.0 * (ux.gx * nux + dxy * nuy)
                + div_sigma_x;
        let fy =
            -uy.v + ux.v * uy.gx + uy.v * uy.gy - nu * uy.lap() - 2.0 * (dxy * nux + uy.gy * nuy)
                + div_sigma_y
                - phys.buoyancy(th.v);
        (fx, fy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::CoefficientModel;

    fn fd_jet(f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> Jet {
        let h = 1e-4;
        Jet {
            v: f(x, y),
            gx: (f(x + h, y) - f(x - h, y)) / (2.0 * h),
            gy: (f(x, y + h) - f(x, y - h)) / (2.0 * h),
            xx: (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h),
            yy: (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h),
            xy: (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h))
                / (4.0 * h * h),
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let g = Grid::new(8, 8, 1.3, 0.7).unwrap();
        let m = Manufactured::new(ManufacturedKind::CoupledTime, &g, ModelParams::default());
        let t = 0.3;
        for &(x, y) in &[(0.2, 0.1), (0.9, 0.55), (0.41, 0.33)] {
            let p = m.point(x, y, t);
            let checks = [
                (p.phi, fd_jet(|a, b| m.point(a, b, t).phi.v, x, y)),
                (p.theta, fd_jet(|a, b| m.point(a, b, t).theta.v, x, y)),
                (p.u.0, fd_jet(|a, b| m.point(a, b, t).u.0.v, x, y)),
                (p.u.1, fd_jet(|a, b| m.point(a, b, t).u.1.v, x, y)),
            ];
            for (a, b) in checks {
                for (u, v) in [
                    (a.v, b.v),
                    (a.gx, b.gx),
                    (a.gy, b.gy),
                    (a.xx, b.xx),
                    (a.xy, b.xy),
                    (a.yy, b.yy),
                ] {
                    assert!((u - v).abs() < 1e-5 * (1.0 + u.abs()), "{a:?} {b:?}");
                }
            }
            // the velocity is divergence-free
            assert!((p.u.0.gx + p.u.1.gy).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_is_the_chain_rule() {
        let j = Jet {
            v: 0.3,
            gx: 0.5,
            gy: -0.2,
            xx: 1.0,
            xy: 0.1,
            yy: -0.4,
        };
        let s = j.compose(j.v.sin(), j.v.cos(), -j.v.sin());
        assert!((s.xx - (-j.v.sin() * 0.25 + j.v.cos() * 1.0)).abs() < 1e-15);
        assert!((s.xy - (-j.v.sin() * 0.5 * -0.2 + j.v.cos() * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn sources_vanish_for_steady_trivial_data() {
        // At t -> infinity every field decays; the source tends to zero
        // except the constant Galileo gradient, absent for Ga = 0.
        let g = Grid::unit(8).unwrap();
        let m = Manufactured::new(ManufacturedKind::CoupledTime, &g, ModelParams::default());
        assert!(m.theta_source(g, 60.0).max_abs() < 1e-20);
        assert!(m.phi_source(g, 60.0).max_abs() < 1e-20);
        assert!(m.momentum_source(g, 60.0).max_abs() < 1e-20);
    }

    #[test]
    fn stress_divergence_matches_finite_differences() {
        let g = Grid::unit(8).unwrap();
        let params = ModelParams {
            coefficients: CoefficientModel::constant(1.3, 1.0),
            ..Default::default()
        };
        let m = Manufactured::new(ManufacturedKind::CoupledTime, &g, params);
        let t = 0.1;
        let sigma = |x: f64, y: f64| {
            let p = m.point(x, y, t);
            let (f, th) = (p.phi, p.theta);
            let lam = params.coefficients.lambda(th.v);
            let iso = 0.5 * f.grad_sq() + params.potential.w(f.v);
            (
                lam * (f.gx * f.gx + iso),
                lam * f.gx * f.gy,
                lam * (f.gy * f.gy + iso),
            )
        };
        let h = 1e-5;
        for &(x, y) in &[(0.3, 0.4), (0.71, 0.18)] {
            let dsx = (sigma(x + h, y).0 - sigma(x - h, y).0 + sigma(x, y + h).1
                - sigma(x, y - h).1)
                / (2.0 * h);
            let dsy = (sigma(x + h, y).1 - sigma(x - h, y).1 + sigma(x, y + h).2
                - sigma(x, y - h).2)
                / (2.0 * h);
            let p = m.point(x, y, t);
            let (ux, uy) = p.u;
            let nu = 1.3;
            let fx = -ux.v + ux.v * ux.gx + uy.v * ux.gy - nu * ux.lap() + dsx;
            let fy = -uy.v + ux.v * uy.gx + uy.v * uy.gy - nu * uy.lap() + dsy
                - params.physics.buoyancy(p.theta.v);
            let src = m.momentum_source_at(x, y, t);
            assert!(
                (src.0 - fx).abs() < 1e-6 * (1.0 + fx.abs()),
                "{} {}",
                src.0,
                fx
            );
            assert!(
                (src.1 - fy).abs() < 1e-6 * (1.0 + fy.abs()),
                "{} {}",
                src.1,
                fy
            );
        }
    }

    #[test]
    fn heat_source_oracle() {
        // constant kappa, no flow: s = (2 pi^2 kappa - 1) theta*
        let g = Grid::unit(8).unwrap();
        let params = ModelParams {
            coefficients: CoefficientModel::constant(1.0, 0.7),
            ..Default::default()
        };
        let m = Manufactured::new(ManufacturedKind::Heat, &g, params);
        let s = m.theta_source(g, 0.2);
        let th = m.theta_exact(g, 0.2);
        let want = th.scaled(2.0 * PI * PI * 0.7 - 1.0);
        assert!(s.sub(&want).max_abs() < 1e-12);
    }
}
