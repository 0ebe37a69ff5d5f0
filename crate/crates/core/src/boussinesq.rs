//! Temperature transport with conductivity `kappa(theta)` and homogeneous
//! Dirichlet walls.

use crate::elliptic::{solve_cell_operator, SolverConfig};
use crate::error::{Error, Result};
use crate::field::{BoundaryCondition, MacField, ScalarField};
use crate::linalg::CellOperator;
use crate::ops::{advect, scalar_on_xfaces, scalar_on_yfaces, upwind_cfl_limit, ConvectionScheme};
use crate::potential::CoefficientModel;

/// One linearly implicit step
/// `(theta - theta^n)/dt + div(u^n theta^n) = div(kappa(theta^n) grad theta) + source`.
///
/// With upwind convection and `dt` below the advective CFL limit the update
/// is a convex combination followed by an M-matrix solve, so
/// `|theta^{n+1}|_inf <= |theta^n|_inf` (up to the solver tolerance).
pub fn theta_step_with_source(
    theta_n: &ScalarField,
    u_n: &MacField,
    m: &CoefficientModel,
    dt: f64,
    scheme: ConvectionScheme,
    source: Option<&ScalarField>,
    cfg: &SolverConfig,
) -> Result<ScalarField> {
    let g = theta_n.grid;
    g.same_as(&u_n.grid)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if theta_n.bc != BoundaryCondition::Dirichlet {
        return Err(Error::Precondition(
            "temperature must carry the Dirichlet condition".into(),
        ));
    }
    if scheme == ConvectionScheme::Upwind && dt > upwind_cfl_limit(u_n) {
        log::warn!(
            "theta_step: dt = {dt:.3e} exceeds the upwind CFL limit {:.3e}; the maximum principle may fail",
            upwind_cfl_limit(u_n)
        );
    }
    let mut rhs = theta_n.clone();
    rhs.axpy(dt, &advect(theta_n, u_n, scheme));
    if let Some(s) = source {
        rhs.axpy(dt, s);
    }
    let idt = 1.0 / dt;
    let b: Vec<f64> = rhs.values.iter().map(|v| v * idt).collect();
    let kappa = |t: f64| -> Result<f64> { Ok(m.eval(t)?.kappa) };
    let op = CellOperator {
        grid: g,
        bc: BoundaryCondition::Dirichlet,
        shift: vec![idt; g.n_cells()],
        kx: scalar_on_xfaces(theta_n)
            .into_iter()
            .map(kappa)
            .collect::<Result<_>>()?,
        ky: scalar_on_yfaces(theta_n)
            .into_iter()
            .map(kappa)
            .collect::<Result<_>>()?,
    };
    let x = solve_cell_operator(
        &op,
        &b,
        Some(theta_n.values.clone()),
        cfg,
        "theta diffusion",
    )?;
    ScalarField::from_values(g, BoundaryCondition::Dirichlet, x)
}

pub fn theta_step(
    theta_n: &ScalarField,
    u_n: &MacField,
    m: &CoefficientModel,
    dt: f64,
    scheme: ConvectionScheme,
    cfg: &SolverConfig,
) -> Result<ScalarField> {
    theta_step_with_source(theta_n, u_n, m, dt, scheme, None, cfg)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        if !(flm.is_finite() && frm.is_finite()) {
            return Err(Error::Quadrature(format!("non-finite integrand near {m}")));
        }
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(Error::Quadrature("non-finite integrand".into()));
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `Theta = int_0^theta kappa(s) ds`, pointwise.
pub fn kirchhoff_transform(theta: &ScalarField, m: &CoefficientModel) -> Result<ScalarField> {
    let k = |s: f64| m.kappa.eval(s);
    theta.try_map(|t| {
        if t == 0.0 {
            Ok(0.0)
        } else {
            adaptive_simpson(&k, 0.0, t, 1e-13 * (1.0 + t.abs()))
        }
    })
}

/// Backward-difference time derivative.
pub fn time_derivative(now: &ScalarField, before: &ScalarField, dt: f64) -> ScalarField {
    now.sub(before).scaled(1.0 / dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::ops::curl_of_fn;
    use crate::potential::CoefficientLaw;
    use std::f64::consts::PI;

    fn cfg() -> SolverConfig {
        SolverConfig {
            rel_tol: 1e-12,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid::unit(16).unwrap();
        let t = ScalarField::zeros(g, BoundaryCondition::Dirichlet);
        let u = curl_of_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        let next = theta_step(
            &t,
            &u,
            &CoefficientModel::default(),
            1e-3,
            ConvectionScheme::Upwind,
            &cfg(),
        )
        .unwrap();
        assert_eq!(next.max_abs(), 0.0);
    }

    #[test]
    fn eigenmode_decay_factor() {
        let g = Grid::unit(128).unwrap();
        let k0 = 0.7;
        let m = CoefficientModel::constant(1.0, k0);
        let dt = 1e-4;
        let t0 = ScalarField::from_fn(g, BoundaryCondition::Dirichlet, |x, y| {
            (PI * x).sin() * (PI * y).sin()
        });
        let t1 = theta_step(
            &t0,
            &MacField::zeros(g),
            &m,
            dt,
            ConvectionScheme::Upwind,
            &cfg(),
        )
        .unwrap();
        let factor = t1.dot(&t0) / t0.dot(&t0);
        let exact = 1.0 / (1.0 + 2.0 * PI * PI * k0 * dt);
        assert!((factor - exact).abs() / exact < 1e-5, "{factor} {exact}");
    }

    #[test]
    fn maximum_principle_with_upwind() {
        let g = Grid::unit(32).unwrap();
        let u = curl_of_fn(g, |x, y| {
            2.0 * (PI * x).sin().powi(2) * (PI * y).sin().powi(2)
        });
        let mut t = ScalarField::from_fn(g, BoundaryCondition::Dirichlet, |x, y| {
            0.7 * (-((x - 0.35).powi(2) + (y - 0.5).powi(2)) / 0.02).exp()
        });
        let t0 = t.max_abs();
        let m = CoefficientModel::default().with_theta_bound(t0);
        let dt = 0.9 * upwind_cfl_limit(&u);
        let mut prev = t.dot(&t);
        for _ in 0..200 {
            t = theta_step(&t, &u, &m, dt, ConvectionScheme::Upwind, &cfg()).unwrap();
            assert!(t.max_abs() <= t0 + 1e-12);
            let e = t.dot(&t);
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn pure_diffusion_l2_decays() {
        let g = Grid::unit(16).unwrap();
        let mut t = ScalarField::from_fn(g, BoundaryCondition::Dirichlet, |x, y| {
            x * (1.0 - x) * y * (1.0 - y) * 10.0
        });
        let m = CoefficientModel::default();
        let mut prev = t.dot(&t);
        for _ in 0..20 {
            t = theta_step(
                &t,
                &MacField::zeros(g),
                &m,
                1e-2,
                ConvectionScheme::Centered,
                &cfg(),
            )
            .unwrap();
            assert!(t.dot(&t) < prev);
            prev = t.dot(&t);
        }
    }

    #[test]
    fn kirchhoff_oracles() {
        let g = Grid::unit(4).unwrap();
        let m = CoefficientModel::default();
        let t = ScalarField::constant(g, BoundaryCondition::Dirichlet, 0.5);
        let k = kirchhoff_transform(&t, &m).unwrap();
        let exact = 0.5 + 0.1 * 0.5f64.cosh().ln();
        assert!((k.values[0] - exact).abs() < 1e-12);
        assert!((exact - 0.512011).abs() < 1e-6);
        let c = CoefficientModel::constant(1.0, 2.5);
        let f = ScalarField::from_fn(g, BoundaryCondition::Dirichlet, |x, y| x - y);
        let kc = kirchhoff_transform(&f, &c).unwrap();
        assert!(kc.sub(&f.scaled(2.5)).max_abs() < 1e-14);
        assert_eq!(
            kirchhoff_transform(&f.scaled(0.0), &m).unwrap().max_abs(),
            0.0
        );
        let bad = CoefficientModel {
            kappa: CoefficientLaw::Constant { value: f64::NAN },
            ..m
        };
        assert!(matches!(
            kirchhoff_transform(&t, &bad),
            Err(Error::Quadrature(_))
        ));
    }

    #[test]
    fn kirchhoff_is_monotone() {
        let g = Grid::unit(8).unwrap();
        let m = CoefficientModel::default();
        let a = ScalarField::from_fn(g, BoundaryCondition::Dirichlet, |x, y| (3.0 * x).sin() - y);
        let b = a.map(|v| v + 0.01);
        let (ka, kb) = (
            kirchhoff_transform(&a, &m).unwrap(),
            kirchhoff_transform(&b, &m).unwrap(),
        );
        assert!(ka.values.iter().zip(&kb.values).all(|(x, y)| x < y));
    }
}
