//! Elliptic solves: the Neumann inverse Laplacian, the Stokes operator and
//! its eigenmodes, variable-coefficient scalar problems and the singular
//! problem `-Lap phi + F'(phi) = mu`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dot, BoundaryCondition, MacField, NodeField, ScalarField};
use crate::grid::Grid;
use crate::linalg::{pcg, CellOperator, CgParams, Multigrid};
use crate::ops::{curl, curl_transpose, div, grad, laplacian, neg_vector_laplacian};
use crate::potential::PotentialParams;
use crate::spectral::{CellSpectral, NodeSpectral, VectorSpectral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Conjugate gradients preconditioned by the fast separable transform.
    #[default]
    ConjugateGradient,
    /// Conjugate gradients preconditioned by a geometric multigrid V-cycle
    /// (scalar cell problems; other problems fall back to the transform).
    Multigrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
    #[serde(default)]
    pub method: SolverMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: 500,
            method: SolverMethod::ConjugateGradient,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-4) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must lie in (0, 1e-4], got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn cg(&self, mean_free: bool) -> CgParams {
        CgParams {
            rel_tol: self.rel_tol,
            max_iter: self.max_iter,
            mean_free,
        }
    }
}

/// `u = A0^{-1} g`: `-Lap u = g`, zero normal derivative, zero mean.
#[derive(Debug, Clone)]
pub struct NeumannSolver {
    pub cfg: SolverConfig,
    spectral: CellSpectral,
    op: CellOperator,
    mg: Option<Multigrid>,
}

impl NeumannSolver {
    pub fn new(grid: Grid, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let op = CellOperator::laplacian(grid, BoundaryCondition::Neumann);
        let mg = (cfg.method == SolverMethod::Multigrid).then(|| Multigrid::new(op.clone()));
        Ok(Self {
            cfg,
            spectral: CellSpectral::new(grid, BoundaryCondition::Neumann),
            op,
            mg,
        })
    }

    pub fn solve(&self, g: &ScalarField) -> Result<ScalarField> {
        self.spectral.grid.same_as(&g.grid)?;
        let mean = g.mean();
        let norm = (g.dot(g) / g.grid.area()).sqrt();
        if mean.abs() > 1e-10 * norm.max(f64::MIN_POSITIVE) && mean != 0.0 {
            return Err(Error::Compatibility { mean, norm });
        }
        let b: Vec<f64> = g.values.iter().map(|v| v - mean).collect();
        let (x, _) = match &self.mg {
            Some(mg) => pcg(
                |v| self.op.apply(v),
                |r| mg.precondition(r),
                &b,
                None,
                self.cfg.cg(true),
                "neumann poisson",
            )?,
            None => pcg(
                |v| self.op.apply(v),
                |r| self.spectral.apply_slice(r, inv_or_zero),
                &b,
                None,
                self.cfg.cg(true),
                "neumann poisson",
            )?,
        };
        ScalarField::from_values(g.grid, BoundaryCondition::Neumann, x)
    }

    /// `|g|_{V0'} = |grad A0^{-1} g|`.
    pub fn dual_norm(&self, g: &ScalarField) -> Result<f64> {
        Ok(grad(&self.solve(g)?).norm_l2())
    }
}

fn inv_or_zero(l: f64) -> f64 {
    if l > 0.0 {
        1.0 / l
    } else {
        0.0
    }
}

pub fn solve_neumann_poisson(g: &ScalarField, cfg: &SolverConfig) -> Result<ScalarField> {
    NeumannSolver::new(g.grid, *cfg)?.solve(g)
}

/// Scalar problem `shift u - div(k grad u) = b` with the preconditioner
/// chosen by `cfg.method`.
pub fn solve_cell_operator(
    op: &CellOperator,
    b: &[f64],
    x0: Option<Vec<f64>>,
    cfg: &SolverConfig,
    solver: &'static str,
) -> Result<Vec<f64>> {
    let singular = op.bc == BoundaryCondition::Neumann && op.shift.iter().all(|s| *s == 0.0);
    let params = cfg.cg(singular);
    let (x, _) = match cfg.method {
        SolverMethod::Multigrid => {
            let mg = Multigrid::new(op.clone());
            pcg(
                |v| op.apply(v),
                |r| mg.precondition(r),
                b,
                x0,
                params,
                solver,
            )?
        }
        SolverMethod::ConjugateGradient => {
            let sp = CellSpectral::new(op.grid, op.bc);
            let kbar = 0.5
                * (op.kx.iter().sum::<f64>() / op.kx.len() as f64
                    + op.ky.iter().sum::<f64>() / op.ky.len() as f64);
            let sbar = op.shift.iter().sum::<f64>() / op.shift.len() as f64;
            pcg(
                |v| op.apply(v),
                |r| sp.apply_slice(r, |l| inv_or_zero(sbar + kbar * l)),
                b,
                x0,
                params,
                solver,
            )?
        }
    };
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub u: MacField,
    pub p: ScalarField,
}

/// Steady Stokes solver by conjugate gradients on the pressure Schur
/// complement, with the vector Laplacian inverted exactly.
#[derive(Debug, Clone)]
pub struct StokesSolver {
    pub cfg: SolverConfig,
    grid: Grid,
    vec: VectorSpectral,
}

impl StokesSolver {
    pub fn new(grid: Grid, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            grid,
            vec: VectorSpectral::new(grid),
        })
    }

    fn lap_inv(&self, v: &MacField) -> MacField {
        self.vec.apply(v, |l| 1.0 / l)
    }

    fn grad_interior(&self, p: &[f64]) -> MacField {
        let f =
            ScalarField::from_values(self.grid, BoundaryCondition::Neumann, p.to_vec()).unwrap();
        let mut gp = grad(&f);
        gp.enforce_no_slip();
        gp
    }

    pub fn solve(&self, g: &MacField) -> Result<StokesSolution> {
        self.grid.same_as(&g.grid)?;
        if !g.is_finite() {
            return Err(Error::NonFinite("stokes forcing"));
        }
        let mut gi = g.clone();
        gi.enforce_no_slip();
        // -D L^{-1} G p = -D L^{-1} g on mean-zero pressures
        let rhs: Vec<f64> = div(&self.lap_inv(&gi)).values.iter().map(|v| -v).collect();
        let schur = |p: &[f64]| -> Vec<f64> {
            div(&self.lap_inv(&self.grad_interior(p)))
                .values
                .iter()
                .map(|v| -v)
                .collect()
        };
        let (p, _) = pcg(
            schur,
            |r| r.to_vec(),
            &rhs,
            None,
            self.cfg.cg(true),
            "stokes schur",
        )?;
        let gp = self.grad_interior(&p);
        let u = self.lap_inv(&gi.sub(&gp));
        let p = ScalarField::from_values(self.grid, BoundaryCondition::Neumann, p)?.mean_free();
        Ok(StokesSolution { u, p })
    }

    /// `|g|_{V_sigma'} = |grad S^{-1} g|`.
    pub fn dual_norm(&self, g: &MacField) -> Result<f64> {
        let s = self.solve(g)?;
        Ok(crate::ops::velocity_gradient(&s.u).norm())
    }
}

pub fn solve_stokes(g: &MacField, cfg: &SolverConfig) -> Result<StokesSolution> {
    StokesSolver::new(g.grid, *cfg)?.solve(g)
}

/// Discrete Stokes eigenpairs, ascending, L2-orthonormal.
#[derive(Debug, Clone)]
pub struct StokesModes {
    pub modes: Vec<MacField>,
    pub eigenvalues: Vec<f64>,
}

pub const MAX_EIGENMODES: usize = 64;

/// Below this many interior nodes the generalized eigenproblem is solved
/// densely.
const DENSE_EIGEN_MAX: usize = 1200;

/// Stream-function form `C^T L C psi = lambda C^T C psi`; `C^T C` is the
/// node Laplacian.
fn stokes_psi_apply(g: &Grid, psi: &[f64]) -> Vec<f64> {
    let v = curl(&NodeField::unpack_interior(*g, psi));
    curl_transpose(&neg_vector_laplacian(&v)).pack_interior()
}

fn modes_from_psi(g: &Grid, psis: &[Vec<f64>]) -> Vec<MacField> {
    let scale = 1.0 / g.cell_area().sqrt();
    psis.iter()
        .map(|psi| {
            let mut w = curl(&NodeField::unpack_interior(*g, psi)).scaled(scale);
            // fix the sign so that the largest component is positive
            let (mut big, mut s) = (0.0f64, 1.0);
            for x in w.ux.iter().chain(&w.uy) {
                if x.abs() > big + 1e-12 {
                    big = x.abs();
                    s = x.signum();
                }
            }
            if s < 0.0 {
                w = w.scaled(-1.0);
            }
            w
        })
        .collect()
}

pub fn stokes_eigenmodes(grid: Grid, m: usize, cfg: &SolverConfig) -> Result<StokesModes> {
    cfg.validate()?;
    if m == 0 || m > MAX_EIGENMODES {
        return Err(Error::InvalidParameter(format!(
            "mode count must lie in 1..={MAX_EIGENMODES}, got {m}"
        )));
    }
    let nodes = NodeSpectral::new(grid);
    let n = (grid.nx - 1) * (grid.ny - 1);
    if m > n {
        return Err(Error::InvalidParameter(format!(
            "{m} modes requested on a grid with {n} interior nodes"
        )));
    }
    let (vals, psis) = if n <= DENSE_EIGEN_MAX {
        dense_stokes_eigen(&grid, &nodes, m)
    } else {
        subspace_stokes_eigen(&grid, &nodes, m, cfg)?
    };
    Ok(StokesModes {
        modes: modes_from_psi(&grid, &psis),
        eigenvalues: vals,
    })
}

/// Columns of the orthonormal node sine basis scaled by `lambda^{-1/2}`
/// turn the pencil into a standard symmetric problem.
fn dense_stokes_eigen(grid: &Grid, nodes: &NodeSpectral, m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = (grid.nx - 1) * (grid.ny - 1);
    let op = nodes.operator();
    // B = Q Lambda^{-1/2}: column k is the k-th sine mode scaled.
    let mut b = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for k in 0..n {
        e[k] = 1.0;
        let col = op.apply(&e, |l| 1.0 / l.sqrt());
        b.set_column(k, &nalgebra::DVector::from_vec(col));
        e[k] = 0.0;
    }
    // b is symmetric, so its columns span the same space; K B column-wise
    let mut kb = DMatrix::zeros(n, n);
    for k in 0..n {
        let col: Vec<f64> = b.column(k).iter().copied().collect();
        kb.set_column(
            k,
            &nalgebra::DVector::from_vec(stokes_psi_apply(grid, &col)),
        );
    }
    let mut a = b.tr_mul(&kb);
    a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vals = Vec::with_capacity(m);
    let mut psis = Vec::with_capacity(m);
    for &k in order.iter().take(m) {
        vals.push(eig.eigenvalues[k]);
        let z = eig.eigenvectors.column(k);
        let psi = &b * z;
        psis.push(psi.as_slice().to_vec());
    }
    (vals, psis)
}

fn subspace_stokes_eigen(
    grid: &Grid,
    nodes: &NodeSpectral,
    m: usize,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = (grid.nx - 1) * (grid.ny - 1);
    let p = (m + (m / 2).max(8)).min(n);
    let op = nodes.operator();
    let mass = |x: &[f64]| op.apply(x, |l| l);
    // start from the lowest node Laplacian modes
    let mut lam: Vec<(f64, usize)> = Vec::with_capacity(n);
    let nx1 = grid.nx - 1;
    for k in 0..n {
        lam.push((op.eigenvalue(k % nx1, k / nx1), k));
    }
    lam.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut x: Vec<Vec<f64>> = lam[..p]
        .iter()
        .map(|&(l, k)| {
            let mut c = DMatrix::zeros(nx1, grid.ny - 1);
            c[(k % nx1, k / nx1)] = 1.0 / l.sqrt();
            op.inverse(&c)
        })
        .collect();
    let mut theta: Vec<f64> = lam[..p].iter().map(|&(l, _)| l * l).collect();
    let inner = CgParams {
        rel_tol: cfg.rel_tol.min(1e-10),
        max_iter: cfg.max_iter.max(200),
        mean_free: false,
    };
    let max_outer = cfg.max_iter.max(100);
    let mut prev = vec![f64::INFINITY; m];
    for outer in 0..max_outer {
        // Y = K^{-1} M X
        let mut y = Vec::with_capacity(p);
        for (xi, th) in x.iter().zip(&theta) {
            let b = mass(xi);
            let guess: Vec<f64> = xi.iter().map(|v| v / th).collect();
            let (yi, _) = pcg(
                |v| stokes_psi_apply(grid, v),
                |r| op.apply(r, |l| 1.0 / (l * l)),
                &b,
                Some(guess),
                inner,
                "stokes eigen inner",
            )?;
            y.push(yi);
        }
        // Rayleigh-Ritz
        let ky: Vec<Vec<f64>> = y.iter().map(|v| stokes_psi_apply(grid, v)).collect();
        let my: Vec<Vec<f64>> = y.iter().map(|v| mass(v)).collect();
        let kr = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &ky[j]) + dot(&y[j], &ky[i])));
        let mr = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &my[j]) + dot(&y[j], &my[i])));
        let chol = mr.cholesky().ok_or(Error::NonConvergence {
            solver: "stokes eigen",
            iterations: outer,
            residual: f64::NAN,
        })?;
        let linv = chol.l().try_inverse().ok_or(Error::NonConvergence {
            solver: "stokes eigen",
            iterations: outer,
            residual: f64::NAN,
        })?;
        let a = &linv * kr * linv.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let coef = linv.transpose() * &eig.eigenvectors;
        let mut newx = Vec::with_capacity(p);
        for &k in &order {
            let mut v = vec![0.0; n];
            for (i, yi) in y.iter().enumerate() {
                crate::field::axpy(&mut v, coef[(i, k)], yi);
            }
            newx.push(v);
        }
        x = newx;
        theta = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let change = theta[..m]
            .iter()
            .zip(&prev)
            .map(|(a, b)| ((a - b) / a).abs())
            .fold(0.0, f64::max);
        prev.copy_from_slice(&theta[..m]);
        if change < 1e-12 {
            return Ok((theta[..m].to_vec(), x[..m].to_vec()));
        }
    }
    Err(Error::NonConvergence {
        solver: "stokes eigen",
        iterations: max_outer,
        residual: f64::NAN,
    })
}

/// Newton solve of `-Lap phi + F'(phi) = mu_tilde` with zero normal
/// derivative. All iterates stay in `|phi| <= 1 - 1e-12`.
pub fn solve_singular_elliptic(
    mu_tilde: &ScalarField,
    p: &PotentialParams,
    cfg: &SolverConfig,
) -> Result<ScalarField> {
    cfg.validate()?;
    if !mu_tilde.is_finite() {
        return Err(Error::NonFinite("singular elliptic data"));
    }
    let grid = mu_tilde.grid;
    let mu = mu_tilde.clone().with_bc(BoundaryCondition::Neumann);
    let residual = |phi: &ScalarField| -> ScalarField {
        let lap = laplacian(phi);
        let mut r = phi.clone();
        for ((ri, li), mi) in r.values.iter_mut().zip(&lap.values).zip(&mu.values) {
            *ri = -li + p.fp(*ri) - mi;
        }
        r
    };
    let norm = |f: &ScalarField| f.dot(f).sqrt();
    // The problem is the Euler-Lagrange equation of this strictly convex
    // functional; it is the line-search merit far from the solution, where
    // the barrier makes the residual norm a poor guide.
    let energy = |phi: &ScalarField| -> f64 {
        let gr = grad(phi);
        let bulk: f64 = phi
            .values
            .iter()
            .zip(&mu.values)
            .map(|(s, m)| p.f(*s) - m * s)
            .sum();
        0.5 * gr.dot(&gr) + bulk * grid.cell_area()
    };
    let mut phi = mu.map(|m| p.fp_inverse(m).clamp(-1.0 + 1e-12, 1.0 - 1e-12));
    let scale = norm(&mu)
        .max(norm(&phi.map(|s| p.fp(s))))
        .max(f64::MIN_POSITIVE);
    let mut r = residual(&phi);
    let mut rn = norm(&r);
    let mut e = energy(&phi);
    for it in 0..cfg.max_iter {
        if rn <= cfg.rel_tol * scale {
            return Ok(phi);
        }
        let fpp: Vec<f64> = phi.values.iter().map(|s| p.fpp(*s)).collect();
        let mut op = CellOperator::laplacian(grid, BoundaryCondition::Neumann);
        op.shift = fpp;
        let b: Vec<f64> = r.values.iter().map(|v| -v).collect();
        let inner = SolverConfig {
            rel_tol: 1e-8,
            max_iter: cfg.max_iter.max(200),
            method: cfg.method,
        };
        // F'' spans many orders of magnitude near the pure states, which
        // defeats a constant-shift transform preconditioner; the smoother
        // of the V-cycle handles the diagonal exactly.
        let mg = Multigrid::new(op.clone());
        let (delta, _) = pcg(
            |v| op.apply(v),
            |q| mg.precondition(q),
            &b,
            None,
            inner.cg(false),
            "singular elliptic inner",
        )?;
        let mut s = 1.0;
        loop {
            let trial = ScalarField {
                grid,
                bc: BoundaryCondition::Neumann,
                values: phi
                    .values
                    .iter()
                    .zip(&delta)
                    .map(|(a, d)| a + s * d)
                    .collect(),
            };
            if trial.max_abs() <= 1.0 - 1e-12 {
                let rt = residual(&trial);
                let rtn = norm(&rt);
                let et = energy(&trial);
                if rtn < rn || et < e {
                    phi = trial;
                    r = rt;
                    rn = rtn;
                    e = et;
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-14 {
                if rn <= 1e3 * cfg.rel_tol * scale {
                    // stagnated at round-off
                    return Ok(phi);
                }
                return Err(Error::NonConvergence {
                    solver: "singular elliptic newton",
                    iterations: it,
                    residual: rn / scale,
                });
            }
        }
    }
    if rn <= cfg.rel_tol * scale {
        return Ok(phi);
    }
    Err(Error::NonConvergence {
        solver: "singular elliptic newton",
        iterations: cfg.max_iter,
        residual: rn / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{NormKind, Normed};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig {
            rel_tol: 1e-3,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            max_iter: 0,
            ..cfg()
        }
        .validate()
        .is_err());
        cfg().validate().unwrap();
    }

    #[test]
    fn poisson_zero_and_compatibility() {
        let g = Grid::unit(16).unwrap();
        let z = solve_neumann_poisson(&ScalarField::zeros(g, BoundaryCondition::Neumann), &cfg())
            .unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let c = ScalarField::constant(g, BoundaryCondition::Neumann, 1.0);
        assert!(matches!(
            solve_neumann_poisson(&c, &cfg()),
            Err(Error::Compatibility { .. })
        ));
    }

    #[test]
    fn poisson_cosine_oracle() {
        let mut errs = Vec::new();
        for method in [SolverMethod::ConjugateGradient, SolverMethod::Multigrid] {
            for n in [32, 64] {
                let g = Grid::unit(n).unwrap();
                let f = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, _| (PI * x).cos());
                let u = solve_neumann_poisson(&f, &SolverConfig { method, ..cfg() }).unwrap();
                let exact = f.scaled(1.0 / (PI * PI));
                errs.push(u.sub(&exact).norm(NormKind::L2).unwrap());
            }
        }
        assert!(
            errs[0] / errs[1] > 3.8 && errs[2] / errs[3] > 3.8,
            "{errs:?}"
        );
        assert!((errs[1] - errs[3]).abs() < 1e-8);
    }

    #[test]
    fn dual_norm_of_cosine() {
        let g = Grid::unit(128).unwrap();
        let f = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, _| (PI * x).cos());
        let d = NeumannSolver::new(g, cfg()).unwrap().dual_norm(&f).unwrap();
        let exact = 1.0 / (2f64.sqrt() * PI);
        assert!((d - exact).abs() / exact < 1e-4, "{d}");
    }

    #[test]
    fn inverse_laplacian_is_self_adjoint_and_interpolates() {
        let g = Grid::new(24, 20, 1.0, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut rand_field = || {
            ScalarField::from_values(
                g,
                BoundaryCondition::Neumann,
                (0..g.n_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap()
            .mean_free()
        };
        let (f, h) = (rand_field(), rand_field());
        let s = NeumannSolver::new(g, cfg()).unwrap();
        let (af, ah) = (s.solve(&f).unwrap(), s.solve(&h).unwrap());
        assert!((af.dot(&h) - f.dot(&ah)).abs() < 1e-9 * af.dot(&h).abs().max(1e-3));
        assert!(af.dot(&f) > 0.0);
        // |f|^2 <= |f|_{V0'} |grad f|
        let lhs = f.dot(&f);
        let rhs = s.dual_norm(&f).unwrap() * grad(&f).norm_l2();
        assert!(lhs <= rhs * (1.0 + 1e-10));
    }

    #[test]
    fn stokes_annihilates_gradients() {
        let g = Grid::unit(32).unwrap();
        let z = solve_stokes(&MacField::zeros(g), &cfg()).unwrap();
        assert_eq!(z.u.max_abs(), 0.0);
        assert_eq!(z.p.max_abs(), 0.0);
        let q = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, y| {
            (PI * x).cos() * (2.0 * PI * y).cos() + x * x
        })
        .mean_free();
        let s = solve_stokes(&grad(&q), &cfg()).unwrap();
        assert!(
            s.u.norm_l2() <= 1e-8 * q.norm(NormKind::L2).unwrap(),
            "{}",
            s.u.norm_l2()
        );
        assert!(s.p.sub(&q).max_abs() < 1e-7);
    }

    #[test]
    fn stokes_solution_is_solenoidal_and_satisfies_momentum() {
        let g = Grid::new(24, 16, 1.5, 1.0).unwrap();
        let f = MacField::from_fn(g, |x, y| (x * y).sin() + 1.0, |x, y| x - y * y);
        let s = solve_stokes(&f, &cfg()).unwrap();
        assert!(s.u.is_no_slip());
        assert!(div(&s.u).max_abs() < 1e-7 * s.u.max_abs() / g.h());
        assert!(s.p.mean().abs() < 1e-12);
        let mut gp = grad(&s.p);
        gp.enforce_no_slip();
        let mut fi = f.clone();
        fi.enforce_no_slip();
        let res = neg_vector_laplacian(&s.u).add(&gp).sub(&fi);
        assert!(res.max_abs() < 1e-6 * fi.max_abs(), "{}", res.max_abs());
    }

    #[test]
    fn eigenmodes_are_orthonormal_solenoidal_and_sorted() {
        let g = Grid::unit(16).unwrap();
        let em = stokes_eigenmodes(g, 12, &cfg()).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let d = em.modes[i].dot(&em.modes[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
            assert!(div(&em.modes[i]).max_abs() < 1e-9);
            assert!(em.modes[i].is_no_slip());
        }
        assert!(em.eigenvalues[0] > 0.0);
        assert!(em.eigenvalues.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn dense_and_subspace_eigen_agree() {
        let g = Grid::unit(20).unwrap();
        let nodes = NodeSpectral::new(g);
        let (a, _) = dense_stokes_eigen(&g, &nodes, 4);
        let (b, _) = subspace_stokes_eigen(&g, &nodes, 4, &cfg()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8 * x, "{a:?} {b:?}");
        }
        // the Stokes operator maps modes to themselves modulo gradients
        let em = stokes_eigenmodes(g, 1, &cfg()).unwrap();
        let lw = neg_vector_laplacian(&em.modes[0]);
        let s = StokesSolver::new(g, cfg()).unwrap().solve(&lw).unwrap();
        assert!(s.u.sub(&em.modes[0]).max_abs() < 1e-6 * em.modes[0].max_abs());
    }

    #[test]
    fn first_eigenvalue_converges_under_refinement() {
        let l: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                stokes_eigenmodes(Grid::unit(n).unwrap(), 1, &cfg())
                    .unwrap()
                    .eigenvalues[0]
            })
            .collect();
        let ratio = (l[0] - l[1]) / (l[1] - l[2]);
        assert!((ratio.log2() - 2.0).abs() < 0.3, "{l:?}");
        assert!((l[2] - 52.3).abs() < 0.3, "{l:?}");
    }

    #[test]
    fn singular_elliptic_constant_data() {
        let g = Grid::unit(16).unwrap();
        let p = PotentialParams::default();
        for c in [0.0, 0.3, -0.7, 0.999] {
            let mu = ScalarField::constant(g, BoundaryCondition::Neumann, p.fp(c));
            let phi = solve_singular_elliptic(&mu, &p, &cfg()).unwrap();
            assert!(phi.values.iter().all(|v| (v - c).abs() < 1e-9), "{c}");
            assert!(phi.max_abs() < 1.0);
        }
    }

    #[test]
    fn singular_elliptic_large_smooth_data() {
        let g = Grid::unit(32).unwrap();
        let p = PotentialParams::default();
        for method in [SolverMethod::ConjugateGradient, SolverMethod::Multigrid] {
            let mu = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, y| {
                8.0 * (PI * x).cos() * (PI * y).cos() + 2.0
            });
            let phi = solve_singular_elliptic(&mu, &p, &SolverConfig { method, ..cfg() }).unwrap();
            assert!(phi.max_abs() < 1.0);
            let r = laplacian(&phi)
                .scaled(-1.0)
                .add(&phi.map(|s| p.fp(s)))
                .sub(&mu);
            assert!(r.max_abs() < 1e-8, "{}", r.max_abs());
        }
    }
}
