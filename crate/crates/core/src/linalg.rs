//! Preconditioned conjugate gradients and a geometric multigrid
//! preconditioner for variable-coefficient cell operators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::{axpy, dot, BoundaryCondition};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy)]
pub struct CgParams {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Keep iterates orthogonal to constants (singular Neumann problems).
    pub mean_free: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Final `|r| / |b|`.
    pub residual: f64,
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Solves `A x = b` for symmetric positive definite `A` with SPD
/// preconditioner `M^{-1}`.
pub fn pcg(
    a: impl Fn(&[f64]) -> Vec<f64>,
    m: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<Vec<f64>>,
    params: CgParams,
    solver: &'static str,
) -> Result<(Vec<f64>, CgStats)> {
    let bnorm = dot(b, b).sqrt();
    if !bnorm.is_finite() {
        return Err(Error::NonFinite(solver));
    }
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; b.len()],
            CgStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut x = x0.unwrap_or_else(|| vec![0.0; b.len()]);
    if params.mean_free {
        remove_mean(&mut x);
    }
    let ax = a(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    if params.mean_free {
        remove_mean(&mut r);
    }
    let mut res = dot(&r, &r).sqrt() / bnorm;
    if res <= params.rel_tol {
        return Ok((
            x,
            CgStats {
                iterations: 0,
                residual: res,
            },
        ));
    }
    let mut z = m(&r);
    if params.mean_free {
        remove_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=params.max_iter {
        let ap = a(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            if pap.is_finite() && res < 1e3 * params.rel_tol {
                // Breakdown right at the round-off floor.
                return Ok((
                    x,
                    CgStats {
                        iterations: it,
                        residual: res,
                    },
                ));
            }
            return Err(Error::NonConvergence {
                solver,
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        if params.mean_free {
            remove_mean(&mut r);
        }
        res = dot(&r, &r).sqrt() / bnorm;
        if !res.is_finite() {
            return Err(Error::NonFinite(solver));
        }
        if res <= params.rel_tol {
            if params.mean_free {
                remove_mean(&mut x);
            }
            return Ok((
                x,
                CgStats {
                    iterations: it,
                    residual: res,
                },
            ));
        }
        z = m(&r);
        if params.mean_free {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NonConvergence {
        solver,
        iterations: params.max_iter,
        residual: res,
    })
}

/// `shift u - div(k grad u)` on cells, with conductivities on faces and the
/// boundary condition entering through ghosts.
#[derive(Debug, Clone)]
pub struct CellOperator {
    pub grid: Grid,
    pub bc: BoundaryCondition,
    pub shift: Vec<f64>,
    /// One value per x-face.
    pub kx: Vec<f64>,
    /// One value per y-face.
    pub ky: Vec<f64>,
}

impl CellOperator {
    pub fn laplacian(grid: Grid, bc: BoundaryCondition) -> Self {
        Self {
            grid,
            bc,
            shift: vec![0.0; grid.n_cells()],
            kx: vec![1.0; grid.n_xfaces()],
            ky: vec![1.0; grid.n_yfaces()],
        }
    }

    /// Weight of the boundary face in the diagonal: mirrored ghosts give
    /// zero flux, anti-mirrored ghosts give `2 u / h`.
    fn wall(&self) -> f64 {
        match self.bc {
            BoundaryCondition::Neumann => 0.0,
            BoundaryCondition::Dirichlet => 2.0,
        }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let (idx2, idy2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
        let wall = self.wall();
        let mut out = vec![0.0; g.n_cells()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.cell(i, j);
                let uc = u[c];
                let mut s = self.shift[c] * uc;
                let kw = self.kx[g.xface(i, j)] * idx2;
                let ke = self.kx[g.xface(i + 1, j)] * idx2;
                let ks = self.ky[g.yface(i, j)] * idy2;
                let kn = self.ky[g.yface(i, j + 1)] * idy2;
                s += if i > 0 {
                    kw * (uc - u[c - 1])
                } else {
                    wall * kw * uc
                };
                s += if i + 1 < g.nx {
                    ke * (uc - u[c + 1])
                } else {
                    wall * ke * uc
                };
                s += if j > 0 {
                    ks * (uc - u[c - g.nx])
                } else {
                    wall * ks * uc
                };
                s += if j + 1 < g.ny {
                    kn * (uc - u[c + g.nx])
                } else {
                    wall * kn * uc
                };
                out[c] = s;
            }
        }
        out
    }

    /// Red-black Gauss-Seidel sweep of one color.
    fn gs_color(&self, u: &mut [f64], b: &[f64], color: usize) {
        let g = self.grid;
        let (idx2, idy2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
        let wall = self.wall();
        for j in 0..g.ny {
            let start = (color + j) % 2;
            for i in (start..g.nx).step_by(2) {
                let c = g.cell(i, j);
                let kw = self.kx[g.xface(i, j)] * idx2;
                let ke = self.kx[g.xface(i + 1, j)] * idx2;
                let ks = self.ky[g.yface(i, j)] * idy2;
                let kn = self.ky[g.yface(i, j + 1)] * idy2;
                let mut diag = self.shift[c];
                let mut off = b[c];
                if i > 0 {
                    diag += kw;
                    off += kw * u[c - 1];
                } else {
                    diag += wall * kw;
                }
                if i + 1 < g.nx {
                    diag += ke;
                    off += ke * u[c + 1];
                } else {
                    diag += wall * ke;
                }
                if j > 0 {
                    diag += ks;
                    off += ks * u[c - g.nx];
                } else {
                    diag += wall * ks;
                }
                if j + 1 < g.ny {
                    diag += kn;
                    off += kn * u[c + g.nx];
                } else {
                    diag += wall * kn;
                }
                if diag > 0.0 {
                    u[c] = off / diag;
                }
            }
        }
    }

    /// Rediscretization on the grid with twice the spacing.
    fn coarsen(&self) -> Option<CellOperator> {
        let g = self.grid;
        if !g.nx.is_multiple_of(2) || !g.ny.is_multiple_of(2) || g.nx / 2 < 4 || g.ny / 2 < 4 {
            return None;
        }
        let cg = Grid::new(g.nx / 2, g.ny / 2, g.lx, g.ly).ok()?;
        let mut shift = vec![0.0; cg.n_cells()];
        for j in 0..cg.ny {
            for i in 0..cg.nx {
                let mut s = 0.0;
                for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    s += self.shift[g.cell(2 * i + a, 2 * j + b)];
                }
                shift[cg.cell(i, j)] = 0.25 * s;
            }
        }
        let mut kx = vec![0.0; cg.n_xfaces()];
        for j in 0..cg.ny {
            for i in 0..=cg.nx {
                kx[cg.xface(i, j)] =
                    0.5 * (self.kx[g.xface(2 * i, 2 * j)] + self.kx[g.xface(2 * i, 2 * j + 1)]);
            }
        }
        let mut ky = vec![0.0; cg.n_yfaces()];
        for j in 0..=cg.ny {
            for i in 0..cg.nx {
                ky[cg.yface(i, j)] =
                    0.5 * (self.ky[g.yface(2 * i, 2 * j)] + self.ky[g.yface(2 * i + 1, 2 * j)]);
            }
        }
        Some(CellOperator {
            grid: cg,
            bc: self.bc,
            shift,
            kx,
            ky,
        })
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.grid.n_cells();
        let mut a = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            let col = self.apply(&e);
            a.set_column(k, &nalgebra::DVector::from_vec(col));
            e[k] = 0.0;
        }
        a
    }
}

fn coarse_value(u: &[f64], g: &Grid, bc: BoundaryCondition, i: isize, j: isize) -> f64 {
    let sign = |outside: bool| {
        if outside && bc == BoundaryCondition::Dirichlet {
            -1.0
        } else {
            1.0
        }
    };
    let (ci, sx) = if i < 0 {
        (0, sign(true))
    } else if i >= g.nx as isize {
        (g.nx - 1, sign(true))
    } else {
        (i as usize, 1.0)
    };
    let (cj, sy) = if j < 0 {
        (0, sign(true))
    } else if j >= g.ny as isize {
        (g.ny - 1, sign(true))
    } else {
        (j as usize, 1.0)
    };
    sx * sy * u[g.cell(ci, cj)]
}

/// Bilinear cell-centered prolongation from `cg` to `fg`.
fn prolong(uc: &[f64], cg: &Grid, fg: &Grid, bc: BoundaryCondition) -> Vec<f64> {
    let mut uf = vec![0.0; fg.n_cells()];
    for j in 0..fg.ny {
        for i in 0..fg.nx {
            let (ci, cj) = ((i / 2) as isize, (j / 2) as isize);
            let di: isize = if i % 2 == 0 { -1 } else { 1 };
            let dj: isize = if j % 2 == 0 { -1 } else { 1 };
            uf[fg.cell(i, j)] = (9.0 * coarse_value(uc, cg, bc, ci, cj)
                + 3.0 * coarse_value(uc, cg, bc, ci + di, cj)
                + 3.0 * coarse_value(uc, cg, bc, ci, cj + dj)
                + coarse_value(uc, cg, bc, ci + di, cj + dj))
                / 16.0;
        }
    }
    uf
}

/// Transpose of [`prolong`] scaled by 1/4.
fn restrict(rf: &[f64], cg: &Grid, fg: &Grid, bc: BoundaryCondition) -> Vec<f64> {
    let mut rc = vec![0.0; cg.n_cells()];
    let mut scatter = |i: isize, j: isize, w: f64| {
        let mut s = w;
        let ci = if i < 0 {
            if bc == BoundaryCondition::Dirichlet {
                s = -s;
            }
            0
        } else if i >= cg.nx as isize {
            if bc == BoundaryCondition::Dirichlet {
                s = -s;
            }
            cg.nx - 1
        } else {
            i as usize
        };
        let cj = if j < 0 {
            if bc == BoundaryCondition::Dirichlet {
                s = -s;
            }
            0
        } else if j >= cg.ny as isize {
            if bc == BoundaryCondition::Dirichlet {
                s = -s;
            }
            cg.ny - 1
        } else {
            j as usize
        };
        rc[cg.cell(ci, cj)] += s;
    };
    for j in 0..fg.ny {
        for i in 0..fg.nx {
            let r = rf[fg.cell(i, j)] / 64.0;
            let (ci, cj) = ((i / 2) as isize, (j / 2) as isize);
            let di: isize = if i % 2 == 0 { -1 } else { 1 };
            let dj: isize = if j % 2 == 0 { -1 } else { 1 };
            scatter(ci, cj, 9.0 * r);
            scatter(ci + di, cj, 3.0 * r);
            scatter(ci, cj + dj, 3.0 * r);
            scatter(ci + di, cj + dj, r);
        }
    }
    rc
}

/// Symmetric V-cycle used as a CG preconditioner.
#[derive(Debug, Clone)]
pub struct Multigrid {
    levels: Vec<CellOperator>,
    coarse_inv: DMatrix<f64>,
    pub sweeps: usize,
}

impl Multigrid {
    pub fn new(op: CellOperator) -> Self {
        let mut levels = vec![op];
        while let Some(c) = levels.last().unwrap().coarsen() {
            if levels.last().unwrap().grid.n_cells() <= 64 {
                break;
            }
            levels.push(c);
        }
        let coarsest = levels.last().unwrap().dense();
        let coarse_inv = coarsest
            .clone()
            .pseudo_inverse(1e-12 * coarsest.amax())
            .unwrap_or_else(|_| DMatrix::identity(coarsest.nrows(), coarsest.ncols()));
        Self {
            levels,
            coarse_inv,
            sweeps: 2,
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn cycle(&self, level: usize, b: &[f64]) -> Vec<f64> {
        let op = &self.levels[level];
        if level + 1 == self.levels.len() {
            let x = &self.coarse_inv * nalgebra::DVector::from_column_slice(b);
            return x.as_slice().to_vec();
        }
        let mut u = vec![0.0; b.len()];
        for _ in 0..self.sweeps {
            op.gs_color(&mut u, b, 0);
            op.gs_color(&mut u, b, 1);
        }
        let au = op.apply(&u);
        let r: Vec<f64> = b.iter().zip(&au).map(|(bi, ai)| bi - ai).collect();
        let cop = &self.levels[level + 1];
        let rc = restrict(&r, &cop.grid, &op.grid, op.bc);
        let ec = self.cycle(level + 1, &rc);
        let ef = prolong(&ec, &cop.grid, &op.grid, op.bc);
        axpy(&mut u, 1.0, &ef);
        for _ in 0..self.sweeps {
            op.gs_color(&mut u, b, 1);
            op.gs_color(&mut u, b, 0);
        }
        u
    }

    pub fn precondition(&self, r: &[f64]) -> Vec<f64> {
        self.cycle(0, r)
    }
}
