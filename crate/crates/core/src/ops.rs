//! Discrete differential operators on the MAC grid.
//!
//! `grad` and `div` are exact negative adjoints of each other under the
//! cell / face quadratures whenever the vector field has zero normal
//! component on the boundary, and `laplacian` is literally `div . grad`.

use serde::{Deserialize, Serialize};

use crate::field::{BoundaryCondition, MacField, NodeField, ScalarField, TensorField};
use crate::grid::Grid;

/// Convection discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConvectionScheme {
    /// First-order donor cell; monotone under the advective CFL limit.
    #[default]
    Upwind,
    /// Second-order centered fluxes.
    Centered,
}

/// Threshold above which `advect` warns about a non-solenoidal velocity.
pub const DIVERGENCE_WARN_TOL: f64 = 1e-8;

/// Face gradient with boundary-condition-consistent ghosts.
pub fn grad(f: &ScalarField) -> MacField {
    let g = f.grid;
    let mut out = MacField::zeros(g);
    for j in 0..g.ny {
        let jj = j as isize;
        for i in 0..=g.nx {
            let ii = i as isize;
            out.ux[g.xface(i, j)] = (f.at(ii, jj) - f.at(ii - 1, jj)) / g.dx;
        }
    }
    for j in 0..=g.ny {
        let jj = j as isize;
        for i in 0..g.nx {
            let ii = i as isize;
            out.uy[g.yface(i, j)] = (f.at(ii, jj) - f.at(ii, jj - 1)) / g.dy;
        }
    }
    out
}

/// Cell-centered divergence. The result is tagged Neumann.
pub fn div(v: &MacField) -> ScalarField {
    let g = v.grid;
    let mut out = ScalarField::zeros(g, BoundaryCondition::Neumann);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let d = (v.ux_at(i + 1, j) - v.ux_at(i, j)) / g.dx
                + (v.uy_at(i, j + 1) - v.uy_at(i, j)) / g.dy;
            out.values[g.cell(i, j)] = d;
        }
    }
    out
}

/// Five-point Laplacian, `div(grad(f))`, carrying the bc of `f`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    div(&grad(f)).with_bc(f.bc)
}

/// Convective tendency `-div(v f)` in flux form.
///
/// The cell sum of the result vanishes when `v` has zero boundary normal
/// component, so the transported quantity is conserved exactly.
pub fn advect(f: &ScalarField, v: &MacField, scheme: ConvectionScheme) -> ScalarField {
    let g = f.grid;
    let d = div(v).max_abs();
    let scale = v.max_abs() / g.h() + 1.0;
    if d > DIVERGENCE_WARN_TOL * scale {
        log::warn!("advect: velocity divergence {d:.3e} exceeds tolerance; transport is not conservative-consistent");
    }
    let flux = |vel: f64, left: f64, right: f64| -> f64 {
        match scheme {
            ConvectionScheme::Upwind => {
                if vel > 0.0 {
                    vel * left
                } else {
                    vel * right
                }
            }
            ConvectionScheme::Centered => 0.5 * vel * (left + right),
        }
    };
    let mut fx = vec![0.0; g.n_xfaces()];
    for j in 0..g.ny {
        let jj = j as isize;
        for i in 0..=g.nx {
            let ii = i as isize;
            let k = g.xface(i, j);
            fx[k] = flux(v.ux[k], f.at(ii - 1, jj), f.at(ii, jj));
        }
    }
    let mut fy = vec![0.0; g.n_yfaces()];
    for j in 0..=g.ny {
        let jj = j as isize;
        for i in 0..g.nx {
            let ii = i as isize;
            let k = g.yface(i, j);
            fy[k] = flux(v.uy[k], f.at(ii, jj - 1), f.at(ii, jj));
        }
    }
    let mut out = ScalarField::zeros(g, f.bc);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let t = (fx[g.xface(i + 1, j)] - fx[g.xface(i, j)]) / g.dx
                + (fy[g.yface(i, j + 1)] - fy[g.yface(i, j)]) / g.dy;
            out.values[g.cell(i, j)] = -t;
        }
    }
    out
}

/// `d ux / dy` at node `(i, j)` using anti-mirrored ghosts.
#[inline]
pub(crate) fn dy_ux_node(v: &MacField, i: usize, j: usize) -> f64 {
    let jj = j as isize;
    (v.ux_ghost(i, jj) - v.ux_ghost(i, jj - 1)) / v.grid.dy
}

/// `d uy / dx` at node `(i, j)` using anti-mirrored ghosts.
#[inline]
pub(crate) fn dx_uy_node(v: &MacField, i: usize, j: usize) -> f64 {
    let ii = i as isize;
    (v.uy_ghost(ii, j) - v.uy_ghost(ii - 1, j)) / v.grid.dx
}

/// Full velocity gradient: `xx = d ux/dx`, `yy = d uy/dy` at cells,
/// `xy = d ux/dy`, `yx = d uy/dx` at nodes.
pub fn velocity_gradient(v: &MacField) -> TensorField {
    let g = v.grid;
    let mut t = TensorField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell(i, j);
            t.xx[c] = (v.ux_at(i + 1, j) - v.ux_at(i, j)) / g.dx;
            t.yy[c] = (v.uy_at(i, j + 1) - v.uy_at(i, j)) / g.dy;
        }
    }
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let n = g.node(i, j);
            t.xy[n] = dy_ux_node(v, i, j);
            t.yx[n] = dx_uy_node(v, i, j);
        }
    }
    t
}

/// Symmetric gradient `D v = (grad v + grad v^T) / 2`.
pub fn sym_grad(v: &MacField) -> TensorField {
    let mut t = velocity_gradient(v);
    for (a, b) in t.xy.iter_mut().zip(t.yx.iter_mut()) {
        let s = 0.5 * (*a + *b);
        *a = s;
        *b = s;
    }
    t
}

/// Variable-viscosity operator `-div(2 nu D v)` on interior faces.
///
/// `nu_cell` has one entry per cell, `nu_node` one per node. The operator
/// is symmetric positive semi-definite with
/// `<L v, v> = 2 sum nu |D v|^2` under the staggered quadrature.
pub fn viscous_operator(v: &MacField, nu_cell: &[f64], nu_node: &[f64]) -> MacField {
    let g = v.grid;
    let mut txx = vec![0.0; g.n_cells()];
    let mut tyy = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell(i, j);
            txx[c] = 2.0 * nu_cell[c] * (v.ux_at(i + 1, j) - v.ux_at(i, j)) / g.dx;
            tyy[c] = 2.0 * nu_cell[c] * (v.uy_at(i, j + 1) - v.uy_at(i, j)) / g.dy;
        }
    }
    let mut txy = vec![0.0; g.n_nodes()];
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let n = g.node(i, j);
            txy[n] = nu_node[n] * (dy_ux_node(v, i, j) + dx_uy_node(v, i, j));
        }
    }
    let mut out = MacField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let r = (txx[g.cell(i, j)] - txx[g.cell(i - 1, j)]) / g.dx
                + (txy[g.node(i, j + 1)] - txy[g.node(i, j)]) / g.dy;
            out.ux[g.xface(i, j)] = -r;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let r = (txy[g.node(i + 1, j)] - txy[g.node(i, j)]) / g.dx
                + (tyy[g.cell(i, j)] - tyy[g.cell(i, j - 1)]) / g.dy;
            out.uy[g.yface(i, j)] = -r;
        }
    }
    out
}

/// Componentwise `-Laplacian` of a no-slip MAC field (interior faces).
pub fn neg_vector_laplacian(v: &MacField) -> MacField {
    let g = v.grid;
    let (idx2, idy2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let mut out = MacField::zeros(g);
    for j in 0..g.ny {
        let jj = j as isize;
        for i in 1..g.nx {
            let c = v.ux_at(i, j);
            let lx = (2.0 * c - v.ux_at(i - 1, j) - v.ux_at(i + 1, j)) * idx2;
            let ly = (2.0 * c - v.ux_ghost(i, jj - 1) - v.ux_ghost(i, jj + 1)) * idy2;
            out.ux[g.xface(i, j)] = lx + ly;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let ii = i as isize;
            let c = v.uy_at(i, j);
            let lx = (2.0 * c - v.uy_ghost(ii - 1, j) - v.uy_ghost(ii + 1, j)) * idx2;
            let ly = (2.0 * c - v.uy_at(i, j - 1) - v.uy_at(i, j + 1)) * idy2;
            out.uy[g.yface(i, j)] = lx + ly;
        }
    }
    out
}

/// Skew-symmetric convective operator `(a . grad) b` on interior faces.
///
/// Built from control-volume mass fluxes of `a` with centered neighbor
/// coupling, so `<N(a) b, b> = 0` exactly for every `b`.
pub fn skew_convection(a: &MacField, b: &MacField) -> MacField {
    let g = a.grid;
    let vol = g.cell_area();
    let mut out = MacField::zeros(g);
    for j in 0..g.ny {
        let jj = j as isize;
        for i in 1..g.nx {
            let fe = 0.5 * (a.ux_at(i, j) + a.ux_at(i + 1, j)) * g.dy;
            let fw = 0.5 * (a.ux_at(i - 1, j) + a.ux_at(i, j)) * g.dy;
            let fnn = 0.5 * (a.uy_at(i - 1, j + 1) + a.uy_at(i, j + 1)) * g.dx;
            let fs = 0.5 * (a.uy_at(i - 1, j) + a.uy_at(i, j)) * g.dx;
            let s = fe * b.ux_at(i + 1, j) - fw * b.ux_at(i - 1, j) + fnn * b.ux_ghost(i, jj + 1)
                - fs * b.ux_ghost(i, jj - 1);
            out.ux[g.xface(i, j)] = 0.5 * s / vol;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let ii = i as isize;
            let fnn = 0.5 * (a.uy_at(i, j) + a.uy_at(i, j + 1)) * g.dx;
            let fs = 0.5 * (a.uy_at(i, j - 1) + a.uy_at(i, j)) * g.dx;
            let fe = 0.5 * (a.ux_at(i + 1, j - 1) + a.ux_at(i + 1, j)) * g.dy;
            let fw = 0.5 * (a.ux_at(i, j - 1) + a.ux_at(i, j)) * g.dy;
            let s = fnn * b.uy_at(i, j + 1) - fs * b.uy_at(i, j - 1) + fe * b.uy_ghost(ii + 1, j)
                - fw * b.uy_ghost(ii - 1, j);
            out.uy[g.yface(i, j)] = 0.5 * s / vol;
        }
    }
    out
}

/// Velocity from a node stream function: `ux = d psi/dy`, `uy = -d psi/dx`.
/// Discretely divergence-free; no-slip normal components when `psi`
/// vanishes on the boundary.
pub fn curl(psi: &NodeField) -> MacField {
    let g = psi.grid;
    let mut v = MacField::zeros(g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            v.ux[g.xface(i, j)] = (psi.get(i, j + 1) - psi.get(i, j)) / g.dy;
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            v.uy[g.yface(i, j)] = -(psi.get(i + 1, j) - psi.get(i, j)) / g.dx;
        }
    }
    v
}

/// Euclidean adjoint of [`curl`] restricted to interior nodes (the
/// discrete vorticity `d uy/dx - d ux/dy`).
pub fn curl_transpose(v: &MacField) -> NodeField {
    let g = v.grid;
    let mut out = NodeField::zeros(g);
    for j in 1..g.ny {
        for i in 1..g.nx {
            let w = (v.ux_at(i, j - 1) - v.ux_at(i, j)) / g.dy
                + (v.uy_at(i, j) - v.uy_at(i - 1, j)) / g.dx;
            out.values[g.node(i, j)] = w;
        }
    }
    out
}

/// Scalar averaged onto interior y-faces (boundary faces get the ghost
/// average, i.e. the boundary value implied by the bc).
pub fn scalar_on_yfaces(f: &ScalarField) -> Vec<f64> {
    let g = f.grid;
    let mut out = vec![0.0; g.n_yfaces()];
    for j in 0..=g.ny {
        for i in 0..g.nx {
            out[g.yface(i, j)] =
                0.5 * (f.at(i as isize, j as isize - 1) + f.at(i as isize, j as isize));
        }
    }
    out
}

pub fn scalar_on_xfaces(f: &ScalarField) -> Vec<f64> {
    let g = f.grid;
    let mut out = vec![0.0; g.n_xfaces()];
    for j in 0..g.ny {
        for i in 0..=g.nx {
            out[g.xface(i, j)] =
                0.5 * (f.at(i as isize - 1, j as isize) + f.at(i as isize, j as isize));
        }
    }
    out
}

/// Four-cell average at nodes using ghosts.
pub fn scalar_on_nodes(f: &ScalarField) -> Vec<f64> {
    let g = f.grid;
    let mut out = vec![0.0; g.n_nodes()];
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let (ii, jj) = (i as isize, j as isize);
            out[g.node(i, j)] =
                0.25 * (f.at(ii - 1, jj - 1) + f.at(ii, jj - 1) + f.at(ii - 1, jj) + f.at(ii, jj));
        }
    }
    out
}

/// Face gradient components averaged onto nodes: returns `(d/dx, d/dy)`.
pub fn grad_on_nodes(f: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let g = f.grid;
    let mut gx = vec![0.0; g.n_nodes()];
    let mut gy = vec![0.0; g.n_nodes()];
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let dx_lo = (f.at(ii, jj - 1) - f.at(ii - 1, jj - 1)) / g.dx;
            let dx_hi = (f.at(ii, jj) - f.at(ii - 1, jj)) / g.dx;
            let dy_lo = (f.at(ii - 1, jj) - f.at(ii - 1, jj - 1)) / g.dy;
            let dy_hi = (f.at(ii, jj) - f.at(ii, jj - 1)) / g.dy;
            gx[g.node(i, j)] = 0.5 * (dx_lo + dx_hi);
            gy[g.node(i, j)] = 0.5 * (dy_lo + dy_hi);
        }
    }
    // Normal derivatives of a Neumann field vanish on the walls.
    if f.bc == BoundaryCondition::Neumann {
        for j in 0..=g.ny {
            gx[g.node(0, j)] = 0.0;
            gx[g.node(g.nx, j)] = 0.0;
        }
        for i in 0..=g.nx {
            gy[g.node(i, 0)] = 0.0;
            gy[g.node(i, g.ny)] = 0.0;
        }
    }
    (gx, gy)
}

/// Centered cell gradient `(d/dx, d/dy)` using ghosts.
pub fn grad_on_cells(f: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let g = f.grid;
    let mut gx = vec![0.0; g.n_cells()];
    let mut gy = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let c = g.cell(i, j);
            gx[c] = (f.at(ii + 1, jj) - f.at(ii - 1, jj)) / (2.0 * g.dx);
            gy[c] = (f.at(ii, jj + 1) - f.at(ii, jj - 1)) / (2.0 * g.dy);
        }
    }
    (gx, gy)
}

/// Velocity interpolated to cell centers.
pub fn velocity_on_cells(v: &MacField) -> (Vec<f64>, Vec<f64>) {
    let g = v.grid;
    let mut ux = vec![0.0; g.n_cells()];
    let mut uy = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell(i, j);
            ux[c] = 0.5 * (v.ux_at(i, j) + v.ux_at(i + 1, j));
            uy[c] = 0.5 * (v.uy_at(i, j) + v.uy_at(i, j + 1));
        }
    }
    (ux, uy)
}

/// Largest admissible explicit-advection time step for the upwind scheme
/// (donor-cell CFL number one).
pub fn upwind_cfl_limit(v: &MacField) -> f64 {
    let g = v.grid;
    let mut worst: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let out_x = v.ux_at(i + 1, j).max(0.0) - v.ux_at(i, j).min(0.0);
            let out_y = v.uy_at(i, j + 1).max(0.0) - v.uy_at(i, j).min(0.0);
            worst = worst.max(out_x / g.dx + out_y / g.dy);
        }
    }
    if worst == 0.0 {
        f64::INFINITY
    } else {
        1.0 / worst
    }
}

/// Grid helper for tests and initial data: random no-slip divergence-free
/// field from a stream function.
pub fn curl_of_fn(grid: Grid, psi: impl Fn(f64, f64) -> f64) -> MacField {
    let mut p = NodeField::from_fn(grid, psi);
    p.zero_boundary();
    curl(&p)
}
