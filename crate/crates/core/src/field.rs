//! Field storage on the staggered grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Boundary condition carried by a cell-centered field. Ghost cells mirror
/// the interior for Neumann and anti-mirror it for Dirichlet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Neumann,
    Dirichlet,
}

impl BoundaryCondition {
    #[inline]
    fn ghost_sign(self) -> f64 {
        match self {
            BoundaryCondition::Neumann => 1.0,
            BoundaryCondition::Dirichlet => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Dirichlet => "dirichlet",
        }
    }
}

/// Cell-centered scalar with `values[j * nx + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub bc: BoundaryCondition,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid, bc: BoundaryCondition) -> Self {
        Self {
            grid,
            bc,
            values: vec![0.0; grid.n_cells()],
        }
    }

    pub fn constant(grid: Grid, bc: BoundaryCondition, c: f64) -> Self {
        Self {
            grid,
            bc,
            values: vec![c; grid.n_cells()],
        }
    }

    pub fn from_values(grid: Grid, bc: BoundaryCondition, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidParameter(format!(
                "expected {} cell values, got {}",
                grid.n_cells(),
                values.len()
            )));
        }
        Ok(Self { grid, bc, values })
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(grid: Grid, bc: BoundaryCondition, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.xc(i), grid.yc(j)));
            }
        }
        Self { grid, bc, values }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let nx = self.grid.nx;
        self.values[j * nx + i] = v;
    }

    /// Value at `(i, j)` allowing one ghost layer on every side.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let nx = self.grid.nx as isize;
        let ny = self.grid.ny as isize;
        let s = self.bc.ghost_sign();
        let mut sign = 1.0;
        let ii = if i < 0 {
            sign *= s;
            0
        } else if i >= nx {
            sign *= s;
            nx - 1
        } else {
            i
        };
        let jj = if j < 0 {
            sign *= s;
            0
        } else if j >= ny {
            sign *= s;
            ny - 1
        } else {
            j
        };
        sign * self.values[(jj * nx + ii) as usize]
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn integral(&self) -> f64 {
        self.sum() * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    /// Weighted L2 inner product.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        dot(&self.values, &other.values) * self.grid.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            bc: self.bc,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn try_map(&self, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = self
            .values
            .iter()
            .map(|&v| f(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: self.grid,
            bc: self.bc,
            values,
        })
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            bc: self.bc,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) {
        axpy(&mut self.values, alpha, &other.values);
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    /// Copy with the mean removed.
    pub fn mean_free(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }
}

/// Face-centered vector field on the MAC grid.
///
/// `ux[j * (nx + 1) + i]` sits at `(x_i, y_{j+1/2})` and
/// `uy[j * nx + i]` at `(x_{i+1/2}, y_j)`. Velocities keep the boundary
/// normal components at zero (no-slip); tangential no-slip is imposed
/// through anti-mirrored ghosts by the operators that need it.
#[derive(Debug, Clone, PartialEq)]
pub struct MacField {
    pub grid: Grid,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

impl MacField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            ux: vec![0.0; grid.n_xfaces()],
            uy: vec![0.0; grid.n_yfaces()],
        }
    }

    /// Samples a vector function at face centers; boundary normal
    /// components are forced to zero.
    pub fn from_fn(grid: Grid, fx: impl Fn(f64, f64) -> f64, fy: impl Fn(f64, f64) -> f64) -> Self {
        let mut v = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 1..grid.nx {
                v.ux[grid.xface(i, j)] = fx(grid.xn(i), grid.yc(j));
            }
        }
        for j in 1..grid.ny {
            for i in 0..grid.nx {
                v.uy[grid.yface(i, j)] = fy(grid.xc(i), grid.yn(j));
            }
        }
        v
    }

    #[inline]
    pub fn ux_at(&self, i: usize, j: usize) -> f64 {
        self.ux[j * (self.grid.nx + 1) + i]
    }

    #[inline]
    pub fn uy_at(&self, i: usize, j: usize) -> f64 {
        self.uy[j * self.grid.nx + i]
    }

    /// x-component with anti-mirrored ghosts in y (`j = -1` or `j = ny`).
    #[inline]
    pub fn ux_ghost(&self, i: usize, j: isize) -> f64 {
        let ny = self.grid.ny as isize;
        if j < 0 {
            -self.ux_at(i, 0)
        } else if j >= ny {
            -self.ux_at(i, (ny - 1) as usize)
        } else {
            self.ux_at(i, j as usize)
        }
    }

    /// y-component with anti-mirrored ghosts in x (`i = -1` or `i = nx`).
    #[inline]
    pub fn uy_ghost(&self, i: isize, j: usize) -> f64 {
        let nx = self.grid.nx as isize;
        if i < 0 {
            -self.uy_at(0, j)
        } else if i >= nx {
            -self.uy_at((nx - 1) as usize, j)
        } else {
            self.uy_at(i as usize, j)
        }
    }

    /// Zeroes the boundary-normal components.
    pub fn enforce_no_slip(&mut self) {
        let g = self.grid;
        for j in 0..g.ny {
            self.ux[g.xface(0, j)] = 0.0;
            self.ux[g.xface(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            self.uy[g.yface(i, 0)] = 0.0;
            self.uy[g.yface(i, g.ny)] = 0.0;
        }
    }

    pub fn is_no_slip(&self) -> bool {
        let g = self.grid;
        (0..g.ny).all(|j| self.ux[g.xface(0, j)] == 0.0 && self.ux[g.xface(g.nx, j)] == 0.0)
            && (0..g.nx).all(|i| self.uy[g.yface(i, 0)] == 0.0 && self.uy[g.yface(i, g.ny)] == 0.0)
    }

    /// Face-quadrature inner product (boundary faces carry half weight).
    pub fn dot(&self, other: &MacField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let g = self.grid;
        let mut s = 0.0;
        for j in 0..g.ny {
            for i in 0..=g.nx {
                let k = g.xface(i, j);
                s += g.xface_weight(i) * self.ux[k] * other.ux[k];
            }
        }
        for j in 0..=g.ny {
            let w = g.yface_weight(j);
            for i in 0..g.nx {
                let k = g.yface(i, j);
                s += w * self.uy[k] * other.uy[k];
            }
        }
        s
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.ux
            .iter()
            .chain(&self.uy)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.ux.iter().chain(&self.uy).all(|v| v.is_finite())
    }

    pub fn axpy(&mut self, alpha: f64, other: &MacField) {
        axpy(&mut self.ux, alpha, &other.ux);
        axpy(&mut self.uy, alpha, &other.uy);
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            grid: self.grid,
            ux: self.ux.iter().map(|v| alpha * v).collect(),
            uy: self.uy.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn sub(&self, other: &MacField) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &MacField) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Interior unknowns: x-faces `i in 1..nx`, then y-faces `j in 1..ny`.
    pub fn pack_interior(&self) -> Vec<f64> {
        let g = self.grid;
        let mut out = Vec::with_capacity(n_interior(&g));
        for j in 0..g.ny {
            for i in 1..g.nx {
                out.push(self.ux[g.xface(i, j)]);
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                out.push(self.uy[g.yface(i, j)]);
            }
        }
        out
    }

    pub fn unpack_interior(grid: Grid, data: &[f64]) -> Self {
        let mut v = Self::zeros(grid);
        let (xs, ys) = data.split_at((grid.nx - 1) * grid.ny);
        for j in 0..grid.ny {
            for i in 1..grid.nx {
                v.ux[grid.xface(i, j)] = xs[j * (grid.nx - 1) + (i - 1)];
            }
        }
        for j in 1..grid.ny {
            for i in 0..grid.nx {
                v.uy[grid.yface(i, j)] = ys[(j - 1) * grid.nx + i];
            }
        }
        v
    }
}

/// Number of interior face unknowns of a no-slip MAC field.
pub fn n_interior(g: &Grid) -> usize {
    (g.nx - 1) * g.ny + g.nx * (g.ny - 1)
}

/// Corner-located scalar, `values[j * (nx + 1) + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl NodeField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_nodes()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_nodes());
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                values.push(f(grid.xn(i), grid.yn(j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.grid.nx + 1) + i]
    }

    pub fn zero_boundary(&mut self) {
        let g = self.grid;
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                if i == 0 || j == 0 || i == g.nx || j == g.ny {
                    self.values[g.node(i, j)] = 0.0;
                }
            }
        }
    }

    pub fn pack_interior(&self) -> Vec<f64> {
        let g = self.grid;
        let mut out = Vec::with_capacity((g.nx - 1) * (g.ny - 1));
        for j in 1..g.ny {
            for i in 1..g.nx {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn unpack_interior(grid: Grid, data: &[f64]) -> Self {
        let mut out = Self::zeros(grid);
        for j in 1..grid.ny {
            for i in 1..grid.nx {
                out.values[grid.node(i, j)] = data[(j - 1) * (grid.nx - 1) + (i - 1)];
            }
        }
        out
    }
}

/// Rank-2 tensor on the staggered grid: diagonal components at cell
/// centers, off-diagonal components at nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub grid: Grid,
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
    pub xy: Vec<f64>,
    pub yx: Vec<f64>,
}

impl TensorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            xx: vec![0.0; grid.n_cells()],
            yy: vec![0.0; grid.n_cells()],
            xy: vec![0.0; grid.n_nodes()],
            yx: vec![0.0; grid.n_nodes()],
        }
    }

    /// Frobenius inner product `(S : T)` with cell and node quadrature.
    pub fn dot(&self, other: &TensorField) -> f64 {
        let g = self.grid;
        let cells = (dot(&self.xx, &other.xx) + dot(&self.yy, &other.yy)) * g.cell_area();
        let mut nodes = 0.0;
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let k = g.node(i, j);
                nodes +=
                    g.node_weight(i, j) * (self.xy[k] * other.xy[k] + self.yx[k] * other.yx[k]);
            }
        }
        cells + nodes
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        self.xy == self.yx
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghosts_follow_boundary_condition() {
        let g = Grid::unit(4).unwrap();
        let f = ScalarField::from_fn(g, BoundaryCondition::Neumann, |x, y| x + 10.0 * y);
        assert_eq!(f.at(-1, 2), f.get(0, 2));
        assert_eq!(f.at(4, 1), f.get(3, 1));
        let d = f.clone().with_bc(BoundaryCondition::Dirichlet);
        assert_eq!(d.at(-1, 2), -d.get(0, 2));
        assert_eq!(d.at(-1, -1), d.get(0, 0));
        assert_eq!(d.at(2, 4), -d.get(2, 3));
    }

    #[test]
    fn pack_unpack_interior_faces() {
        let g = Grid::new(5, 4, 1.0, 1.0).unwrap();
        let v = MacField::from_fn(g, |x, y| x * y + 1.0, |x, y| x - y);
        let packed = v.pack_interior();
        assert_eq!(packed.len(), n_interior(&g));
        assert_eq!(MacField::unpack_interior(g, &packed), v);
        assert!(v.is_no_slip());
    }
}
