//! Uniform rectangular grid on `(0, lx) x (0, ly)`.
//!
//! Scalars live at cell centers, velocity components on cell faces (MAC
//! staggering) and stream functions / shear components on cell corners.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells per axis, got {nx}x{ny}"
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain lengths must be positive, got {lx}x{ly}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
        })
    }

    /// `n x n` cells on the unit square.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Smaller of the two spacings.
    pub fn h(&self) -> f64 {
        self.dx.min(self.dy)
    }

    #[inline]
    pub fn xc(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn yc(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    #[inline]
    pub fn xn(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    #[inline]
    pub fn yn(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Index of the x-face at `(x_i, y_{j+1/2})`, `i in 0..=nx`.
    #[inline]
    pub fn xface(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Index of the y-face at `(x_{i+1/2}, y_j)`, `j in 0..=ny`.
    #[inline]
    pub fn yface(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn n_xfaces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn n_yfaces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// Quadrature weight of node `(i, j)`: full cell area inside, half on
    /// edges, quarter at corners.
    #[inline]
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        let fx = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
        let fy = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
        fx * fy * self.cell_area()
    }

    #[inline]
    pub fn xface_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx {
            0.5 * self.cell_area()
        } else {
            self.cell_area()
        }
    }

    #[inline]
    pub fn yface_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny {
            0.5 * self.cell_area()
        } else {
            self.cell_area()
        }
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
