//! Fast diagonalization of the separable constant-coefficient stencils.
//!
//! Every constant-coefficient operator used here (Neumann and Dirichlet
//! cell Laplacians, the componentwise MAC vector Laplacian, the node
//! Laplacian for stream functions) is a Kronecker sum of 1D three-point
//! operators whose eigenvectors are known sines and cosines. Applying any
//! function of the operator is two dense transforms and a diagonal scale.

use nalgebra::DMatrix;

use crate::field::{BoundaryCondition, MacField, NodeField, ScalarField};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// Cell centers, mirrored ghosts.
    CellNeumann,
    /// Cell centers, anti-mirrored ghosts.
    CellDirichlet,
    /// Interior nodes/faces of a segment with zero end values.
    InteriorDirichlet,
}

/// One-dimensional eigenbasis of `-d^2/dx^2` for a given layout.
#[derive(Debug, Clone)]
pub struct Axis {
    pub kind: AxisKind,
    /// Orthonormal eigenvectors as columns.
    pub q: DMatrix<f64>,
    pub lambda: Vec<f64>,
}

impl Axis {
    /// `cells` is the number of grid cells along the axis, `h` the spacing.
    pub fn new(kind: AxisKind, cells: usize, h: f64) -> Self {
        use std::f64::consts::PI;
        let n = cells as f64;
        let s = 4.0 / (h * h);
        let (pts, q, lambda) = match kind {
            AxisKind::CellNeumann => {
                let q = DMatrix::from_fn(cells, cells, |i, k| {
                    let norm = if k == 0 {
                        (1.0 / n).sqrt()
                    } else {
                        (2.0 / n).sqrt()
                    };
                    norm * (k as f64 * PI * (i as f64 + 0.5) / n).cos()
                });
                let lam = (0..cells)
                    .map(|k| s * (k as f64 * PI / (2.0 * n)).sin().powi(2))
                    .collect();
                (cells, q, lam)
            }
            AxisKind::CellDirichlet => {
                let q = DMatrix::from_fn(cells, cells, |i, k| {
                    let norm = if k + 1 == cells {
                        (1.0 / n).sqrt()
                    } else {
                        (2.0 / n).sqrt()
                    };
                    norm * ((k + 1) as f64 * PI * (i as f64 + 0.5) / n).sin()
                });
                let lam = (0..cells)
                    .map(|k| s * ((k + 1) as f64 * PI / (2.0 * n)).sin().powi(2))
                    .collect();
                (cells, q, lam)
            }
            AxisKind::InteriorDirichlet => {
                let m = cells - 1;
                let q = DMatrix::from_fn(m, m, |i, k| {
                    (2.0 / n).sqrt() * ((k + 1) as f64 * PI * (i + 1) as f64 / n).sin()
                });
                let lam = (0..m)
                    .map(|k| s * ((k + 1) as f64 * PI / (2.0 * n)).sin().powi(2))
                    .collect();
                (m, q, lam)
            }
        };
        debug_assert_eq!(q.nrows(), pts);
        Self { kind, q, lambda }
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// Kronecker-sum operator `Lx (x) I + I (x) Ly` on data stored x-fastest.
#[derive(Debug, Clone)]
pub struct Separable {
    ax: Axis,
    ay: Axis,
    qyt: DMatrix<f64>,
}

impl Separable {
    pub fn new(ax: Axis, ay: Axis) -> Self {
        let qyt = ay.q.transpose();
        Self { ax, ay, qyt }
    }

    /// Five-point Laplacian on cells with the given boundary condition.
    pub fn cells(grid: &Grid, bc: BoundaryCondition) -> Self {
        let kind = match bc {
            BoundaryCondition::Neumann => AxisKind::CellNeumann,
            BoundaryCondition::Dirichlet => AxisKind::CellDirichlet,
        };
        Self::new(
            Axis::new(kind, grid.nx, grid.dx),
            Axis::new(kind, grid.ny, grid.dy),
        )
    }

    /// Interior x-face unknowns of a no-slip field.
    pub fn xfaces(grid: &Grid) -> Self {
        Self::new(
            Axis::new(AxisKind::InteriorDirichlet, grid.nx, grid.dx),
            Axis::new(AxisKind::CellDirichlet, grid.ny, grid.dy),
        )
    }

    /// Interior y-face unknowns of a no-slip field.
    pub fn yfaces(grid: &Grid) -> Self {
        Self::new(
            Axis::new(AxisKind::CellDirichlet, grid.nx, grid.dx),
            Axis::new(AxisKind::InteriorDirichlet, grid.ny, grid.dy),
        )
    }

    /// Interior nodes with zero boundary values.
    pub fn nodes(grid: &Grid) -> Self {
        Self::new(
            Axis::new(AxisKind::InteriorDirichlet, grid.nx, grid.dx),
            Axis::new(AxisKind::InteriorDirichlet, grid.ny, grid.dy),
        )
    }

    pub fn len(&self) -> usize {
        self.ax.len() * self.ay.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn eigenvalue(&self, kx: usize, ky: usize) -> f64 {
        self.ax.lambda[kx] + self.ay.lambda[ky]
    }

    pub fn forward(&self, data: &[f64]) -> DMatrix<f64> {
        let x = DMatrix::from_column_slice(self.ax.len(), self.ay.len(), data);
        self.ax.q.tr_mul(&x) * &self.ay.q
    }

    pub fn inverse(&self, coef: &DMatrix<f64>) -> Vec<f64> {
        let x = (&self.ax.q * coef) * &self.qyt;
        x.as_slice().to_vec()
    }

    /// `f(L) data`, where `f` receives each eigenvalue.
    pub fn apply(&self, data: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut c = self.forward(data);
        for ky in 0..self.ay.len() {
            for kx in 0..self.ax.len() {
                c[(kx, ky)] *= f(self.eigenvalue(kx, ky));
            }
        }
        self.inverse(&c)
    }

    /// Smallest eigenvalue.
    pub fn lambda_min(&self) -> f64 {
        self.ax.lambda[0] + self.ay.lambda[0]
    }
}

/// Spectral functions of the negative cell Laplacian.
#[derive(Debug, Clone)]
pub struct CellSpectral {
    pub grid: Grid,
    pub bc: BoundaryCondition,
    op: Separable,
}

impl CellSpectral {
    pub fn new(grid: Grid, bc: BoundaryCondition) -> Self {
        Self {
            grid,
            bc,
            op: Separable::cells(&grid, bc),
        }
    }

    pub fn apply(&self, f: &ScalarField, m: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            bc: self.bc,
            values: self.op.apply(&f.values, m),
        }
    }

    pub fn apply_slice(&self, data: &[f64], m: impl Fn(f64) -> f64) -> Vec<f64> {
        self.op.apply(data, m)
    }

    /// Inverse of the negative Laplacian; the Neumann null space is
    /// projected out.
    pub fn inverse_laplacian(&self, f: &ScalarField) -> ScalarField {
        self.apply(f, |l| if l > 0.0 { 1.0 / l } else { 0.0 })
    }

    pub fn operator(&self) -> &Separable {
        &self.op
    }
}

/// Spectral functions of the componentwise negative Laplacian on no-slip
/// MAC fields (interior faces).
#[derive(Debug, Clone)]
pub struct VectorSpectral {
    pub grid: Grid,
    xs: Separable,
    ys: Separable,
}

impl VectorSpectral {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            xs: Separable::xfaces(&grid),
            ys: Separable::yfaces(&grid),
        }
    }

    pub fn apply(&self, v: &MacField, m: impl Fn(f64) -> f64 + Copy) -> MacField {
        let packed = v.pack_interior();
        let nxs = self.xs.len();
        let mut out = self.xs.apply(&packed[..nxs], m);
        out.extend(self.ys.apply(&packed[nxs..], m));
        MacField::unpack_interior(self.grid, &out)
    }

    pub fn lambda_min(&self) -> f64 {
        self.xs.lambda_min().min(self.ys.lambda_min())
    }
}

/// Node Laplacian with zero boundary values.
#[derive(Debug, Clone)]
pub struct NodeSpectral {
    pub grid: Grid,
    op: Separable,
}

impl NodeSpectral {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            op: Separable::nodes(&grid),
        }
    }

    pub fn apply(&self, f: &NodeField, m: impl Fn(f64) -> f64) -> NodeField {
        NodeField::unpack_interior(self.grid, &self.op.apply(&f.pack_interior(), m))
    }

    pub fn apply_slice(&self, data: &[f64], m: impl Fn(f64) -> f64) -> Vec<f64> {
        self.op.apply(data, m)
    }

    pub fn operator(&self) -> &Separable {
        &self.op
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{laplacian, neg_vector_laplacian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn axis_bases_are_orthonormal() {
        for kind in [
            AxisKind::CellNeumann,
            AxisKind::CellDirichlet,
            AxisKind::InteriorDirichlet,
        ] {
            let a = Axis::new(kind, 9, 0.1);
            let gram = a.q.tr_mul(&a.q);
            let err = (gram - DMatrix::identity(a.len(), a.len())).abs().max();
            assert!(err < 1e-13, "{kind:?}: {err}");
        }
    }

    #[test]
    fn cell_transform_diagonalizes_laplacian() {
        let g = Grid::new(10, 7, 1.0, 0.6).unwrap();
        for bc in [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet] {
            let f = ScalarField::from_values(g, bc, rand_vec(g.n_cells(), 1)).unwrap();
            let sp = CellSpectral::new(g, bc);
            let a = sp.apply(&f, |l| l);
            let b = laplacian(&f).scaled(-1.0);
            assert!(a.sub(&b).max_abs() < 1e-9 * b.max_abs(), "{bc:?}");
        }
    }

    #[test]
    fn vector_transform_diagonalizes_componentwise_laplacian() {
        let g = Grid::new(8, 11, 1.0, 1.3).unwrap();
        let v = MacField::unpack_interior(g, &rand_vec(crate::field::n_interior(&g), 2));
        let a = VectorSpectral::new(g).apply(&v, |l| l);
        let b = neg_vector_laplacian(&v);
        assert!(a.sub(&b).max_abs() < 1e-9 * b.max_abs());
    }

    #[test]
    fn inverse_round_trip() {
        let g = Grid::unit(12).unwrap();
        let f = ScalarField::from_values(g, BoundaryCondition::Neumann, rand_vec(g.n_cells(), 3))
            .unwrap()
            .mean_free();
        let sp = CellSpectral::new(g, BoundaryCondition::Neumann);
        let u = sp.inverse_laplacian(&f);
        let back = laplacian(&u).scaled(-1.0);
        assert!(back.sub(&f).max_abs() < 1e-10);
        assert!(u.mean().abs() < 1e-13);
    }
}
