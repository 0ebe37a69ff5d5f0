//! Discrete Lebesgue, Sobolev and Holder norms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{MacField, ScalarField};
use crate::grid::Grid;
use crate::ops::{grad, velocity_gradient, velocity_on_cells};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    L4,
    H1Semi,
    /// Full `H^2` norm: `L^2`, gradient and all second derivatives.
    H2,
    /// Holder seminorm `sup |f(x) - f(y)| / |x - y|^gamma`.
    HolderSemi(f64),
    Linf,
}

/// Above this many cells the Holder seminorm is maximized over a sampled
/// pair set instead of all pairs.
pub const HOLDER_FULL_PAIRS_MAX: usize = 48 * 48;

pub trait Normed {
    fn norm(&self, kind: NormKind) -> Result<f64>;
}

pub fn norm<T: Normed + ?Sized>(f: &T, kind: NormKind) -> Result<f64> {
    f.norm(kind)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "Holder exponent must lie in (0,1), got {gamma}"
        )))
    }
}

fn lp(values: &[f64], p: i32, w: f64) -> f64 {
    (values.iter().map(|v| v.abs().powi(p)).sum::<f64>() * w).powf(1.0 / p as f64)
}

/// Squared `L^2` norm of the discrete Hessian `fxx^2 + fyy^2 + 2 fxy^2`.
pub fn hessian_sq(f: &ScalarField) -> f64 {
    let g = f.grid;
    let (idx2, idy2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let mut diag = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let c = f.at(ii, jj);
            let fxx = (f.at(ii - 1, jj) - 2.0 * c + f.at(ii + 1, jj)) * idx2;
            let fyy = (f.at(ii, jj - 1) - 2.0 * c + f.at(ii, jj + 1)) * idy2;
            diag += fxx * fxx + fyy * fyy;
        }
    }
    let mut mixed = 0.0;
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let fxy = (f.at(ii, jj) - f.at(ii - 1, jj) - f.at(ii, jj - 1) + f.at(ii - 1, jj - 1))
                / (g.dx * g.dy);
            mixed += g.node_weight(i, j) * fxy * fxy;
        }
    }
    diag * g.cell_area() + 2.0 * mixed
}

/// `W^{1,4}` norm with the gradient measured on faces.
pub fn w14_norm(f: &ScalarField) -> f64 {
    let g = f.grid;
    let l4 = f.values.iter().map(|v| v.powi(4)).sum::<f64>() * g.cell_area();
    let gr = grad(f);
    let mut gl4 = 0.0;
    for j in 0..g.ny {
        for i in 0..=g.nx {
            gl4 += gr.ux[g.xface(i, j)].powi(4) * g.xface_weight(i);
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            gl4 += gr.uy[g.yface(i, j)].powi(4) * g.yface_weight(j);
        }
    }
    (l4 + gl4).powf(0.25)
}

/// Holder seminorm of cell values `v` located at cell centers of `g`.
pub fn holder_seminorm(g: &Grid, v: &[f64], gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let n = g.n_cells();
    let pos = |k: usize| (g.xc(k % g.nx), g.yc(k / g.nx));
    let ratio = |a: usize, b: usize| {
        let (xa, ya) = pos(a);
        let (xb, yb) = pos(b);
        let r = ((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt();
        (v[a] - v[b]).abs() / r.powf(gamma)
    };
    let mut best: f64 = 0.0;
    if n <= HOLDER_FULL_PAIRS_MAX {
        for a in 0..n {
            for b in (a + 1)..n {
                best = best.max(ratio(a, b));
            }
        }
        return Ok(best);
    }
    // Short-range pairs capture steep gradients, a strided subgrid and
    // random pairs capture the long-range part.
    const RADIUS: isize = 3;
    for a in 0..n {
        let (i, j) = ((a % g.nx) as isize, (a / g.nx) as isize);
        for dj in 0..=RADIUS {
            for di in -RADIUS..=RADIUS {
                if dj == 0 && di <= 0 {
                    continue;
                }
                let (ib, jb) = (i + di, j + dj);
                if ib < 0 || ib >= g.nx as isize || jb >= g.ny as isize {
                    continue;
                }
                best = best.max(ratio(a, g.cell(ib as usize, jb as usize)));
            }
        }
    }
    let stride = g.nx.max(g.ny).div_ceil(48);
    let sub: Vec<usize> = (0..g.ny)
        .step_by(stride)
        .flat_map(|j| (0..g.nx).step_by(stride).map(move |i| (i, j)))
        .map(|(i, j)| g.cell(i, j))
        .collect();
    for (s, &a) in sub.iter().enumerate() {
        for &b in &sub[s + 1..] {
            best = best.max(ratio(a, b));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..(4 * n) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            best = best.max(ratio(a, b));
        }
    }
    Ok(best)
}

impl Normed for ScalarField {
    fn norm(&self, kind: NormKind) -> Result<f64> {
        let g = self.grid;
        let w = g.cell_area();
        Ok(match kind {
            NormKind::L2 => lp(&self.values, 2, w),
            NormKind::L4 => lp(&self.values, 4, w),
            NormKind::Linf => self.max_abs(),
            NormKind::H1Semi => grad(self).norm_l2(),
            NormKind::H2 => {
                let l2 = self.dot(self);
                let h1 = grad(self).dot(&grad(self));
                (l2 + h1 + hessian_sq(self)).sqrt()
            }
            NormKind::HolderSemi(gamma) => holder_seminorm(&g, &self.values, gamma)?,
        })
    }
}

/// Squared second-derivative norm of both velocity components, using
/// no-slip ghosts.
fn mac_hessian_sq(v: &MacField) -> f64 {
    let g = v.grid;
    let (idx2, idy2, idxy) = (
        1.0 / (g.dx * g.dx),
        1.0 / (g.dy * g.dy),
        1.0 / (g.dx * g.dy),
    );
    let w = g.cell_area();
    let mut s = 0.0;
    for j in 0..g.ny {
        let jj = j as isize;
        for i in 1..g.nx {
            let c = v.ux_at(i, j);
            let xx = (v.ux_at(i - 1, j) - 2.0 * c + v.ux_at(i + 1, j)) * idx2;
            let yy = (v.ux_ghost(i, jj - 1) - 2.0 * c + v.ux_ghost(i, jj + 1)) * idy2;
            s += (xx * xx + yy * yy) * w;
        }
        for i in 0..g.nx {
            let xy = (v.ux_ghost(i + 1, jj + 1) - v.ux_ghost(i + 1, jj) - v.ux_ghost(i, jj + 1)
                + v.ux_ghost(i, jj))
                * idxy;
            s += 2.0 * xy * xy * w;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let ii = i as isize;
            let c = v.uy_at(i, j);
            let xx = (v.uy_ghost(ii - 1, j) - 2.0 * c + v.uy_ghost(ii + 1, j)) * idx2;
            let yy = (v.uy_at(i, j - 1) - 2.0 * c + v.uy_at(i, j + 1)) * idy2;
            s += (xx * xx + yy * yy) * w;
        }
    }
    for j in 0..g.ny {
        for i in 0..g.nx {
            let ii = i as isize;
            let xy = (v.uy_ghost(ii + 1, j + 1) - v.uy_ghost(ii, j + 1) - v.uy_ghost(ii + 1, j)
                + v.uy_ghost(ii, j))
                * idxy;
            s += 2.0 * xy * xy * w;
        }
    }
    s
}

impl Normed for MacField {
    fn norm(&self, kind: NormKind) -> Result<f64> {
        let g = self.grid;
        Ok(match kind {
            NormKind::L2 => self.norm_l2(),
            NormKind::L4 => {
                let mut s = 0.0;
                for j in 0..g.ny {
                    for i in 0..=g.nx {
                        s += self.ux[g.xface(i, j)].powi(4) * g.xface_weight(i);
                    }
                }
                for j in 0..=g.ny {
                    for i in 0..g.nx {
                        s += self.uy[g.yface(i, j)].powi(4) * g.yface_weight(j);
                    }
                }
                s.powf(0.25)
            }
            NormKind::Linf => self.max_abs(),
            NormKind::H1Semi => velocity_gradient(self).norm(),
            NormKind::H2 => {
                let gr = velocity_gradient(self).norm();
                (self.dot(self) + gr * gr + mac_hessian_sq(self)).sqrt()
            }
            NormKind::HolderSemi(gamma) => {
                let (ux, uy) = velocity_on_cells(self);
                holder_seminorm(&g, &ux, gamma)?.max(holder_seminorm(&g, &uy, gamma)?)
            }
        })
    }
}
