//! Seeded random smooth fields for experiments and property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::field::{BoundaryCondition, MacField, ScalarField};
use crate::grid::Grid;
use crate::ops::curl_of_fn;

fn coefficients(rng: &mut ChaCha8Rng, modes: usize) -> Vec<(usize, usize, f64)> {
    let mut c = Vec::with_capacity(modes * modes);
    for k in 0..modes {
        for l in 0..modes {
            let decay = 1.0 / (1.0 + (k * k + l * l) as f64);
            c.push((k, l, rng.gen_range(-1.0..1.0) * decay));
        }
    }
    c
}

/// Cosine series `sum a_kl cos(k pi x / lx) cos(l pi y / ly)` without the
/// constant mode, rescaled to `max |f| = amplitude`, plus `mean`.
pub fn smooth_neumann(
    grid: Grid,
    seed: u64,
    modes: usize,
    amplitude: f64,
    mean: f64,
) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = coefficients(&mut rng, modes.max(2));
    let (lx, ly) = (grid.lx, grid.ly);
    let f = ScalarField::from_fn(grid, BoundaryCondition::Neumann, |x, y| {
        c.iter()
            .filter(|(k, l, _)| k + l > 0)
            .map(|(k, l, a)| a * (*k as f64 * PI * x / lx).cos() * (*l as f64 * PI * y / ly).cos())
            .sum()
    });
    let f = f.mean_free();
    let s = amplitude / f.max_abs().max(f64::MIN_POSITIVE);
    f.map(|v| mean + s * v)
}

/// Sine series vanishing on the walls, rescaled to `max |f| = amplitude`.
pub fn smooth_dirichlet(grid: Grid, seed: u64, modes: usize, amplitude: f64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = coefficients(&mut rng, modes.max(1));
    let (lx, ly) = (grid.lx, grid.ly);
    let f = ScalarField::from_fn(grid, BoundaryCondition::Dirichlet, |x, y| {
        c.iter()
            .map(|(k, l, a)| {
                a * ((*k + 1) as f64 * PI * x / lx).sin() * ((*l + 1) as f64 * PI * y / ly).sin()
            })
            .sum()
    });
    let s = amplitude / f.max_abs().max(f64::MIN_POSITIVE);
    f.scaled(s)
}

/// Divergence-free no-slip velocity from a random sine-series stream
/// function, rescaled to `max |u| = amplitude`.
pub fn smooth_solenoidal(grid: Grid, seed: u64, modes: usize, amplitude: f64) -> MacField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = coefficients(&mut rng, modes.max(1));
    let (lx, ly) = (grid.lx, grid.ly);
    let u = curl_of_fn(grid, |x, y| {
        c.iter()
            .map(|(k, l, a)| {
                a * ((*k + 1) as f64 * PI * x / lx).sin() * ((*l + 1) as f64 * PI * y / ly).sin()
            })
            .sum()
    });
    let s = amplitude / u.max_abs().max(f64::MIN_POSITIVE);
    u.scaled(s)
}

/// Independent uniform values in `[-amplitude, amplitude]`, Neumann tagged,
/// shifted to the requested mean.
pub fn white_noise(grid: Grid, seed: u64, amplitude: f64, mean: f64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.n_cells())
        .map(|_| rng.gen_range(-amplitude..amplitude))
        .collect();
    let f = ScalarField {
        grid,
        bc: BoundaryCondition::Neumann,
        values,
    }
    .mean_free();
    f.map(|v| v + mean)
}
