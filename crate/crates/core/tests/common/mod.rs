#![allow(dead_code)]

use scatter_core::continuum_states::SampledPotential;
use scatter_core::grid::RadialGrid;
use scatter_core::molecular_structure::{Molecule, PotentialParams};

pub fn default_grid() -> RadialGrid {
    RadialGrid::new(0.2, 40.0, 0.01).unwrap()
}

pub fn molecule() -> Molecule {
    Molecule::new(PotentialParams::default(), default_grid()).unwrap()
}

pub fn repulsive(grid: RadialGrid) -> SampledPotential {
    SampledPotential::sigma_u(&PotentialParams::default(), grid)
}

/// Seven-point centered second derivative.
pub fn second_derivative(y: &[f64], i: usize, h: f64) -> f64 {
    (2.0 * y[i - 3] - 27.0 * y[i - 2] + 270.0 * y[i - 1] - 490.0 * y[i] + 270.0 * y[i + 1] - 27.0 * y[i + 2]
        + 2.0 * y[i + 3])
        / (180.0 * h * h)
}

/// ‖χ'' + fχ‖ / ‖fχ‖ over interior points.
pub fn relative_residual(y: &[f64], f: &[f64], h: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 3..y.len() - 3 {
        let r = second_derivative(y, i, h) + f[i] * y[i];
        num += r * r;
        den += (f[i] * y[i]).powi(2);
    }
    (num / den).sqrt()
}
