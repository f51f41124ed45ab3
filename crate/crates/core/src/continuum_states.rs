//! Energy-normalized continuum states on the repulsive curve.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{simpson, Normalization, RadialFunction, RadialGrid};
use crate::molecular_structure::PotentialParams;
use crate::numerov;
use crate::special::{free_phase, spherical_j_all, spherical_y_all};

/// A potential sampled on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl SampledPotential {
    pub fn from_fn(grid: RadialGrid, v: impl Fn(f64) -> f64) -> Self {
        SampledPotential {
            values: grid.points().map(v).collect(),
            grid,
        }
    }

    pub fn zero(grid: RadialGrid) -> Self {
        SampledPotential {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn sigma_u(params: &PotentialParams, grid: RadialGrid) -> Self {
        Self::from_fn(grid, |r| params.sigma_u_unchecked(r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MatchOptions {
    /// Matching starts where |V| < tolerance · E.
    pub tolerance: f64,
    /// Lower bound on the matching radius (bohr).
    pub min_radius: f64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            tolerance: 1e-6,
            min_radius: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumState {
    pub energy: f64,
    pub l: usize,
    pub wavefunction: RadialFunction,
    /// Phase shift relative to the free partial wave (radians).
    pub phase_shift: f64,
    pub asymptotic_k: f64,
    pub match_radius: f64,
}

impl ContinuumState {
    /// Energy-normalized asymptotic amplitude √(2μ/(πk)).
    pub fn asymptotic_amplitude(mu: f64, k: f64) -> f64 {
        (2.0 * mu / (PI * k)).sqrt()
    }
}

/// Regular solution of −χ''/(2μ) + [V + L(L+1)/(2μR²)]χ = Eχ, energy normalized.
pub fn solve_continuum(
    energy: f64,
    l: usize,
    potential: &SampledPotential,
    mu: f64,
    options: &MatchOptions,
) -> Result<ContinuumState> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::Domain(format!("continuum energy must be positive, got {energy}")));
    }
    let grid = potential.grid;
    let n = grid.len();
    let h = grid.dr();
    let k = (2.0 * mu * energy).sqrt();
    let centrifugal = (l * (l + 1)) as f64;

    let f: Vec<f64> = potential
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let r = grid.r(i);
            if r == 0.0 {
                0.0
            } else {
                2.0 * mu * (energy - v) - centrifugal / (r * r)
            }
        })
        .collect();

    let threshold = options.tolerance * energy;
    // keep kR away from the origin where the Riccati pair degenerates
    let r_turn = 1.0 / k;
    let m = (2..n - 1)
        .find(|&i| {
            let r = grid.r(i);
            r >= options.min_radius && r >= r_turn && potential.values[i].abs() < threshold
        })
        .ok_or(Error::GridTooSmall {
            energy,
            l,
            r_max: grid.r_max(),
        })?;

    let mut y = vec![0.0; n];
    y[1] = h.powi(l as i32 + 1);
    numerov::propagate(&f, h, &mut y);

    let (r1, r2) = (grid.r(m), grid.r(m + 1));
    let (j1, n1) = riccati_pair(l, k * r1);
    let (j2, n2) = riccati_pair(l, k * r2);
    let det = j1 * n2 - j2 * n1;
    let a = (y[m] * n2 - y[m + 1] * n1) / det;
    let b = (j1 * y[m + 1] - j2 * y[m]) / det;
    let amplitude = a.hypot(b);
    let reduced_phase = (-b).atan2(a);

    let nodes = y[1..=m].windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    let theta = free_phase(l, k * r1);
    let target = (nodes as f64 + 0.5) * PI;
    let turns = ((target - theta - reduced_phase) / (2.0 * PI)).round();
    let phase_shift = reduced_phase + 2.0 * PI * turns;

    let scale = ContinuumState::asymptotic_amplitude(mu, k) / amplitude;
    y.iter_mut().for_each(|v| *v *= scale);

    Ok(ContinuumState {
        energy,
        l,
        wavefunction: RadialFunction {
            grid,
            values: y,
            energy,
            l,
            normalization: Normalization::Energy,
        },
        phase_shift,
        asymptotic_k: k,
        match_radius: r1,
    })
}

fn riccati_pair(l: usize, x: f64) -> (f64, f64) {
    let mut j = vec![0.0; l + 1];
    let mut y = vec![0.0; l + 1];
    spherical_j_all(x, &mut j);
    spherical_y_all(x, &mut y);
    (x * j[l], x * y[l])
}

/// ∫ χ_{E1,L} χ_{E2,L} dR over the whole grid.
pub fn energy_normalization_check(
    e1: f64,
    e2: f64,
    l: usize,
    potential: &SampledPotential,
    mu: f64,
    options: &MatchOptions,
) -> Result<f64> {
    let a = solve_continuum(e1, l, potential, mu, options)?;
    let b = solve_continuum(e2, l, potential, mu, options)?;
    let prod: Vec<f64> = a
        .wavefunction
        .values
        .iter()
        .zip(&b.wavefunction.values)
        .map(|(x, y)| x * y)
        .collect();
    Ok(simpson(&prod, potential.grid.dr()))
}
