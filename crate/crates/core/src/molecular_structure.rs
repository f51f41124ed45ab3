//! Σg/Σu potential curves of H₂⁺ and analytic Morse vibrational states.

use std::f64::consts::PI;

use crate::error::{check_positive, Error, Result};
use crate::grid::{simpson, Normalization, RadialFunction, RadialGrid};
use crate::special::{laguerre, ln_factorial, ln_gamma};
use crate::units::{au_to_fs, Masses};

const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PotentialParams {
    /// Well depth (hartree).
    pub depth: f64,
    /// Range parameter (1/bohr).
    pub alpha: f64,
    /// Equilibrium separation (bohr).
    pub r_eq: f64,
    pub masses: Masses,
}

impl Default for PotentialParams {
    fn default() -> Self {
        PotentialParams {
            depth: 0.1026,
            alpha: 0.72,
            r_eq: 2.0,
            masses: Masses::default(),
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("morse.D", self.depth)?;
        check_positive("morse.alpha", self.alpha)?;
        check_positive("morse.Re", self.r_eq)?;
        check_positive("masses.mp", self.masses.proton)
    }

    pub fn reduced_mass(&self) -> f64 {
        self.masses.nuclear_reduced()
    }

    /// Harmonic frequency ω = α√(2D/μ).
    pub fn omega(&self) -> f64 {
        self.alpha * (2.0 * self.depth / self.reduced_mass()).sqrt()
    }

    /// Morse well parameter λ = √(2μD)/α.
    pub fn well_parameter(&self) -> f64 {
        (2.0 * self.reduced_mass() * self.depth).sqrt() / self.alpha
    }

    /// Number of bound vibrational levels.
    pub fn level_count(&self) -> usize {
        let top = self.well_parameter() - 0.5;
        if top <= 0.0 {
            0
        } else {
            top.ceil() as usize
        }
    }

    /// E_ν from the Morse level formula.
    pub fn level_energy(&self, nu: usize) -> f64 {
        let x = nu as f64 + 0.5;
        let w = self.omega();
        -self.depth + w * x - w * w / (4.0 * self.depth) * x * x
    }

    #[inline]
    pub(crate) fn sigma_g_unchecked(&self, r: f64) -> f64 {
        let e = (-self.alpha * (r - self.r_eq)).exp();
        self.depth * (e * e - 2.0 * e)
    }

    #[inline]
    pub(crate) fn sigma_u_unchecked(&self, r: f64) -> f64 {
        let e = (-self.alpha * (r - self.r_eq)).exp();
        0.5 * self.depth * (e * e + 2.0 * e)
    }

    /// Bonding Σg curve.
    pub fn sigma_g(&self, r: f64) -> Result<f64> {
        check_positive("R", r)?;
        Ok(self.sigma_g_unchecked(r))
    }

    /// Repulsive Σu curve.
    pub fn sigma_u(&self, r: f64) -> Result<f64> {
        check_positive("R", r)?;
        Ok(self.sigma_u_unchecked(r))
    }

    /// Morse eigenfunction χ_ν(R), unit normalized on (−∞, ∞).
    ///
    /// Phase: the innermost lobe is positive.
    pub fn morse_wavefunction(&self, nu: usize, r: f64) -> f64 {
        let lam = self.well_parameter();
        let s = lam - nu as f64 - 0.5;
        let two_s = 2.0 * s;
        let z = 2.0 * lam * (-self.alpha * (r - self.r_eq)).exp();
        let ln_norm = 0.5 * ((self.alpha * two_s).ln() + ln_factorial(nu) - ln_gamma(2.0 * lam - nu as f64));
        let sign = if nu.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * (ln_norm + s * z.ln() - 0.5 * z).exp() * laguerre(nu, two_s, z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundLevel {
    pub nu: usize,
    pub energy: f64,
    pub wavefunction: RadialFunction,
}

/// All bound Morse levels of the Σg well sampled on `grid`.
pub fn morse_levels(params: &PotentialParams, grid: &RadialGrid) -> Result<Vec<BoundLevel>> {
    params.validate()?;
    let count = params.level_count();
    if count == 0 {
        return Err(Error::Config(
            "Morse parameters support no bound vibrational level".into(),
        ));
    }
    Ok((0..count)
        .map(|nu| {
            let values: Vec<f64> = grid.points().map(|r| params.morse_wavefunction(nu, r)).collect();
            let energy = params.level_energy(nu);
            BoundLevel {
                nu,
                energy,
                wavefunction: RadialFunction {
                    grid: *grid,
                    values,
                    energy,
                    l: 0,
                    normalization: Normalization::Unit,
                },
            }
        })
        .collect())
}

/// ⟨R⟩ of a unit-normalized radial function.
pub fn expectation_r(f: &RadialFunction) -> Result<f64> {
    let norm = f.norm_squared();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvariantViolation(format!(
            "radial function not normalized (∫|χ|² = {norm})"
        )));
    }
    let g = &f.grid;
    let weighted: Vec<f64> = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| g.r(i) * v * v)
        .collect();
    Ok(simpson(&weighted, g.dr()))
}

pub fn bound_expectation_r(level: &BoundLevel) -> Result<f64> {
    expectation_r(&level.wavefunction)
}

/// 2π/(E₁ − E₀) in femtoseconds.
pub fn vibrational_period_fs(params: &PotentialParams) -> f64 {
    let gap = params.level_energy(1) - params.level_energy(0);
    au_to_fs(2.0 * PI / gap)
}

/// Potential model plus its sampled bound levels.
#[derive(Debug, Clone)]
pub struct Molecule {
    pub params: PotentialParams,
    pub grid: RadialGrid,
    pub levels: Vec<BoundLevel>,
}

impl Molecule {
    pub fn new(params: PotentialParams, grid: RadialGrid) -> Result<Self> {
        let levels = morse_levels(&params, &grid)?;
        Ok(Molecule { params, grid, levels })
    }

    pub fn level(&self, nu: usize) -> Result<&BoundLevel> {
        self.levels.get(nu).ok_or_else(|| {
            Error::Domain(format!(
                "vibrational level {nu} not bound ({} levels)",
                self.levels.len()
            ))
        })
    }

    pub fn energy(&self, nu: usize) -> Result<f64> {
        Ok(self.level(nu)?.energy)
    }
}
