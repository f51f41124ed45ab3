//! First-Born LCAO transition amplitudes for Σg(ν) → Σu(E, L) electron impact.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::continuum_states::ContinuumState;
use crate::error::{Error, Result};
use crate::grid::{simpson_weights, RadialFunction};
use crate::special::spherical_j_all;

pub use crate::special::spherical_j as spherical_bessel;

/// Relative cut below which the bound state is treated as zero.
const SUPPORT_CUT: f64 = 1e-10;

#[inline]
fn atomic_overlap(r: f64) -> f64 {
    (-r).exp() * (1.0 + r + r * r / 3.0)
}

/// LCAO normalization factors (N⁺, N⁻) at internuclear distance `r`.
pub fn lcao_norms(r: f64) -> Result<(f64, f64)> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("LCAO norms need R > 0, got {r}")));
    }
    let s = atomic_overlap(r);
    Ok(((2.0 + 2.0 * s).powf(-0.5), (2.0 - 2.0 * s).powf(-0.5)))
}

/// 16/π² · 1/(k̃²(4 + k̃²)²)
pub fn radial_prefactor(k_tilde: f64) -> Result<f64> {
    if !(k_tilde.is_finite() && k_tilde > 0.0) {
        return Err(Error::KinematicDegenerate(k_tilde));
    }
    let q2 = k_tilde * k_tilde;
    Ok(16.0 / (PI * PI) / (q2 * (4.0 + q2) * (4.0 + q2)))
}

/// Incident and outgoing relative momenta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumTransfer {
    pub k_i: [f64; 3],
    pub k_f: [f64; 3],
}

impl MomentumTransfer {
    /// Incident momentum along +z, outgoing at polar angle θ and azimuth ϕ.
    pub fn from_angles(k_i: f64, k_f: f64, cos_theta: f64, azimuth: f64) -> Self {
        let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        MomentumTransfer {
            k_i: [0.0, 0.0, k_i],
            k_f: [
                k_f * sin_theta * azimuth.cos(),
                k_f * sin_theta * azimuth.sin(),
                k_f * cos_theta,
            ],
        }
    }

    pub fn k_tilde_vec(&self) -> [f64; 3] {
        [
            self.k_f[0] - self.k_i[0],
            self.k_f[1] - self.k_i[1],
            self.k_f[2] - self.k_i[2],
        ]
    }

    pub fn k_tilde(&self) -> f64 {
        let q = self.k_tilde_vec();
        (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()
    }
}

/// |k_f − k_i| from magnitudes and the angle between them.
pub fn k_tilde_from(k_i: f64, k_f: f64, cos_theta: f64) -> f64 {
    (k_i * k_i + k_f * k_f - 2.0 * k_i * k_f * cos_theta).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TMatrixElement {
    pub nu: usize,
    pub energy: f64,
    pub l: usize,
    pub value: Complex64,
}

/// Radial integrand N⁺N⁻ χ_{E,L} χ_ν for several partial waves, restricted to
/// the support of the bound state with quadrature weights folded in.
#[derive(Debug, Clone)]
pub struct OverlapKernel {
    radii: Vec<f64>,
    ls: Vec<usize>,
    l_max: usize,
    // row-major [point][partial wave]
    weighted: Vec<f64>,
}

impl OverlapKernel {
    pub fn new(bound: &RadialFunction, continua: &[&RadialFunction]) -> Result<Self> {
        let grid = bound.grid;
        if continua.iter().any(|c| c.grid != grid) {
            return Err(Error::Domain("bound and continuum states must share a grid".into()));
        }
        let range = bound.support(SUPPORT_CUT);
        let weights = simpson_weights(range.len(), grid.dr());
        let ls: Vec<usize> = continua.iter().map(|c| c.l).collect();
        let l_max = ls.iter().copied().max().unwrap_or(0);
        let mut radii = Vec::with_capacity(range.len());
        let mut weighted = Vec::with_capacity(range.len() * ls.len());
        for (w, i) in weights.iter().zip(range) {
            let r = grid.r(i);
            let (np, nm) = lcao_norms(r)?;
            let base = w * np * nm * bound.values[i];
            radii.push(r);
            weighted.extend(continua.iter().map(|c| base * c.values[i]));
        }
        Ok(OverlapKernel {
            radii,
            ls,
            l_max,
            weighted,
        })
    }

    pub fn partial_waves(&self) -> &[usize] {
        &self.ls
    }

    /// ∫ N⁺N⁻ χ_{E,L} j_L(k̃R/2) χ_ν dR for every partial wave, without prefactor.
    pub fn bare_integrals(&self, k_tilde: f64, out: &mut [f64]) {
        let nl = self.ls.len();
        assert_eq!(out.len(), nl);
        out.fill(0.0);
        let mut bessel = vec![0.0; self.l_max + 1];
        for (p, &r) in self.radii.iter().enumerate() {
            spherical_j_all(0.5 * k_tilde * r, &mut bessel);
            let row = &self.weighted[p * nl..(p + 1) * nl];
            for ((o, w), &l) in out.iter_mut().zip(row).zip(&self.ls) {
                *o += w * bessel[l];
            }
        }
    }

    /// Radial integrals R(L, ν, E, k̃) including the prefactor.
    pub fn radial_integrals(&self, k_tilde: f64) -> Result<Vec<f64>> {
        let pref = radial_prefactor(k_tilde)?;
        let mut out = vec![0.0; self.ls.len()];
        self.bare_integrals(k_tilde, &mut out);
        out.iter_mut().for_each(|v| *v *= pref);
        Ok(out)
    }
}

/// R(L, ν, E, k̃) for one bound/continuum pair.
pub fn radial_integral(bound: &RadialFunction, continuum: &RadialFunction, k_tilde: f64) -> Result<f64> {
    let pref = radial_prefactor(k_tilde)?;
    let kernel = OverlapKernel::new(bound, &[continuum])?;
    let mut out = [0.0];
    kernel.bare_integrals(k_tilde, &mut out);
    Ok(pref * out[0])
}

/// i^L √(2L+1) R(L, ν, E, k̃).
pub fn t_element(
    nu: usize,
    bound: &RadialFunction,
    continuum: &ContinuumState,
    kinematics: &MomentumTransfer,
) -> Result<TMatrixElement> {
    let l = continuum.l;
    let radial = radial_integral(bound, &continuum.wavefunction, kinematics.k_tilde())?;
    let phase = Complex64::i().powu(l as u32);
    Ok(TMatrixElement {
        nu,
        energy: continuum.energy,
        l,
        value: phase * ((2 * l + 1) as f64).sqrt() * radial,
    })
}

/// Bare radial integrals tabulated against k̃ for interpolation.
///
/// Nodes are uniform in ln(k̃ + c), so small momentum transfers are sampled
/// linearly and large ones geometrically.
#[derive(Debug, Clone)]
pub struct RadialTable {
    offset: f64,
    u0: f64,
    du: f64,
    n_l: usize,
    // row-major [node][partial wave]
    values: Vec<f64>,
}

impl RadialTable {
    const OFFSET: f64 = 0.05;
    const POINTS_PER_OSCILLATION: f64 = 40.0;

    pub fn build(kernel: &OverlapKernel, k_max: f64) -> Self {
        let offset = Self::OFFSET;
        let r_out = kernel.radii.last().copied().unwrap_or(1.0).max(1.0);
        let k_hi = k_max * 1.02 + 0.05;
        // one j_L(k̃R/2) oscillation spans 4π/R in k̃
        let du = (4.0 * PI / r_out / Self::POINTS_PER_OSCILLATION / (k_hi + offset)).min(0.01);
        let u0 = offset.ln();
        let n = (((k_hi + offset).ln() - u0) / du).ceil() as usize + 4;
        let n_l = kernel.ls.len();
        let mut values = vec![0.0; n * n_l];
        for (node, chunk) in values.chunks_mut(n_l).enumerate() {
            let k = (u0 + node as f64 * du).exp() - offset;
            kernel.bare_integrals(k.max(0.0), chunk);
        }
        RadialTable {
            offset,
            u0,
            du,
            n_l,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.n_l.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Four-point Lagrange interpolation of the bare integrals, times the prefactor.
    pub fn radial_integrals(&self, k_tilde: f64, out: &mut [f64]) -> Result<()> {
        let pref = radial_prefactor(k_tilde)?;
        let t = ((k_tilde + self.offset).ln() - self.u0) / self.du;
        let n = self.len();
        let base = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let x = t - base as f64;
        // nodes at 0, 1, 2, 3
        let c = [
            -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0,
            x * (x - 2.0) * (x - 3.0) / 2.0,
            -x * (x - 1.0) * (x - 3.0) / 2.0,
            x * (x - 1.0) * (x - 2.0) / 6.0,
        ];
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (m, cm) in c.iter().enumerate() {
                acc += cm * self.values[(base + m) * self.n_l + j];
            }
            *o = acc * pref;
        }
        Ok(())
    }
}
