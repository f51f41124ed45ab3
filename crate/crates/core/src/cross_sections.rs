//! Dissociation cross sections: single-state, incoherent and thermal averages,
//! coherent superpositions, and φ-scan control curves.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLegendre};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::born_amplitudes::{radial_prefactor, OverlapKernel, RadialTable};
use crate::continuum_states::{solve_continuum, ContinuumState, MatchOptions, SampledPotential};
use crate::error::{check_positive, Error, Result};
use crate::grid::{trapezoid, RadialFunction};
use crate::kinematics::{cm_to_lab, enumerate_shells, lab_to_cm, Shell, DEFAULT_SHELL_TOLERANCE};
use crate::molecular_structure::Molecule;
use crate::superposition::{DiscreteState, PacketSpec, SuperpositionState};
use crate::units::{Masses, BOLTZMANN_HARTREE_PER_K};

/// (2π)⁴ times the trivial azimuthal 2π.
const PREFACTOR: f64 = 16.0 * PI * PI * PI * PI * 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CrossSectionOptions {
    /// Upper end of the fragment-energy grid (hartree).
    pub e_max: f64,
    pub n_energy: usize,
    /// Largest L of the first block; the block holds every odd L up to it.
    pub l_start: usize,
    pub l_cap: usize,
    /// Stop adding partial waves once the last one contributes less than this fraction.
    pub l_tolerance: f64,
    /// Gauss–Legendre nodes per angular panel.
    pub angular_nodes: usize,
    /// Gauss–Hermite nodes per packet dimension.
    pub packet_nodes: usize,
    pub phi_points: usize,
    pub matching: MatchOptions,
}

impl Default for CrossSectionOptions {
    fn default() -> Self {
        CrossSectionOptions {
            e_max: 0.8,
            n_energy: 160,
            l_start: 9,
            l_cap: 41,
            l_tolerance: 0.01,
            angular_nodes: 32,
            packet_nodes: 16,
            phi_points: 72,
            matching: MatchOptions::default(),
        }
    }
}

impl CrossSectionOptions {
    pub fn validate(&self) -> Result<()> {
        check_positive("e_max", self.e_max)?;
        check_positive("l_tolerance", self.l_tolerance)?;
        if self.n_energy < 2 || self.angular_nodes < 2 || self.packet_nodes < 2 || self.phi_points < 3 {
            return Err(Error::Config(
                "n_energy, angular_nodes and packet_nodes need ≥ 2 points, phi_points ≥ 3".into(),
            ));
        }
        if self.l_start.is_multiple_of(2) || self.l_cap < self.l_start {
            return Err(Error::Config(format!(
                "l_start must be odd and ≤ l_cap (got {} and {})",
                self.l_start, self.l_cap
            )));
        }
        Ok(())
    }
}

/// Fragment energies E_j = (j/n)² E_max, j = 1..=n.
pub fn energy_grid(e_max: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|j| {
            let x = j as f64 / n as f64;
            x * x * e_max
        })
        .collect()
}

/// ∫ dσ/dE dE with the curve pinned to zero at threshold.
pub fn integrate_spectrum(energies: &[f64], values: &[f64]) -> f64 {
    let mut x = Vec::with_capacity(energies.len() + 1);
    let mut y = Vec::with_capacity(values.len() + 1);
    x.push(0.0);
    y.push(0.0);
    x.extend_from_slice(energies);
    y.extend_from_slice(values);
    trapezoid(&x, &y)
}

/// A + B cos(φ + φ₀) fitted by least squares.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CosineFit {
    pub mean: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// Largest absolute deviation from the fit.
    pub residual: f64,
}

pub fn fit_cosine(phis: &[f64], values: &[f64]) -> Result<CosineFit> {
    if phis.len() != values.len() || phis.len() < 3 {
        return Err(Error::Domain("cosine fit needs ≥ 3 matching samples".into()));
    }
    // normal equations for a + b cos φ + c sin φ
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (&p, &v) in phis.iter().zip(values) {
        let f = [1.0, p.cos(), p.sin()];
        for i in 0..3 {
            rhs[i] += f[i] * v;
            for j in 0..3 {
                m[i][j] += f[i] * f[j];
            }
        }
    }
    let det3 = |a: &[[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det3(&m);
    if d.abs() < 1e-12 {
        return Err(Error::Degenerate("phase samples do not determine a cosine".into()));
    }
    let mut coef = [0.0; 3];
    for (k, c) in coef.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = rhs[i];
        }
        *c = det3(&mk) / d;
    }
    let [a, b, c] = coef;
    let residual = phis
        .iter()
        .zip(values)
        .map(|(&p, &v)| (v - a - b * p.cos() - c * p.sin()).abs())
        .fold(0.0, f64::max);
    Ok(CosineFit {
        mean: a,
        amplitude: b.hypot(c),
        phase: (-c).atan2(b),
        residual,
    })
}

/// `n` phases evenly covering [0, 2π).
pub fn phi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// (max − min)/(max + min) of σ(φ).
pub fn control_depth(curve: &SpectrumCurve) -> Result<f64> {
    if curve.values.is_empty() {
        return Err(Error::Domain("control depth of an empty curve".into()));
    }
    let max = curve.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.values.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min <= 0.0 {
        return Err(Error::Degenerate("σ(φ) vanishes everywhere".into()));
    }
    Ok((max - min) / (max + min))
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize)]
pub struct ConvergenceInfo {
    /// Partial waves summed, all odd.
    pub l_values: Vec<usize>,
    /// Largest share of an energy-integrated diagonal carried by the last L.
    pub last_l_fraction: f64,
    pub converged: bool,
}

impl ConvergenceInfo {
    pub fn l_max(&self) -> usize {
        self.l_values.iter().copied().max().unwrap_or(0)
    }

    fn merge(&mut self, other: &ConvergenceInfo) {
        for l in &other.l_values {
            if !self.l_values.contains(l) {
                self.l_values.push(*l);
            }
        }
        self.l_values.sort_unstable();
        self.last_l_fraction = self.last_l_fraction.max(other.last_l_fraction);
        self.converged &= other.converged;
    }

    fn empty_converged() -> Self {
        ConvergenceInfo {
            l_values: Vec::new(),
            last_l_fraction: 0.0,
            converged: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize)]
pub struct CurveMetadata {
    pub descriptor: String,
    pub l_max: usize,
    pub l_values: Vec<usize>,
    pub converged: bool,
    pub last_l_fraction: f64,
    /// dσ/dE at the top of the energy grid relative to its peak.
    pub tail_fraction: Option<f64>,
    /// Relative change of σ when the packet quadrature is doubled.
    pub packet_refinement: Option<f64>,
    pub fit: Option<CosineFit>,
}

impl CurveMetadata {
    fn from_info(descriptor: &str, info: &ConvergenceInfo) -> Self {
        CurveMetadata {
            descriptor: descriptor.to_string(),
            l_max: info.l_max(),
            l_values: info.l_values.clone(),
            converged: info.converged,
            last_l_fraction: info.last_l_fraction,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpectrumCurve {
    /// Energies (hartree) or phases (rad).
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub metadata: CurveMetadata,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpectrumResult {
    pub curve: SpectrumCurve,
    pub total: f64,
}

fn spectrum_result(energies: &[f64], values: Vec<f64>, metadata: CurveMetadata) -> SpectrumResult {
    let total = integrate_spectrum(energies, &values);
    let peak = values.iter().copied().fold(0.0, f64::max);
    let tail = if peak > 0.0 {
        Some(values.last().copied().unwrap_or(0.0) / peak)
    } else {
        None
    };
    SpectrumResult {
        curve: SpectrumCurve {
            grid: energies.to_vec(),
            values,
            metadata: CurveMetadata {
                tail_fraction: tail,
                ..metadata
            },
        },
        total,
    }
}

/// Energy-resolved coherence matrices M_{ab}(E); dσ/dE = Σ c_a c_b* M_{ab}.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMatrices {
    pub energies: Vec<f64>,
    pub dim: usize,
    /// Row-major dim × dim matrix per energy.
    pub values: Vec<Vec<Complex64>>,
    pub info: ConvergenceInfo,
}

impl CoherenceMatrices {
    /// dσ/dE for the given coefficients; roundoff below zero is clipped.
    pub fn spectrum(&self, coeffs: &[Complex64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.dim);
        self.values
            .iter()
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, ca) in coeffs.iter().enumerate() {
                    for (b, cb) in coeffs.iter().enumerate() {
                        acc += ca * cb.conj() * m[a * self.dim + b];
                    }
                }
                acc.re.max(0.0)
            })
            .collect()
    }

    pub fn total(&self, coeffs: &[Complex64]) -> f64 {
        integrate_spectrum(&self.energies, &self.spectrum(coeffs))
    }
}

/// Per-shell coherence matrices of a discrete state, reusable for any coefficients
/// on the same geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDiscrete {
    pub geometry: Vec<(usize, f64, f64)>,
    pub shells: Vec<Shell>,
    pub matrices: Vec<CoherenceMatrices>,
}

impl PreparedDiscrete {
    pub fn info(&self) -> ConvergenceInfo {
        let mut info = ConvergenceInfo::empty_converged();
        for m in &self.matrices {
            info.merge(&m.info);
        }
        info
    }

    pub fn spectrum(&self, state: &DiscreteState) -> Result<Vec<f64>> {
        if state.geometry() != self.geometry {
            return Err(Error::Domain("state geometry differs from the prepared one".into()));
        }
        let n_e = self.matrices.first().map_or(0, |m| m.energies.len());
        let mut out = vec![0.0; n_e];
        for (shell, m) in self.shells.iter().zip(&self.matrices) {
            let coeffs: Vec<Complex64> = shell.members.iter().map(|&i| state.components[i].coeff).collect();
            for (o, v) in out.iter_mut().zip(m.spectrum(&coeffs)) {
                *o += v;
            }
        }
        Ok(out)
    }
}

/// Momentum-transfer quadrature in s = 1 − cos θ: Gauss–Legendre in ln(s + s*) on
/// two panels, where s* is where k̃² stops being dominated by (k − k_f)².
fn angular_rule(gl: &[(f64, f64)], s_star: f64) -> Vec<(f64, f64)> {
    let s_star = s_star.max(1e-14);
    let s_c = (10.0 * s_star).clamp(0.01, 1.0);
    let cuts = [s_star.ln(), (s_c + s_star).ln(), (2.0 + s_star).ln()];
    let mut out = Vec::with_capacity(2 * gl.len());
    for panel in cuts.windows(2) {
        let half = 0.5 * (panel[1] - panel[0]);
        let mid = 0.5 * (panel[1] + panel[0]);
        for &(x, w) in gl {
            let ew = (mid + half * x).exp();
            out.push(((ew - s_star).max(0.0), half * w * ew));
        }
    }
    out
}

fn s_star(k: f64, k_f: f64) -> f64 {
    (k - k_f) * (k - k_f) / (2.0 * k * k_f)
}

fn odd_block(from: usize, to: usize) -> Vec<usize> {
    (from..=to).filter(|l| l % 2 == 1).collect()
}

/// Born-approximation cross-section engine for one molecule and repulsive curve.
#[derive(Debug, Clone)]
pub struct ScatteringModel {
    pub molecule: Molecule,
    pub repulsive: SampledPotential,
    pub options: CrossSectionOptions,
    energies: Vec<f64>,
    legendre: Vec<(f64, f64)>,
}

impl ScatteringModel {
    pub fn new(molecule: Molecule, options: CrossSectionOptions) -> Result<Self> {
        options.validate()?;
        let repulsive = SampledPotential::sigma_u(&molecule.params, molecule.grid);
        Ok(Self::with_repulsive(molecule, repulsive, options))
    }

    /// Engine with an arbitrary sampled repulsive curve on the molecule's grid.
    pub fn with_repulsive(molecule: Molecule, repulsive: SampledPotential, options: CrossSectionOptions) -> Self {
        let energies = energy_grid(options.e_max, options.n_energy);
        let legendre = gl_rule(options.angular_nodes);
        ScatteringModel {
            molecule,
            repulsive,
            options,
            energies,
            legendre,
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn masses(&self) -> Masses {
        self.molecule.params.masses
    }

    /// Continuum states at fragment energy `energy` for the requested partial waves.
    pub fn continua(&self, energy: f64, ls: &[usize]) -> Result<Vec<ContinuumState>> {
        if let Some(l) = ls.iter().find(|l| *l % 2 == 0) {
            return Err(Error::InvariantViolation(format!("even partial wave L = {l} requested")));
        }
        let mu = self.molecule.params.reduced_mass();
        ls.iter()
            .map(|&l| solve_continuum(energy, l, &self.repulsive, mu, &self.options.matching))
            .collect()
    }

    /// Extends the partial-wave sum block by block until the last L is negligible.
    ///
    /// `block` returns per-energy values laid out [L index][dim × dim].
    fn converge_l<F>(&self, dim: usize, mut block: F) -> Result<(Vec<Vec<Complex64>>, ConvergenceInfo)>
    where
        F: FnMut(&[usize]) -> Result<Vec<Vec<Complex64>>>,
    {
        let dd = dim * dim;
        let n_e = self.energies.len();
        let mut sum = vec![vec![Complex64::new(0.0, 0.0); dd]; n_e];
        let mut diag_total = vec![0.0; dim];
        let mut info = ConvergenceInfo::default();
        let mut ls = odd_block(1, self.options.l_start);
        loop {
            let values = block(&ls)?;
            let mut last = vec![0.0; dim];
            for (li, _) in ls.iter().enumerate() {
                for a in 0..dim {
                    let diag: Vec<f64> = values.iter().map(|v| v[li * dd + a * dim + a].re).collect();
                    let integral = integrate_spectrum(&self.energies, &diag);
                    diag_total[a] += integral;
                    last[a] = integral;
                }
            }
            for (s, v) in sum.iter_mut().zip(&values) {
                for li in 0..ls.len() {
                    for (x, y) in s.iter_mut().zip(&v[li * dd..(li + 1) * dd]) {
                        *x += y;
                    }
                }
            }
            info.l_values.extend_from_slice(&ls);
            info.last_l_fraction = last
                .iter()
                .zip(&diag_total)
                .filter(|(_, t)| **t > 0.0)
                .map(|(l, t)| l.abs() / t)
                .fold(0.0, f64::max);
            if info.last_l_fraction <= self.options.l_tolerance {
                info.converged = true;
                break;
            }
            let next = info.l_max() + 2;
            if next > self.options.l_cap {
                log::warn!(
                    "partial-wave sum not converged at L = {} (last share {:.3})",
                    info.l_max(),
                    info.last_l_fraction
                );
                break;
            }
            ls = vec![next];
        }
        Ok((sum, info))
    }

    /// Shell contributions for components (ν, |k|) sharing total energy `e_tot`.
    fn discrete_block(&self, comps: &[(usize, f64)], e_tot: f64, ls: &[usize]) -> Result<Vec<Vec<Complex64>>> {
        let n = comps.len();
        let dd = n * n;
        let nl = ls.len();
        let m_rel = self.masses().relative();
        let bounds: Vec<&RadialFunction> = comps
            .iter()
            .map(|(nu, _)| self.molecule.level(*nu).map(|l| &l.wavefunction))
            .collect::<Result<_>>()?;
        self.energies
            .par_iter()
            .map(|&e| -> Result<Vec<Complex64>> {
                let mut out = vec![0.0; nl * dd];
                let kf2 = 2.0 * m_rel * (e_tot - e);
                if kf2 <= 0.0 {
                    return Ok(out.into_iter().map(|v| Complex64::new(v, 0.0)).collect());
                }
                let k_f = kf2.sqrt();
                let cont = self.continua(e, ls)?;
                let refs: Vec<&RadialFunction> = cont.iter().map(|c| &c.wavefunction).collect();
                let kernels: Vec<OverlapKernel> = bounds
                    .iter()
                    .map(|b| OverlapKernel::new(b, &refs))
                    .collect::<Result<_>>()?;
                let star = comps.iter().map(|(_, k)| s_star(*k, k_f)).fold(f64::INFINITY, f64::min);
                let mut radial = vec![0.0; n * nl];
                for (s, w) in angular_rule(&self.legendre, star) {
                    for (a, (_, k)) in comps.iter().enumerate() {
                        let kt = ((k - k_f) * (k - k_f) + 2.0 * k * k_f * s).sqrt();
                        let row = &mut radial[a * nl..(a + 1) * nl];
                        kernels[a].bare_integrals(kt, row);
                        let pref = radial_prefactor(kt)?;
                        row.iter_mut().for_each(|v| *v *= pref);
                    }
                    for (li, &l) in ls.iter().enumerate() {
                        let wl = w * (2 * l + 1) as f64;
                        for a in 0..n {
                            for b in a..n {
                                out[li * dd + a * n + b] += wl * radial[a * nl + li] * radial[b * nl + li];
                            }
                        }
                    }
                }
                let mut full = vec![Complex64::new(0.0, 0.0); nl * dd];
                for li in 0..nl {
                    for a in 0..n {
                        for b in a..n {
                            let v = PREFACTOR * out[li * dd + a * n + b] / (comps[a].1 * comps[b].1 * k_f);
                            full[li * dd + a * n + b] = Complex64::new(v, 0.0);
                            full[li * dd + b * n + a] = Complex64::new(v, 0.0);
                        }
                    }
                }
                Ok(full)
            })
            .collect()
    }

    /// Coherence matrices for every shell of a discrete state.
    pub fn prepare_discrete(&self, state: &DiscreteState) -> Result<PreparedDiscrete> {
        if state.components.is_empty() {
            return Err(Error::Domain("state has no components".into()));
        }
        let masses = self.masses();
        let shells = enumerate_shells(&state.components, &masses, DEFAULT_SHELL_TOLERANCE);
        let mut matrices = Vec::with_capacity(shells.len());
        for shell in &shells {
            let comps: Vec<(usize, f64)> = shell
                .members
                .iter()
                .map(|&i| (state.components[i].nu, state.components[i].k.abs()))
                .collect();
            let dim = comps.len();
            let open: Vec<usize> = (0..dim).filter(|&a| comps[a].1 > 0.0).collect();
            if open.len() < dim {
                log::warn!("components at rest skipped in shell E_tot = {}", shell.total_energy);
            }
            let open_comps: Vec<(usize, f64)> = open.iter().map(|&a| comps[a]).collect();
            let (values, info) = if open_comps.is_empty() {
                (
                    vec![Vec::new(); self.energies.len()],
                    ConvergenceInfo::empty_converged(),
                )
            } else {
                self.converge_l(open_comps.len(), |ls| {
                    self.discrete_block(&open_comps, shell.total_energy, ls)
                })?
            };
            // embed back into the full shell dimension
            let no = open.len();
            let values = values
                .into_iter()
                .map(|m| {
                    let mut full = vec![Complex64::new(0.0, 0.0); dim * dim];
                    for (i, &a) in open.iter().enumerate() {
                        for (j, &b) in open.iter().enumerate() {
                            full[a * dim + b] = m[i * no + j];
                        }
                    }
                    full
                })
                .collect();
            matrices.push(CoherenceMatrices {
                energies: self.energies.clone(),
                dim,
                values,
                info,
            });
        }
        Ok(PreparedDiscrete {
            geometry: state.geometry(),
            shells,
            matrices,
        })
    }

    fn discrete_spectrum(&self, state: &DiscreteState, descriptor: &str) -> Result<SpectrumResult> {
        let prepared = self.prepare_discrete(state)?;
        let values = prepared.spectrum(state)?;
        Ok(spectrum_result(
            &self.energies,
            values,
            CurveMetadata::from_info(descriptor, &prepared.info()),
        ))
    }

    /// dσ/dE and σ for the molecule launched in level `nu` with relative momentum `k_i`.
    pub fn single_state_sigma(&self, nu: usize, k_i: f64) -> Result<SpectrumResult> {
        check_positive("k_i", k_i)?;
        let e_nu = self.molecule.energy(nu)?;
        let state = DiscreteState {
            components: vec![crate::kinematics::ShellComponent {
                nu,
                internal_energy: e_nu,
                k: k_i,
                big_k: 0.0,
                coeff: Complex64::new(1.0, 0.0),
            }],
        };
        self.discrete_spectrum(&state, &format!("single nu={nu} k={k_i}"))
    }

    pub fn superposition_spectrum(&self, state: &SuperpositionState) -> Result<SpectrumResult> {
        match state {
            SuperpositionState::Discrete(d) => self.discrete_spectrum(d, state.kind()),
            SuperpositionState::Packet(spec) => {
                let engine = PacketEngine::prepare(self, spec)?;
                let m = engine.matrices(spec)?;
                let values = m.matrices.spectrum(&m.coefficients(spec)?);
                Ok(spectrum_result(
                    &self.energies,
                    values,
                    CurveMetadata::from_info(state.kind(), &m.matrices.info),
                ))
            }
        }
    }

    /// σ(φ) over `phis`, reusing coherence matrices while the geometry is unchanged.
    pub fn phi_scan<F>(&self, phis: &[f64], builder: F) -> Result<SpectrumCurve>
    where
        F: Fn(f64) -> Result<SuperpositionState>,
    {
        if phis.is_empty() || phis.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("φ grid must be nonempty and increasing".into()));
        }
        let mut values = Vec::with_capacity(phis.len());
        let mut discrete: Option<PreparedDiscrete> = None;
        let mut packet: Option<(PacketSpec, PacketMatrices)> = None;
        let mut info = ConvergenceInfo::empty_converged();
        let mut descriptor = "";
        for &phi in phis {
            let state = builder(phi)?;
            descriptor = state.kind();
            match &state {
                SuperpositionState::Discrete(d) => {
                    if discrete.as_ref().is_none_or(|p| p.geometry != d.geometry()) {
                        let p = self.prepare_discrete(d)?;
                        info.merge(&p.info());
                        discrete = Some(p);
                    }
                    let spec = discrete.as_ref().expect("prepared above").spectrum(d)?;
                    values.push(integrate_spectrum(&self.energies, &spec));
                }
                SuperpositionState::Packet(spec) => {
                    let key = spec_geometry(spec);
                    if packet.as_ref().is_none_or(|(k, _)| *k != key) {
                        let engine = PacketEngine::prepare(self, spec)?;
                        let m = engine.matrices(spec)?;
                        info.merge(&m.matrices.info);
                        packet = Some((key, m));
                    }
                    let (_, m) = packet.as_ref().expect("prepared above");
                    values.push(m.matrices.total(&m.coefficients(spec)?));
                }
            }
        }
        let mut metadata = CurveMetadata::from_info(descriptor, &info);
        metadata.fit = fit_cosine(phis, &values).ok();
        Ok(SpectrumCurve {
            grid: phis.to_vec(),
            values,
            metadata,
        })
    }

    /// Σ_ν w_ν σ(ν) at relative momentum `k_i` with Boltzmann weights.
    pub fn thermal_sigma(&self, levels: &[usize], k_i: f64, temperature: f64) -> Result<ThermalResult> {
        let energies: Vec<f64> = levels
            .iter()
            .map(|&nu| self.molecule.energy(nu))
            .collect::<Result<_>>()?;
        let weights = boltzmann_weights(&energies, temperature)?;
        let sigmas: Vec<f64> = levels
            .iter()
            .map(|&nu| self.single_state_sigma(nu, k_i).map(|r| r.total))
            .collect::<Result<_>>()?;
        let total = incoherent_sigma(&weights, &sigmas)?;
        Ok(ThermalResult {
            temperature,
            levels: levels.to_vec(),
            weights,
            sigmas,
            total,
        })
    }
}

fn gl_rule(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(n.max(2)).expect("n ≥ 2"))
        .into_node_weight_pairs()
        .into_vec()
}

fn gh_rule(n: usize) -> Vec<(f64, f64)> {
    GaussHermite::new(NonZeroUsize::new(n.max(2)).expect("n ≥ 2"))
        .into_node_weight_pairs()
        .into_vec()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ThermalResult {
    pub temperature: f64,
    pub levels: Vec<usize>,
    pub weights: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub total: f64,
}

/// Weighted average Σ F σ / Σ F.
pub fn incoherent_sigma(weights: &[f64], sigmas: &[f64]) -> Result<f64> {
    if weights.len() != sigmas.len() || weights.is_empty() {
        return Err(Error::Domain("weights and cross sections must match and be nonempty".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Domain("weights must be finite and nonnegative".into()));
    }
    let norm: f64 = weights.iter().sum();
    if norm <= 0.0 {
        return Err(Error::Domain("weights are all zero".into()));
    }
    Ok(weights.iter().zip(sigmas).map(|(w, s)| w * s).sum::<f64>() / norm)
}

/// Normalized e^{−E/k_B T}; at T = 0 all weight sits on the lowest level.
pub fn boltzmann_weights(energies: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::Domain(format!("temperature must be ≥ 0, got {temperature}")));
    }
    if energies.is_empty() {
        return Err(Error::Domain("no levels to weight".into()));
    }
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = if temperature == 0.0 {
        energies.iter().map(|&e| if e == e_min { 1.0 } else { 0.0 }).collect()
    } else {
        let kt = BOLTZMANN_HARTREE_PER_K * temperature;
        energies.iter().map(|&e| (-(e - e_min) / kt).exp()).collect()
    };
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / z).collect())
}

/// Packet spec with phases stripped; two specs with the same key share coherence matrices.
fn spec_geometry(spec: &PacketSpec) -> PacketSpec {
    PacketSpec {
        internal: spec
            .internal
            .iter()
            .map(|(nu, _)| (*nu, Complex64::new(0.0, 0.0)))
            .collect(),
        ..spec.clone()
    }
}

struct TableBlock {
    ls: Vec<usize>,
    // [energy][level]
    tables: Vec<Vec<RadialTable>>,
}

/// Coherence matrices of a packet state over its internal levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketMatrices {
    pub levels: Vec<usize>,
    pub matrices: CoherenceMatrices,
}

impl PacketMatrices {
    /// Internal coefficients in level order.
    pub fn coefficients(&self, spec: &PacketSpec) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.levels.len()];
        for (nu, c) in &spec.internal {
            let i = self
                .levels
                .iter()
                .position(|l| l == nu)
                .ok_or_else(|| Error::Domain(format!("level {nu} not in the prepared packet basis")))?;
            out[i] += c;
        }
        Ok(out)
    }

    /// σ(φ) with the phase applied to the second internal component.
    pub fn phi_curve(&self, spec: &PacketSpec, phis: &[f64]) -> SpectrumCurve {
        let values: Vec<f64> = phis
            .iter()
            .map(|&phi| {
                let s = spec.with_phase(1, phi);
                self.coefficients(&s).map_or(0.0, |c| self.matrices.total(&c))
            })
            .collect();
        let mut metadata = CurveMetadata::from_info("product-packet", &self.matrices.info);
        metadata.fit = fit_cosine(phis, &values).ok();
        SpectrumCurve {
            grid: phis.to_vec(),
            values,
            metadata,
        }
    }
}

/// Interpolation tables of radial integrals for the levels of a packet state,
/// reusable across packet widths and focus offsets.
pub struct PacketEngine<'a> {
    model: &'a ScatteringModel,
    levels: Vec<usize>,
    level_energies: Vec<f64>,
    k_limit: f64,
    blocks: Vec<TableBlock>,
    info: ConvergenceInfo,
}

impl std::fmt::Debug for PacketEngine<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PacketEngine")
            .field("levels", &self.levels)
            .field("k_limit", &self.k_limit)
            .field("info", &self.info)
            .finish()
    }
}

/// Gauss–Hermite nodes reach about √(2n) standard deviations.
fn packet_reach(spec: &PacketSpec, masses: &Masses, nodes: usize) -> f64 {
    let span = (2.0 * nodes as f64).sqrt() + 1.0;
    let (k, _) = lab_to_cm(spec.electron_momentum, spec.ion_momentum, masses);
    k.abs() + span * (spec.electron_width + spec.ion_width / masses.total())
}

impl<'a> PacketEngine<'a> {
    /// Builds tables covering the reference spec at twice the configured node count
    /// and converges the partial-wave sum on it.
    pub fn prepare(model: &'a ScatteringModel, reference: &PacketSpec) -> Result<Self> {
        let masses = model.masses();
        let mut levels: Vec<usize> = Vec::new();
        for (nu, _) in &reference.internal {
            if !levels.contains(nu) {
                levels.push(*nu);
            }
        }
        let level_energies: Vec<f64> = levels
            .iter()
            .map(|&nu| model.molecule.energy(nu))
            .collect::<Result<_>>()?;
        let gap = level_energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - level_energies.iter().copied().fold(f64::INFINITY, f64::min);
        let reach = packet_reach(reference, &masses, 2 * model.options.packet_nodes);
        let k_limit = 2.0 * (reach * reach + 2.0 * masses.relative() * gap).sqrt();
        let mut engine = PacketEngine {
            model,
            levels,
            level_energies,
            k_limit,
            blocks: Vec::new(),
            info: ConvergenceInfo::default(),
        };
        let dim = engine.levels.len();
        let mut staged: Vec<TableBlock> = Vec::new();
        let nodes = gh_rule(model.options.packet_nodes);
        let (_, info) = model.converge_l(dim, |ls| {
            let block = engine.build_block(ls)?;
            let values = engine.evaluate(reference, &[&block], &nodes)?;
            staged.push(block);
            Ok(values)
        })?;
        engine.blocks = staged;
        engine.info = info;
        Ok(engine)
    }

    pub fn masses(&self) -> Masses {
        self.model.masses()
    }

    pub fn phi_points(&self) -> usize {
        self.model.options.phi_points
    }

    pub fn info(&self) -> &ConvergenceInfo {
        &self.info
    }

    fn build_block(&self, ls: &[usize]) -> Result<TableBlock> {
        let model = self.model;
        let bounds: Vec<&RadialFunction> = self
            .levels
            .iter()
            .map(|&nu| model.molecule.level(nu).map(|l| &l.wavefunction))
            .collect::<Result<_>>()?;
        let tables = model
            .energies
            .par_iter()
            .map(|&e| -> Result<Vec<RadialTable>> {
                let cont = model.continua(e, ls)?;
                let refs: Vec<&RadialFunction> = cont.iter().map(|c| &c.wavefunction).collect();
                bounds
                    .iter()
                    .map(|b| OverlapKernel::new(b, &refs).map(|k| RadialTable::build(&k, self.k_limit)))
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TableBlock { ls: ls.to_vec(), tables })
    }

    /// Per-energy values laid out [L index over all blocks][dim × dim].
    fn evaluate(&self, spec: &PacketSpec, blocks: &[&TableBlock], nodes: &[(f64, f64)]) -> Result<Vec<Vec<Complex64>>> {
        let masses = self.masses();
        let m_rel = masses.relative();
        let n = self.levels.len();
        let dd = n * n;
        let ls: Vec<usize> = blocks.iter().flat_map(|b| b.ls.iter().copied()).collect();
        let nl = ls.len();
        let (dp, d_big_p) = (spec.electron_width, spec.ion_width);
        let (k_c, _) = lab_to_cm(spec.electron_momentum, spec.ion_momentum, &masses);
        let legendre = &self.model.legendre;
        let energies = &self.model.energies;
        (0..energies.len())
            .into_par_iter()
            .map(|ie| -> Result<Vec<Complex64>> {
                let e = energies[ie];
                let mut out = vec![Complex64::new(0.0, 0.0); nl * dd];
                let mut ra = vec![0.0; nl];
                let mut rb = vec![0.0; nl];
                let mut acc = vec![0.0; nl];
                for a in 0..n {
                    for b in a..n {
                        let (ea, eb) = (self.level_energies[a], self.level_energies[b]);
                        let kc2 = k_c * k_c + 2.0 * m_rel * (ea - eb);
                        if kc2 <= 0.0 {
                            continue;
                        }
                        // shift nodes so the pair's amplitudes overlap at the center
                        let delta = k_c - kc2.sqrt().copysign(k_c);
                        for &(u, wu) in nodes {
                            for &(v, wv) in nodes {
                                let p = spec.electron_momentum + 0.5 * delta + dp * u;
                                let big_p = spec.ion_momentum - 0.5 * delta + d_big_p * v;
                                let (k, big_k) = lab_to_cm(p, big_p, &masses);
                                let kf2 = k * k + 2.0 * m_rel * (ea - e);
                                let kb2 = k * k + 2.0 * m_rel * (ea - eb);
                                if kf2 <= 0.0 || kb2 <= 0.0 || k == 0.0 {
                                    continue;
                                }
                                let kb = kb2.sqrt().copysign(k);
                                let (pb, big_pb) = cm_to_lab(kb, big_k, &masses);
                                let weight = dp * d_big_p * wu * wv * (u * u + v * v).exp();
                                let amp = spec.electron_amplitude(p)
                                    * spec.electron_amplitude(pb).conj()
                                    * (spec.ion_amplitude(big_p) * spec.ion_amplitude(big_pb) * weight);
                                if amp.norm() < 1e-300 {
                                    continue;
                                }
                                let (ka, kbm, k_f) = (k.abs(), kb.abs(), kf2.sqrt());
                                let star = s_star(ka, k_f).min(s_star(kbm, k_f));
                                acc.fill(0.0);
                                for (s, w) in angular_rule(legendre, star) {
                                    let kta = ((ka - k_f) * (ka - k_f) + 2.0 * ka * k_f * s).sqrt();
                                    let ktb = ((kbm - k_f) * (kbm - k_f) + 2.0 * kbm * k_f * s).sqrt();
                                    if kta > self.k_limit || ktb > self.k_limit {
                                        return Err(Error::Domain(format!(
                                            "momentum transfer {} beyond the prepared table range {}",
                                            kta.max(ktb),
                                            self.k_limit
                                        )));
                                    }
                                    let mut offset = 0;
                                    for blk in blocks {
                                        let m = blk.ls.len();
                                        blk.tables[ie][a].radial_integrals(kta, &mut ra[offset..offset + m])?;
                                        blk.tables[ie][b].radial_integrals(ktb, &mut rb[offset..offset + m])?;
                                        offset += m;
                                    }
                                    for (li, &l) in ls.iter().enumerate() {
                                        acc[li] += w * (2 * l + 1) as f64 * ra[li] * rb[li];
                                    }
                                }
                                let scale = amp * (PREFACTOR * k_f / kbm);
                                for li in 0..nl {
                                    out[li * dd + a * n + b] += scale * acc[li];
                                }
                            }
                        }
                        if a != b {
                            for li in 0..nl {
                                out[li * dd + b * n + a] = out[li * dd + a * n + b].conj();
                            }
                        }
                    }
                }
                Ok(out)
            })
            .collect()
    }

    fn check_reach(&self, spec: &PacketSpec, nodes: usize) -> Result<()> {
        let reach = packet_reach(spec, &self.masses(), nodes);
        if 2.0 * reach > self.k_limit {
            return Err(Error::Domain(format!(
                "packet reaches k = {reach}, beyond the prepared range {}",
                0.5 * self.k_limit
            )));
        }
        Ok(())
    }

    pub fn matrices_with_nodes(&self, spec: &PacketSpec, nodes: usize) -> Result<PacketMatrices> {
        check_positive("packet.dp", spec.electron_width)?;
        check_positive("packet.dP", spec.ion_width)?;
        self.check_reach(spec, nodes)?;
        for (nu, _) in &spec.internal {
            if !self.levels.contains(nu) {
                return Err(Error::Domain(format!("level {nu} not in the prepared packet basis")));
            }
        }
        let blocks: Vec<&TableBlock> = self.blocks.iter().collect();
        let raw = self.evaluate(spec, &blocks, &gh_rule(nodes))?;
        let n = self.levels.len();
        let dd = n * n;
        let values = raw
            .into_iter()
            .map(|v| {
                let mut m = vec![Complex64::new(0.0, 0.0); dd];
                for chunk in v.chunks(dd) {
                    for (x, y) in m.iter_mut().zip(chunk) {
                        *x += y;
                    }
                }
                m
            })
            .collect();
        Ok(PacketMatrices {
            levels: self.levels.clone(),
            matrices: CoherenceMatrices {
                energies: self.model.energies.clone(),
                dim: n,
                values,
                info: self.info.clone(),
            },
        })
    }

    pub fn matrices(&self, spec: &PacketSpec) -> Result<PacketMatrices> {
        self.matrices_with_nodes(spec, self.model.options.packet_nodes)
    }

    /// Relative change of σ and of the control depth when the packet quadrature is doubled.
    pub fn refinement(&self, spec: &PacketSpec) -> Result<(f64, f64)> {
        let n = self.model.options.packet_nodes;
        let phis = phi_grid(self.phi_points());
        let coarse = self.matrices_with_nodes(spec, n)?;
        let fine = self.matrices_with_nodes(spec, 2 * n)?;
        let sc = coarse.matrices.total(&coarse.coefficients(spec)?);
        let sf = fine.matrices.total(&fine.coefficients(spec)?);
        let dc = control_depth(&coarse.phi_curve(spec, &phis))?;
        let df = control_depth(&fine.phi_curve(spec, &phis))?;
        Ok(((sc - sf).abs() / sf.abs().max(f64::MIN_POSITIVE), (dc - df).abs() / df.abs().max(f64::MIN_POSITIVE)))
    }
}
