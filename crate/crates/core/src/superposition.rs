//! Incident superposition states and their configuration-space densities.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_positive, Error, Result};
use crate::grid::simpson;
use crate::kinematics::{cm_to_lab, solve_entangled_partner, LabState, ShellComponent};
use crate::molecular_structure::Molecule;
use crate::units::Masses;

const NORM_TOLERANCE: f64 = 1e-12;

/// Discrete superposition of on-axis plane-wave components.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteState {
    pub components: Vec<ShellComponent>,
}

impl DiscreteState {
    pub fn norm_squared(&self) -> f64 {
        self.components.iter().map(|c| c.coeff.norm_sqr()).sum()
    }

    /// Same state times a global phase.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let f = Complex64::from_polar(1.0, phase);
        DiscreteState {
            components: self
                .components
                .iter()
                .map(|c| ShellComponent { coeff: c.coeff * f, ..*c })
                .collect(),
        }
    }

    /// (ν, k, K) of every component, the data that fixes the scattering geometry.
    pub fn geometry(&self) -> Vec<(usize, f64, f64)> {
        self.components.iter().map(|c| (c.nu, c.k, c.big_k)).collect()
    }
}

/// Product of an internal superposition with Gaussian electron and ion packets.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketSpec {
    pub internal: Vec<(usize, Complex64)>,
    /// Mean electron momentum (au).
    pub electron_momentum: f64,
    pub electron_width: f64,
    /// Mean ion momentum (au).
    pub ion_momentum: f64,
    pub ion_width: f64,
    /// Focus offset τ_d (au time); the electron packet is focused at t = −τ_d.
    pub focus_offset: f64,
}

impl PacketSpec {
    /// Electron momentum amplitude including the focus-offset phase.
    pub fn electron_amplitude(&self, p: f64) -> Complex64 {
        let g = gaussian_amplitude(p, self.electron_momentum, self.electron_width);
        if self.focus_offset == 0.0 {
            return Complex64::new(g, 0.0);
        }
        let shift = self.electron_momentum * self.focus_offset;
        Complex64::from_polar(g, p * shift - 0.5 * p * p * self.focus_offset)
    }

    pub fn ion_amplitude(&self, big_p: f64) -> f64 {
        gaussian_amplitude(big_p, self.ion_momentum, self.ion_width)
    }

    pub fn with_phase(&self, index: usize, phi: f64) -> Self {
        let mut out = self.clone();
        if let Some(c) = out.internal.get_mut(index) {
            c.1 = Complex64::from_polar(c.1.norm(), phi);
        }
        out
    }
}

/// (Δ√π)^{-1/2} exp(−((p − p₀)/Δ)²/2)
pub fn gaussian_amplitude(p: f64, center: f64, width: f64) -> f64 {
    let x = (p - center) / width;
    (width * PI.sqrt()).powf(-0.5) * (-0.5 * x * x).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SuperpositionState {
    Discrete(DiscreteState),
    Packet(PacketSpec),
}

impl SuperpositionState {
    pub fn kind(&self) -> &'static str {
        match self {
            SuperpositionState::Discrete(_) => "entangled-discrete",
            SuperpositionState::Packet(_) => "product-packet",
        }
    }
}

fn check_normalized(norm: f64) -> Result<()> {
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Domain(format!("coefficients must be normalized, Σ|C|² = {norm}")));
    }
    Ok(())
}

/// C₁|ν₁, p₁, P₁⟩ + e^{iφ} C₂|ν₂, p₂, P₂⟩ with the second component on the first one's shell.
#[allow(clippy::too_many_arguments)]
pub fn build_two_state(
    molecule: &Molecule,
    nu1: usize,
    nu2: usize,
    p1: f64,
    big_p1: f64,
    phi: f64,
    c1: f64,
    c2: f64,
) -> Result<SuperpositionState> {
    check_normalized(c1 * c1 + c2 * c2)?;
    let masses = &molecule.params.masses;
    let first = LabState {
        electron: p1,
        ion: big_p1,
        nu: nu1,
        internal_energy: molecule.energy(nu1)?,
    };
    let second_coeff = Complex64::from_polar(c2, phi);
    if nu1 == nu2 {
        let sum = Complex64::new(c1, 0.0) + second_coeff;
        if sum.norm() < NORM_TOLERANCE {
            return Err(Error::Infeasible(
                "components of the same level cancel exactly".into(),
            ));
        }
        let comp = ShellComponent::from_lab(&first, sum / sum.norm(), masses);
        return Ok(SuperpositionState::Discrete(DiscreteState {
            components: vec![comp],
        }));
    }
    let second = solve_entangled_partner(&first, nu2, molecule.energy(nu2)?, masses)?;
    Ok(SuperpositionState::Discrete(DiscreteState {
        components: vec![
            ShellComponent::from_lab(&first, Complex64::new(c1, 0.0), masses),
            ShellComponent::from_lab(&second, second_coeff, masses),
        ],
    }))
}

/// Envelope over vibrational levels for shaping ⟨R⟩ at contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub center: f64,
    pub width: f64,
    pub alternate_sign: bool,
}

/// Coefficients ∝ (±1)^ν exp(−((ν − center)/width)²) over ν = 0..=nu_max, every component
/// on the shell fixed by relative momentum `k0` at ν = 0.
pub fn build_envelope_state(
    molecule: &Molecule,
    nu_max: usize,
    envelope: Envelope,
    k0: f64,
) -> Result<SuperpositionState> {
    check_positive("envelope width", envelope.width)?;
    check_positive("k0", k0)?;
    let masses = &molecule.params.masses;
    let m_rel = masses.relative();
    let e0 = molecule.energy(0)?;
    let total = k0 * k0 / (2.0 * m_rel) + e0;
    // ion at rest for the anchor component
    let big_k = k0 * masses.total() / masses.ion();
    let top = nu_max.min(molecule.levels.len() - 1);
    if top < nu_max {
        log::warn!("envelope basis truncated to ν ≤ {top}");
    }
    let mut raw = Vec::new();
    for nu in 0..=top {
        let e_nu = molecule.energy(nu)?;
        let k_sq = 2.0 * m_rel * (total - e_nu);
        if k_sq < 0.0 {
            log::warn!("level {nu} closed at k0 = {k0}; dropped from the envelope");
            continue;
        }
        let x = (nu as f64 - envelope.center) / envelope.width;
        let sign = if envelope.alternate_sign && nu % 2 == 1 { -1.0 } else { 1.0 };
        raw.push((nu, e_nu, k_sq.sqrt(), -x * x, sign));
    }
    if raw.is_empty() {
        return Err(Error::Infeasible("no envelope component is kinematically open".into()));
    }
    let peak = raw.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    let norm = raw.iter().map(|r| (2.0 * (r.3 - peak)).exp()).sum::<f64>().sqrt();
    let components = raw
        .into_iter()
        .map(|(nu, e_nu, k, log_w, sign)| ShellComponent {
            nu,
            internal_energy: e_nu,
            k,
            big_k,
            coeff: Complex64::new(sign * (log_w - peak).exp() / norm, 0.0),
        })
        .collect();
    Ok(SuperpositionState::Discrete(DiscreteState { components }))
}

/// Internal superposition × Gaussian electron packet × Gaussian ion packet.
pub fn build_packet_state(
    internal: Vec<(usize, Complex64)>,
    p0: f64,
    dp: f64,
    big_p0: f64,
    d_big_p: f64,
    tau_d: f64,
) -> Result<SuperpositionState> {
    check_positive("packet.dp", dp)?;
    check_positive("packet.dP", d_big_p)?;
    if !(p0.is_finite() && big_p0.is_finite() && tau_d.is_finite()) {
        return Err(Error::Domain("packet momenta and focus offset must be finite".into()));
    }
    if internal.is_empty() {
        return Err(Error::Domain("packet needs at least one internal level".into()));
    }
    check_normalized(internal.iter().map(|c| c.1.norm_sqr()).sum())?;
    Ok(SuperpositionState::Packet(PacketSpec {
        internal,
        electron_momentum: p0,
        electron_width: dp,
        ion_momentum: big_p0,
        ion_width: d_big_p,
        focus_offset: tau_d,
    }))
}

/// (|ν₁⟩ + e^{iφ}|ν₂⟩)/√2
pub fn two_level_internal(nu1: usize, nu2: usize, phi: f64) -> Vec<(usize, Complex64)> {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        (nu1, Complex64::new(c, 0.0)),
        (nu2, Complex64::from_polar(c, phi)),
    ]
}

/// Configuration-space density on an (R, x) grid, row-major in R.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityMap {
    pub fn at(&self, i_r: usize, i_x: usize) -> f64 {
        self.values[i_r * self.x.len() + i_x]
    }
}

/// Evenly spaced window including both ends.
pub fn window(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// |Σ C χ_ν(R) e^{ikx}/√(2π)|² for a discrete state.
pub fn density_map(molecule: &Molecule, state: &DiscreteState, r: &[f64], x: &[f64]) -> Result<DensityMap> {
    for c in &state.components {
        molecule.level(c.nu)?;
    }
    let inv = 1.0 / (2.0 * PI).sqrt();
    let params = &molecule.params;
    let mut values = Vec::with_capacity(r.len() * x.len());
    for &rr in r {
        let radial: Vec<Complex64> = state
            .components
            .iter()
            .map(|c| c.coeff * params.morse_wavefunction(c.nu, rr) * inv)
            .collect();
        for &xx in x {
            let amp: Complex64 = state
                .components
                .iter()
                .zip(&radial)
                .map(|(c, a)| a * Complex64::from_polar(1.0, c.k * xx))
                .sum();
            values.push(amp.norm_sqr());
        }
    }
    Ok(DensityMap {
        r: r.to_vec(),
        x: x.to_vec(),
        values,
    })
}

/// Density of a packet state at time `t`: the internal density times the density of
/// the electron-ion separation.
pub fn packet_density_map(
    molecule: &Molecule,
    spec: &PacketSpec,
    t: f64,
    r: &[f64],
    x: &[f64],
) -> Result<DensityMap> {
    use crate::collision_timing::GaussianPacket1D;
    let masses = &molecule.params.masses;
    let (elec, ion) = GaussianPacket1D::pair_from_spec(spec, masses);
    let d_mean = elec.center_at(t) - ion.center_at(t);
    let d_var = elec.variance_at(t) + ion.variance_at(t);
    let mut energies = Vec::with_capacity(spec.internal.len());
    for (nu, _) in &spec.internal {
        energies.push(molecule.energy(*nu)?);
    }
    let params = &molecule.params;
    let mut values = Vec::with_capacity(r.len() * x.len());
    for &rr in r {
        let internal: Complex64 = spec
            .internal
            .iter()
            .zip(&energies)
            .map(|((nu, c), e)| c * Complex64::from_polar(params.morse_wavefunction(*nu, rr), -e * t))
            .sum();
        let w = internal.norm_sqr();
        for &xx in x {
            let z = xx - d_mean;
            values.push(w * (-0.5 * z * z / d_var).exp() / (2.0 * PI * d_var).sqrt());
        }
    }
    Ok(DensityMap {
        r: r.to_vec(),
        x: x.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactSlice {
    pub r: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub mean_r: f64,
}

/// Ψ(R, x = 0) = Σ C χ_ν(R) and its ⟨R⟩.
pub fn contact_slice(molecule: &Molecule, state: &DiscreteState) -> Result<ContactSlice> {
    let grid = molecule.grid;
    let mut amplitude = vec![Complex64::new(0.0, 0.0); grid.len()];
    for c in &state.components {
        let level = molecule.level(c.nu)?;
        for (a, v) in amplitude.iter_mut().zip(&level.wavefunction.values) {
            *a += c.coeff * v;
        }
    }
    let dens: Vec<f64> = amplitude.iter().map(|a| a.norm_sqr()).collect();
    let norm = simpson(&dens, grid.dr());
    if norm < NORM_TOLERANCE * state.norm_squared().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateSlice);
    }
    let weighted: Vec<f64> = dens.iter().enumerate().map(|(i, d)| grid.r(i) * d).collect();
    Ok(ContactSlice {
        r: grid.points().collect(),
        amplitude,
        mean_r: simpson(&weighted, grid.dr()) / norm,
    })
}

/// Lab momenta of every component; convenient for reporting.
pub fn lab_momenta(state: &DiscreteState, masses: &Masses) -> Vec<(usize, f64, f64)> {
    state
        .components
        .iter()
        .map(|c| {
            let (p, big_p) = cm_to_lab(c.k, c.big_k, masses);
            (c.nu, p, big_p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::kinematics::{enumerate_shells, DEFAULT_SHELL_TOLERANCE};
    use crate::molecular_structure::PotentialParams;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn molecule() -> Molecule {
        Molecule::new(PotentialParams::default(), RadialGrid::new(0.2, 40.0, 0.01).unwrap()).unwrap()
    }

    fn discrete(s: SuperpositionState) -> DiscreteState {
        match s {
            SuperpositionState::Discrete(d) => d,
            _ => panic!("expected discrete state"),
        }
    }

    #[test]
    fn fig1_state_is_one_shell() {
        let m = molecule();
        let s = discrete(build_two_state(&m, 0, 1, 4.0, 0.0, 0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap());
        assert_eq!(s.components.len(), 2);
        assert!((s.norm_squared() - 1.0).abs() < 1e-12);
        let shells = enumerate_shells(&s.components, &m.params.masses, DEFAULT_SHELL_TOLERANCE);
        assert_eq!(shells.len(), 1);
        assert_eq!(shells[0].members, vec![0, 1]);
    }

    #[test]
    fn unnormalized_coefficients_rejected() {
        let m = molecule();
        assert!(build_two_state(&m, 0, 1, 4.0, 0.0, 0.0, 0.8, 0.8).is_err());
    }

    #[test]
    fn same_level_collapses() {
        let m = molecule();
        let s = discrete(build_two_state(&m, 2, 2, 4.0, 0.0, 1.1, 0.6, 0.8).unwrap());
        assert_eq!(s.components.len(), 1);
        assert!((s.components[0].coeff.norm() - 1.0).abs() < 1e-12);
        let expect = Complex64::new(0.6, 0.0) + Complex64::from_polar(0.8, 1.1);
        assert!((s.components[0].coeff.arg() - expect.arg()).abs() < 1e-12);
    }

    #[test]
    fn single_component_density_is_flat_in_x() {
        let m = molecule();
        let s = discrete(build_two_state(&m, 3, 3, 4.0, 0.0, 0.0, 1.0, 0.0).unwrap());
        let r = window(1.0, 4.0, 7);
        let x = window(-5.0, 5.0, 9);
        let map = density_map(&m, &s, &r, &x).unwrap();
        for (i, &rr) in r.iter().enumerate() {
            let expect = m.params.morse_wavefunction(3, rr).powi(2) / (2.0 * PI);
            for j in 0..x.len() {
                assert!((map.at(i, j) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn equal_level_beat_period() {
        let m = molecule();
        let (k1, k2) = (4.0, 3.7);
        let c = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let s = DiscreteState {
            components: vec![
                ShellComponent { nu: 0, internal_energy: m.energy(0).unwrap(), k: k1, big_k: 4.0, coeff: c },
                ShellComponent { nu: 0, internal_energy: m.energy(0).unwrap(), k: k2, big_k: 4.0, coeff: c },
            ],
        };
        let period = 2.0 * PI / (k1 - k2);
        let x = [0.0, period, 0.5 * period];
        let map = density_map(&m, &s, &[2.0], &x).unwrap();
        assert!((map.at(0, 0) - map.at(0, 1)).abs() < 1e-12 * map.at(0, 0));
        assert!(map.at(0, 2) < 1e-12 * map.at(0, 0));
    }

    #[test]
    fn contact_slice_phase_dependence() {
        let m = molecule();
        let s0 = discrete(build_two_state(&m, 0, 1, 4.0, 0.0, 0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap());
        let sp = discrete(build_two_state(&m, 0, 1, 4.0, 0.0, PI, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap());
        let s2 = discrete(build_two_state(&m, 0, 1, 4.0, 0.0, 2.0 * PI, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap());
        let r0 = contact_slice(&m, &s0).unwrap().mean_r;
        let rp = contact_slice(&m, &sp).unwrap().mean_r;
        assert!(rp > r0, "{rp} vs {r0}");
        let a = contact_slice(&m, &s0).unwrap();
        let b = contact_slice(&m, &s2).unwrap();
        for (x, y) in a.amplitude.iter().zip(&b.amplitude) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_slice_detected() {
        let m = molecule();
        let e0 = m.energy(0).unwrap();
        let s = DiscreteState {
            components: vec![
                ShellComponent { nu: 0, internal_energy: e0, k: 4.0, big_k: 4.0, coeff: Complex64::new(FRAC_1_SQRT_2, 0.0) },
                ShellComponent { nu: 0, internal_energy: e0, k: 3.0, big_k: 4.0, coeff: Complex64::new(-FRAC_1_SQRT_2, 0.0) },
            ],
        };
        assert!(matches!(contact_slice(&m, &s), Err(Error::DegenerateSlice)));
    }

    #[test]
    fn narrow_envelope_is_single_level() {
        let m = molecule();
        let env = Envelope { center: 6.0, width: 1e-3, alternate_sign: false };
        let s = discrete(build_envelope_state(&m, 17, env, 4.0).unwrap());
        let slice = contact_slice(&m, &s).unwrap();
        let single = crate::molecular_structure::bound_expectation_r(&m.levels[6]).unwrap();
        assert!((slice.mean_r - single).abs() < 1e-9);
    }

    #[test]
    fn envelope_drops_closed_levels() {
        let m = molecule();
        let env = Envelope { center: 7.0, width: 6.0, alternate_sign: false };
        let s = discrete(build_envelope_state(&m, 17, env, 0.3).unwrap());
        assert!(s.components.len() < 18);
        assert!((s.norm_squared() - 1.0).abs() < 1e-12);
        let shells = enumerate_shells(&s.components, &m.params.masses, DEFAULT_SHELL_TOLERANCE);
        assert_eq!(shells.len(), 1);
    }

    #[test]
    fn packet_validation() {
        let internal = two_level_internal(0, 1, 0.0);
        assert!(build_packet_state(internal.clone(), 4.0, 0.01, 0.0, 1.0, 0.0).is_ok());
        assert!(build_packet_state(internal.clone(), 4.0, -0.01, 0.0, 1.0, 0.0).is_err());
        assert!(build_packet_state(internal, 4.0, 0.01, 0.0, 0.0, 0.0).is_err());
        let bad = vec![(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(1.0, 0.0))];
        assert!(build_packet_state(bad, 4.0, 0.01, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn packet_map_integrates_to_internal_norm() {
        let m = molecule();
        let spec = match build_packet_state(two_level_internal(0, 1, 0.4), 4.0, 0.3, 0.0, 1.0, 0.0).unwrap() {
            SuperpositionState::Packet(p) => p,
            _ => unreachable!(),
        };
        let r = window(0.2, 12.0, 591);
        let x = window(-20.0, 20.0, 801);
        let map = packet_density_map(&m, &spec, 0.0, &r, &x).unwrap();
        let dr = r[1] - r[0];
        let dx = x[1] - x[0];
        let total: f64 = map.values.iter().sum::<f64>() * dr * dx;
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
}
